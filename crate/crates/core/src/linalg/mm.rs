//! Coordinate-format text I/O (`%%MatrixMarket matrix coordinate real general`,
//! 1-based indices). Vectors are stored as n-by-1 matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Serializes the nonzeros of `a`. An all-zero matrix still records its shape.
pub fn to_string(a: &DenseMatrix) -> String {
    let nnz = a.as_slice().iter().filter(|v| **v != 0.0).count();
    let mut s = String::with_capacity(32 * (nnz + 2));
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "{} {} {}", a.rows(), a.cols(), nnz);
    for i in 0..a.rows() {
        for (j, &v) in a.row(i).iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
            }
        }
    }
    s
}

pub fn parse(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let banner: Vec<String> = first
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if banner.len() < 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: "missing MatrixMarket banner".into(),
        });
    }
    if banner[2] != "coordinate" || banner[3] != "real" || banner[4] != "general" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported format '{}'", first.trim()),
        });
    }
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (ln, size) = body.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let dims = numbers::<usize>(size, ln)?;
    if dims.len() != 3 {
        return Err(Error::Parse {
            line: ln + 1,
            msg: "size line needs rows cols nnz".into(),
        });
    }
    let (rows, cols, nnz) = (dims[0], dims[1], dims[2]);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse {
            line: ln + 1,
            msg: format!("empty shape {rows}x{cols}"),
        });
    }
    let mut a = DenseMatrix::zeros(rows, cols);
    let mut seen = 0;
    for (ln, line) in body {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: ln + 1,
                msg: "entry needs row col value".into(),
            });
        }
        let bad = |msg: String| Error::Parse { line: ln + 1, msg };
        let i: usize = parts[0]
            .parse()
            .map_err(|e| bad(format!("row index: {e}")))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|e| bad(format!("column index: {e}")))?;
        let v: f64 = parts[2].parse().map_err(|e| bad(format!("value: {e}")))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(bad(format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        a[(i - 1, j - 1)] += v;
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: 2,
            msg: format!("declared {nnz} entries, found {seen}"),
        });
    }
    Ok(a)
}

fn numbers<T: std::str::FromStr>(line: &str, ln: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    line.split_whitespace()
        .map(|t| {
            t.parse::<T>().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn write(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    fs::write(path, to_string(a))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse(&fs::read_to_string(path)?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write(path, &DenseMatrix::column(v))
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let a = read(path)?;
    if a.cols() != 1 {
        return Err(Error::Dimension(format!(
            "expected a column, found {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = DenseMatrix::from_rows(&[[1.5, 0.0, -2.0], [0.0, 0.0, 1e-17]]);
        let back = parse(&to_string(&a)).unwrap();
        assert_eq!(back, a);
        let z = DenseMatrix::zeros(3, 2);
        assert_eq!(parse(&to_string(&z)).unwrap(), z);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse("").is_err());
        assert!(parse("%%MatrixMarket matrix array real general\n1 1\n1\n").is_err());
        let out_of_range = format!("{HEADER}\n2 2 1\n3 1 1.0\n");
        assert!(matches!(
            parse(&out_of_range),
            Err(Error::Parse { line: 3, .. })
        ));
        let short = format!("{HEADER}\n2 2 2\n1 1 1.0\n");
        assert!(parse(&short).is_err());
    }

    #[test]
    fn comments_and_duplicates() {
        let text = format!("{HEADER}\n% comment\n2 2 3\n1 1 1.0\n1 1 2.0\n2 2 -1\n");
        let a = parse(&text).unwrap();
        assert_eq!(a, DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, -1.0]]));
    }
}
