//! Marker-and-cell finite differences for the Oseen problem on the unit
//! square with the leaky-lid cavity data.
//!
//! Unknown layout: `u` on vertical interior edges `(i h, (j+½) h)` for
//! `i = 1..l-1`, `j = 0..l-1`; `v` on horizontal interior edges
//! `((i+½) h, j h)` for `i = 0..l-1`, `j = 1..l-1`; pressures at cell
//! centres. All three are ordered with `i` running fastest.

use super::{SaddleSystem, SystemMeta};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Prescribed convection field `(a, b)`.
pub fn wind(x: f64, y: f64) -> (f64, f64) {
    (
        8.0 * x * (x - 1.0) * (1.0 - 2.0 * y),
        8.0 * y * (2.0 * x - 1.0) * (y - 1.0),
    )
}

const NEIGHBOURS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Velocity component being discretized.
#[derive(Clone, Copy)]
enum Component {
    U,
    V,
}

struct Grid {
    l: usize,
    h: f64,
    nu: f64,
}

impl Grid {
    fn count(&self) -> usize {
        self.l * (self.l - 1)
    }

    // Index of the node (i, j) of component `c`, or None when (i, j) falls on
    // or beyond the boundary.
    fn index(&self, c: Component, i: isize, j: isize) -> Option<usize> {
        let l = self.l as isize;
        match c {
            Component::U if (1..l).contains(&i) && (0..l).contains(&j) => {
                Some((j * (l - 1) + i - 1) as usize)
            }
            Component::V if (0..l).contains(&i) && (1..l).contains(&j) => {
                Some(((j - 1) * l + i) as usize)
            }
            _ => None,
        }
    }

    fn position(&self, c: Component, i: isize, j: isize) -> (f64, f64) {
        let h = self.h;
        match c {
            Component::U => (i as f64 * h, (j as f64 + 0.5) * h),
            Component::V => ((i as f64 + 0.5) * h, j as f64 * h),
        }
    }

    /// Diffusion plus skew centred convection for one velocity component.
    /// Returns the block and the boundary contribution to the load.
    fn convection_diffusion(&self, c: Component) -> (DenseMatrix, Vec<f64>) {
        let (l, h, nu) = (self.l as isize, self.h, self.nu);
        let k = self.count();
        let mut f_block = DenseMatrix::zeros(k, k);
        let mut load = vec![0.0; k];
        let diffusion = nu / (h * h);
        let (i_range, j_range) = match c {
            Component::U => (1..l, 0..l),
            Component::V => (0..l, 1..l),
        };
        for j in j_range {
            for i in i_range.clone() {
                let p = self.index(c, i, j).expect("interior node");
                let (x, y) = self.position(c, i, j);
                f_block[(p, p)] += 4.0 * diffusion;
                for (di, dj) in NEIGHBOURS {
                    // The wind is sampled midway between the two nodes, which
                    // makes the convection matrix exactly skew-symmetric.
                    let (a, b) = wind(x + di as f64 * h / 2.0, y + dj as f64 * h / 2.0);
                    let coef = -diffusion + (a * di as f64 + b * dj as f64) / (2.0 * h);
                    let (ii, jj) = (i + di, j + dj);
                    if let Some(q) = self.index(c, ii, jj) {
                        f_block[(p, q)] += coef;
                        continue;
                    }
                    let normal_wall = match c {
                        Component::U => ii == 0 || ii == l,
                        Component::V => jj == 0 || jj == l,
                    };
                    if normal_wall {
                        // Node sits on the wall: homogeneous Dirichlet value.
                        continue;
                    }
                    // Tangential wall half a cell away: ghost value 2 g - u_P.
                    let g = match c {
                        Component::U if jj == l => 1.0,
                        _ => 0.0,
                    };
                    f_block[(p, p)] -= coef;
                    load[p] -= 2.0 * g * coef;
                }
            }
        }
        (f_block, load)
    }
}

/// Discrete Oseen system on an `l`-by-`l` grid with viscosity `nu`. The
/// right-hand side is the assembled load with `g = 0`, which lies in the
/// range of the coefficient matrix.
pub fn build_oseen(l: usize, nu: f64) -> Result<SaddleSystem> {
    if l < 4 {
        return Err(Error::GridTooCoarse(l));
    }
    if nu <= 0.0 || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    let grid = Grid {
        l,
        h: 1.0 / l as f64,
        nu,
    };
    let k = grid.count();
    let (n, m) = (2 * k, l * l);

    let (f1, load1) = grid.convection_diffusion(Component::U);
    let (f2, load2) = grid.convection_diffusion(Component::V);
    let mut w = DenseMatrix::zeros(n, n);
    w.set_block(0, 0, &f1);
    w.set_block(k, k, &f2);
    let mut f = load1;
    f.extend(load2);

    // B is minus the discrete divergence, so Bᵀ is the discrete gradient.
    let mut b = DenseMatrix::zeros(m, n);
    let inv_h = 1.0 / grid.h;
    let li = l as isize;
    for cj in 0..li {
        for ci in 0..li {
            let r = (cj * li + ci) as usize;
            if let Some(q) = grid.index(Component::U, ci + 1, cj) {
                b[(r, q)] -= inv_h;
            }
            if let Some(q) = grid.index(Component::U, ci, cj) {
                b[(r, q)] += inv_h;
            }
            if let Some(q) = grid.index(Component::V, ci, cj + 1) {
                b[(r, k + q)] -= inv_h;
            }
            if let Some(q) = grid.index(Component::V, ci, cj) {
                b[(r, k + q)] += inv_h;
            }
        }
    }

    let meta = SystemMeta {
        l: Some(l),
        nu: Some(nu),
        h: Some(grid.h),
    };
    SaddleSystem::new(w, b, f, vec![0.0; m], meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, numerical_rank, DEFAULT_RANK_TOL};

    #[test]
    fn dimensions_and_rank() {
        for l in [4, 8] {
            let sys = build_oseen(l, 0.1).unwrap();
            assert_eq!(sys.n(), 2 * l * (l - 1));
            assert_eq!(sys.m(), l * l);
            assert_eq!(
                numerical_rank(sys.b(), DEFAULT_RANK_TOL).unwrap(),
                l * l - 1
            );
            assert!(cholesky(&sys.split().h).is_ok());
        }
        assert_eq!(build_oseen(3, 0.1).unwrap_err(), Error::GridTooCoarse(3));
        assert!(build_oseen(4, 0.0).is_err());
    }

    #[test]
    fn convection_is_skew() {
        // With nu -> 0 the only symmetric contributions are the ghost-node
        // diagonal corrections from the convection coefficients.
        let l = 8;
        let s1 = build_oseen(l, 1.0).unwrap();
        let s2 = build_oseen(l, 2.0).unwrap();
        let n_part = s1.w().scale(2.0).sub(s2.w()).unwrap();
        let off = n_part.add(&n_part.transpose()).unwrap();
        for i in 0..off.rows() {
            for j in 0..off.cols() {
                if i != j {
                    assert!(off[(i, j)].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_pressure_in_gradient_kernel() {
        let sys = build_oseen(8, 0.1).unwrap();
        let ones = vec![1.0; sys.m()];
        let g = sys.b().matvec_t(&ones).unwrap();
        assert!(crate::linalg::norm2(&g) <= 1e-10 * sys.b().frobenius_norm());
    }

    #[test]
    fn lid_drives_only_top_row_of_u() {
        let l = 6;
        let sys = build_oseen(l, 1.0).unwrap();
        let k = l * (l - 1);
        for (idx, &v) in sys.f().iter().enumerate() {
            let top_u = idx < k && idx / (l - 1) == l - 1;
            assert_eq!(v != 0.0, top_u, "index {idx}");
        }
    }
}
