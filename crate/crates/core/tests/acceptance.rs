//! Acceptance criteria 1-9. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddlekit::analysis::{
    gcp_convergence_indicator, norm_certificates, omega_bound_symmetric, omega_bound_triangular,
    pd_bound, projection_spectrum,
};
use saddlekit::experiment::{
    cavity_system, log_grid, run_table, table_csv, Case, Rhs, Scope, Table,
};
use saddlekit::linalg::{numerical_rank, pinv, spectral_norm, DenseMatrix, DEFAULT_RANK_TOL};
use saddlekit::precond::{Family, PChoice, PinvRank, Preconditioner, Workspace};
use saddlekit::problem::{build_oseen, build_random_singular, split, SaddleSystem};
use saddlekit::solvers::{omega_sweep_in, solve, SolveConfig, Solver};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_res(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let rows = rng.gen_range(1..=40);
        let cols = rng.gen_range(1..=40);
        let k = rng.gen_range(1..=rows.min(cols));
        let g = DenseMatrix::from_fn(rows, k, |_, _| rng.gen_range(-1.0..1.0));
        let h = DenseMatrix::from_fn(k, cols, |_, _| rng.gen_range(-1.0..1.0));
        let a = g.matmul(&h).unwrap();
        let x = pinv(&a, DEFAULT_RANK_TOL).unwrap();
        let ax = a.matmul(&x).unwrap();
        let xa = x.matmul(&a).unwrap();
        let r = [
            rel_res(&ax.matmul(&a).unwrap(), &a),
            rel_res(&xa.matmul(&x).unwrap(), &x),
            rel_res(&ax.transpose(), &ax),
            rel_res(&xa.transpose(), &xa),
        ];
        worst = r.iter().fold(worst, |m, &v| m.max(v));
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && t < Duration::from_secs(30),
        format!(
            "worst Penrose residual {worst:.2e} over 200 matrices in {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = rng.gen_range(3..=12);
        let m = rng.gen_range(2..=n.min(6));
        let r = rng.gen_range(1..m);
        let sys = build_random_singular(n, m, r, 100 + k).unwrap();
        let ws = Workspace::new(&sys);
        let choices = [
            PChoice::symmetric_scaled(rng.gen_range(0.3..4.0)),
            PChoice::triangular_split(rng.gen_range(0.05..0.95) * ws.pd_bound().unwrap().min(10.0)),
        ];
        for choice in choices {
            let pc = Preconditioner::build_in(&ws, Family::Constraint, choice, PinvRank::default())
                .unwrap();
            let d = sys.dim();
            let dense = pinv(&pc.assemble(), DEFAULT_RANK_TOL).unwrap();
            let mut applied = DenseMatrix::zeros(d, d);
            for j in 0..d {
                applied.set_col(j, &pc.apply(&unit(d, j)).unwrap());
            }
            worst = worst.max(rel_res(&applied, &dense));
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-8 && t < Duration::from_secs(60),
        format!(
            "worst relative deviation {worst:.2e} over 50 systems x 2 P kinds in {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for l in [4, 8] {
        let sys = build_oseen(l, 0.1).unwrap();
        let rank = numerical_rank(sys.b(), DEFAULT_RANK_TOL).unwrap();
        for omega in [1.0, 2.5] {
            let pc =
                Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(omega))
                    .unwrap();
            let (ones, zeros, dev) = projection_spectrum(&sys, &pc).unwrap();
            let ok = dev <= 1e-8 && ones == sys.n() - rank && zeros == rank;
            pass &= ok;
            parts.push(format!(
                "l={l} w={omega}: ones {ones} zeros {zeros} (rank B {rank}) dev {dev:.1e}"
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = SolveConfig {
        tol: 1e-6,
        max_iters: 2000,
        ..SolveConfig::default()
    };
    let (mut agree, mut excluded, mut mismatches) = (0, 0, Vec::new());
    let (mut n_conv, mut n_div) = (0, 0);
    for k in 0..100u64 {
        let n = rng.gen_range(4..=12);
        let m = rng.gen_range(2..=n.min(6));
        let r = rng.gen_range(1..m);
        let sys = build_random_singular(n, m, r, 400 + k).unwrap();
        let ws = Workspace::new(&sys);
        let choice = if rng.gen_bool(0.5) {
            PChoice::symmetric_scaled(rng.gen_range(-2.0f64..2.0).exp())
        } else {
            PChoice::triangular_split(rng.gen_range(0.02..0.98) * ws.pd_bound().unwrap().min(10.0))
        };
        let pc =
            Preconditioner::build_in(&ws, Family::Constraint, choice, PinvRank::default()).unwrap();
        let gamma = gcp_convergence_indicator(&sys, &pc).unwrap();
        if (gamma - 1.0).abs() <= 1e-6 {
            excluded += 1;
            continue;
        }
        let converged = matches!(solve(&sys, &pc, Solver::Gcp, &cfg), Ok(r) if r.converged);
        if gamma < 1.0 {
            n_conv += 1;
        } else {
            n_div += 1;
        }
        if converged == (gamma < 1.0) {
            agree += 1;
        } else {
            mismatches.push(format!("#{k} gamma {gamma:.6} converged {converged}"));
        }
    }
    let mut detail = format!(
        "{agree} agree ({n_conv} with gamma < 1, {n_div} with gamma > 1), {excluded} borderline excluded"
    );
    if !mismatches.is_empty() {
        detail.push_str(&format!("; mismatches: {}", mismatches.join(", ")));
    }
    outcome(mismatches.is_empty(), detail)
}

fn norm_ratio(sys: &SaddleSystem) -> f64 {
    let sp = split(sys.w());
    spectral_norm(&sp.s).unwrap() / spectral_norm(&sp.h).unwrap()
}

fn criterion_5() -> Outcome {
    let reference = [(16, 0.1, 0.1272), (16, 0.001, 12.7235), (32, 0.001, 7.0337)];
    let mut primary = true;
    let mut parts = Vec::new();
    for (l, nu, want) in reference {
        let got = norm_ratio(&build_oseen(l, nu).unwrap());
        let dev = (got - want).abs() / want;
        primary &= dev <= 0.02;
        parts.push(format!(
            "l={l} nu={nu}: {got:.4} vs {want} ({:+.1}%)",
            100.0 * (got - want) / want
        ));
    }
    let mut fallback = true;
    for l in [16, 32] {
        let scaled: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&nu| nu * norm_ratio(&build_oseen(l, nu).unwrap()))
            .collect();
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        let spread = (hi - lo) / lo;
        let rank = numerical_rank(build_oseen(l, 0.1).unwrap().b(), DEFAULT_RANK_TOL).unwrap();
        fallback &= spread <= 0.01 && rank == l * l - 1;
        parts.push(format!(
            "l={l}: nu*ratio spread {:.2e}, rank B {rank} (want {})",
            spread,
            l * l - 1
        ));
    }
    let how = if primary {
        "reference values within 2%"
    } else {
        "reference values missed; fallback"
    };
    outcome(primary || fallback, format!("{how}: {}", parts.join("; ")))
}

fn gcp_iters(sys: &SaddleSystem, case: Case, omega: f64) -> Result<Option<usize>, String> {
    let pc =
        Preconditioner::build(sys, case.family(), case.choice(omega)).map_err(|e| e.to_string())?;
    match solve(sys, &pc, case.stationary_solver(), &SolveConfig::default()) {
        Ok(r) if r.converged => Ok(Some(r.iterations)),
        Ok(_) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

fn describe(r: &Result<Option<usize>, String>) -> String {
    match r {
        Ok(Some(it)) => format!("IT {it}"),
        Ok(None) => "no convergence".into(),
        Err(e) => format!("failed: {e}"),
    }
}

fn cavity(nu: f64) -> SaddleSystem {
    cavity_system(16, nu, Rhs::Manufactured, 0).unwrap()
}

fn criterion_6() -> Outcome {
    let cfg = SolveConfig::default();
    let s01 = cavity(0.1);
    let s0001 = cavity(0.001);
    let mut pass = true;
    let mut parts = Vec::new();

    let c1 = gcp_iters(&s01, Case::I, 1.0);
    let ok = matches!(c1, Ok(Some(it)) if (6..=30).contains(&it));
    pass &= ok;
    parts.push(format!(
        "Case I nu=0.1 w=1.0 {} [{}]",
        describe(&c1),
        if ok { "ok" } else { "FAIL" }
    ));

    let c2 = gcp_iters(&s0001, Case::II, 0.08);
    let ok = matches!(c2, Ok(Some(it)) if (100..=500).contains(&it));
    pass &= ok;
    parts.push(format!(
        "Case II nu=0.001 w=0.08 {} [{}]",
        describe(&c2),
        if ok { "ok" } else { "FAIL" }
    ));

    let grid = log_grid();
    let mut must_fail = vec![(0.001, Case::I)];
    for nu in [0.1, 0.001] {
        for case in [Case::III, Case::IV, Case::V, Case::VI] {
            must_fail.push((nu, case));
        }
    }
    let mut converged_cells = Vec::new();
    for (nu, case) in must_fail {
        let sys = if nu == 0.1 { &s01 } else { &s0001 };
        let ws = Workspace::new(sys);
        let res = omega_sweep_in(
            &ws,
            case.family(),
            &case.p_kind(),
            &grid,
            case.stationary_solver(),
            &cfg,
            PinvRank::default(),
        )
        .unwrap();
        if let Some(w) = res.best_omega {
            converged_cells.push(format!("Case {case} nu={nu} w={w}"));
        }
    }
    pass &= converged_cells.is_empty();
    if converged_cells.is_empty() {
        parts.push("Case I nu=0.001 and Cases III-VI fail on the log grid [ok]".into());
    } else {
        parts.push(format!(
            "unexpected convergence: {} [FAIL]",
            converged_cells.join(", ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn krylov_iters(
    sys: &SaddleSystem,
    case: Case,
    omega: f64,
    solver: Solver,
) -> Result<Option<usize>, String> {
    let pc =
        Preconditioner::build(sys, case.family(), case.choice(omega)).map_err(|e| e.to_string())?;
    match solve(sys, &pc, solver, &SolveConfig::default()) {
        Ok(r) if r.converged => Ok(Some(r.iterations)),
        Ok(_) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_7() -> Outcome {
    let s01 = cavity(0.1);
    let s0001 = cavity(0.001);
    let mut pass = true;
    let mut parts = Vec::new();
    for (solver, omega, expected) in [(Solver::Gmres, 1.5, 14.0), (Solver::Qmr, 1.52, 11.0)] {
        let r = krylov_iters(&s01, Case::I, omega, solver);
        let ok =
            matches!(r, Ok(Some(it)) if it as f64 >= expected / 2.0 && it as f64 <= expected * 2.0);
        pass &= ok;
        parts.push(format!(
            "{solver} Case I nu=0.1 w={omega} {} [{}]",
            describe(&r),
            if ok { "ok" } else { "FAIL" }
        ));
    }
    for (solver, w1, w2) in [(Solver::Gmres, 26.4, 0.04), (Solver::Qmr, 24.1, 0.06)] {
        let i1 = krylov_iters(&s0001, Case::I, w1, solver);
        let i2 = krylov_iters(&s0001, Case::II, w2, solver);
        // Case II must converge, and in strictly fewer steps when Case I does.
        let ok = match (&i1, &i2) {
            (Ok(Some(a)), Ok(Some(b))) => b < a,
            (_, Ok(Some(_))) => true,
            _ => false,
        };
        pass &= ok;
        parts.push(format!(
            "{solver} nu=0.001 Case I w={w1} {} vs Case II w={w2} {} [{}]",
            describe(&i1),
            describe(&i2),
            if ok { "ok" } else { "FAIL" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut a_fail, mut b_fail, mut c_fail) = (Vec::new(), Vec::new(), Vec::new());
    let (mut worst_gamma_a, mut worst_gamma_b, mut worst_x, mut worst_pw) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..50u64 {
        let n = rng.gen_range(4..=12);
        let m = rng.gen_range(2..=n.min(6));
        let r = rng.gen_range(1..m);
        let sys = build_random_singular(n, m, r, 800 + k).unwrap();

        let sym = omega_bound_symmetric(sys.w()).unwrap();
        let pc = Preconditioner::build(
            &sys,
            Family::Constraint,
            PChoice::symmetric_scaled(1.05 * sym),
        )
        .unwrap();
        let g = gcp_convergence_indicator(&sys, &pc).unwrap();
        worst_gamma_a = worst_gamma_a.max(g);
        if g >= 1.0 {
            a_fail.push(k);
        }

        let tri = omega_bound_triangular(sys.w()).unwrap();
        let pd = pd_bound(sys.w()).unwrap();
        if tri > pd {
            c_fail.push(k);
            continue;
        }
        let pc = Preconditioner::build(
            &sys,
            Family::Constraint,
            PChoice::triangular_split(0.95 * tri),
        )
        .unwrap();
        let g = gcp_convergence_indicator(&sys, &pc).unwrap();
        let (x_norm, pw_norm) = norm_certificates(&sys, &pc).unwrap();
        worst_gamma_b = worst_gamma_b.max(g);
        worst_x = worst_x.max(x_norm);
        worst_pw = worst_pw.max(pw_norm);
        if !(g < 1.0 && x_norm <= 1.0 + 1e-8 && pw_norm < 1.0) {
            b_fail.push(k);
        }
    }
    outcome(
        a_fail.is_empty() && b_fail.is_empty() && c_fail.is_empty(),
        format!(
            "(a) max gamma {worst_gamma_a:.4}, failures {a_fail:?}; (b) max gamma {worst_gamma_b:.4}, max x_norm {worst_x:.6}, max pw_norm {worst_pw:.4}, failures {b_fail:?}; (c) violations {c_fail:?}"
        ),
    )
}

fn criterion_9(property_time: Duration) -> Outcome {
    let cfg = SolveConfig::default();
    let start = Instant::now();
    for id in [2, 3, 4] {
        let table = Table::from_id(id).unwrap();
        let rows = run_table(table, 16, Scope::Around, &cfg, Rhs::Manufactured, 0).unwrap();
        println!("# table {id}, l = 16\n{}", table_csv(&rows).trim_end());
    }
    let t16 = property_time + start.elapsed();
    let start = Instant::now();
    for id in [2, 3, 4] {
        let table = Table::from_id(id).unwrap();
        let rows = run_table(table, 32, Scope::Around, &cfg, Rhs::Manufactured, 0).unwrap();
        println!("# table {id}, l = 32\n{}", table_csv(&rows).trim_end());
    }
    let t32 = start.elapsed();
    outcome(
        t16 < Duration::from_secs(600) && t32 < Duration::from_secs(3600),
        format!(
            "l=16 properties plus tables {:.1} s (limit 600); l=32 tables {:.1} s (limit 3600)",
            t16.as_secs_f64(),
            t32.as_secs_f64()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let criteria: [(usize, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failed = 0;
    let mut report = |id: usize, o: Outcome| {
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    for (id, f) in criteria {
        report(id, f());
    }
    let props = start.elapsed();
    report(9, criterion_9(props));
    if failed > 0 {
        println!("acceptance: {failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria passed");
}
