use saddlekit::linalg::{lu, norm2, DenseMatrix};
use saddlekit::precond::{Family, PChoice, PKind, PinvRank, Preconditioner};
use saddlekit::problem::{
    build_oseen, build_random_singular, range_defect, SaddleSystem, SystemMeta,
};
use saddlekit::solvers::{gmres_restarted, omega_sweep, qmr, solve, Identity, SolveConfig, Solver};
use saddlekit::Error;

/// Nonsingular system with `B` of full row rank.
fn nonsingular(n: usize, m: usize) -> SaddleSystem {
    let w = DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            4.0 + i as f64 * 0.1
        } else {
            ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2 + if i < j { 0.3 } else { -0.3 }
        }
    });
    let b = DenseMatrix::from_fn(m, n, |i, j| {
        if j == i || j == i + m {
            1.0
        } else {
            0.05 * (i + j) as f64
        }
    });
    let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
    let g: Vec<f64> = (0..m).map(|i| (i as f64 * 1.3).sin()).collect();
    SaddleSystem::new(w, b, f, g, SystemMeta::default()).unwrap()
}

#[test]
fn krylov_solutions_match_dense_solve() {
    let sys = nonsingular(10, 4);
    let exact = lu(&sys.assemble()).unwrap().solve(&sys.rhs()).unwrap();
    let cfg = SolveConfig {
        tol: 1e-10,
        restart: 30,
        ..SolveConfig::default()
    };
    for report in [
        gmres_restarted(&sys, &Identity, &cfg).unwrap(),
        qmr(&sys, &Identity, &cfg).unwrap(),
    ] {
        assert!(report.converged);
        let err: f64 = report
            .solution
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8 * norm2(&exact), "error {err}");
    }
}

#[test]
fn residual_history_is_true_residual() {
    let sys = build_oseen(8, 0.1).unwrap();
    let pc =
        Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(1.0)).unwrap();
    for solver in [Solver::Gcp, Solver::Gmres, Solver::Qmr] {
        let r = solve(&sys, &pc, solver, &SolveConfig::default()).unwrap();
        assert!(r.converged, "{solver}");
        assert_eq!(r.residual_history.len(), r.iterations + 1);
        assert_eq!(r.residual_history[0], 1.0);
        let res = norm2(&sys.residual(&r.solution)) / norm2(&sys.rhs());
        assert!(
            (res - r.final_res).abs() <= 1e-8 * r.final_res.max(1e-16) + 1e-14,
            "{solver}: {res} vs {}",
            r.final_res
        );
        assert!(r.final_res < 1e-6);
    }
}

#[test]
fn singular_systems_converge_with_consistent_rhs() {
    for seed in 0..5 {
        let sys = build_random_singular(12, 6, 4, seed).unwrap();
        assert!(range_defect(&sys, &sys.rhs()).unwrap() < 1e-10);
        let pc = Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(2.0))
            .unwrap();
        for solver in [Solver::Gmres, Solver::Qmr] {
            let r = solve(&sys, &pc, solver, &SolveConfig::default()).unwrap();
            assert!(r.converged, "seed {seed} {solver}");
        }
    }
}

#[test]
fn stationary_schemes_reject_wrong_family() {
    let sys = build_oseen(4, 0.1).unwrap();
    let tri =
        Preconditioner::build(&sys, Family::BlockTri, PChoice::symmetric_scaled(1.0)).unwrap();
    assert!(matches!(
        solve(&sys, &tri, Solver::Gcp, &SolveConfig::default()),
        Err(Error::FamilyMismatch(_))
    ));
    let con =
        Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(1.0)).unwrap();
    assert!(matches!(
        solve(&sys, &con, Solver::Stationary, &SolveConfig::default()),
        Err(Error::FamilyMismatch(_))
    ));
}

#[test]
fn divergence_and_max_iters_outcomes() {
    let sys = build_oseen(8, 0.001).unwrap();
    let pc =
        Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(1.0)).unwrap();
    let err = solve(&sys, &pc, Solver::Gcp, &SolveConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }));

    let sys = build_oseen(8, 0.1).unwrap();
    let pc =
        Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(1.0)).unwrap();
    let cfg = SolveConfig {
        max_iters: 3,
        ..SolveConfig::default()
    };
    let r = solve(&sys, &pc, Solver::Gcp, &cfg).unwrap();
    assert!(!r.converged && r.iterations == 3);
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let sys = build_oseen(8, 0.1).unwrap();
    let grid = [0.6, 0.8, 1.0, 1.2, 1.4];
    let cfg = SolveConfig {
        max_iters: 300,
        ..SolveConfig::default()
    };
    let run = || {
        omega_sweep(
            &sys,
            Family::Constraint,
            &PKind::SymmetricScaled,
            &grid,
            Solver::Gmres,
            &cfg,
            PinvRank::default(),
        )
        .unwrap()
    };
    let a = run();
    std::env::set_var(saddlekit::solvers::THREADS_ENV, "1");
    let b = run();
    std::env::remove_var(saddlekit::solvers::THREADS_ENV);
    assert_eq!(a, b);
    assert_eq!(a.entries.len(), grid.len());
    assert!(a.entries.iter().zip(grid).all(|(e, w)| e.omega == w));
    let best = a.best_omega.unwrap();
    let best_it = a
        .entries
        .iter()
        .find(|e| e.omega == best)
        .unwrap()
        .converged_iterations()
        .unwrap();
    assert!(a
        .entries
        .iter()
        .filter_map(|e| e.converged_iterations())
        .all(|it| it >= best_it));
}
