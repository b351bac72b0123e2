use polysinc::colloc::solve_pce;
use polysinc::model::{Config, SolverMethod};
use polysinc::reference::Lattice;
use polysinc::study::{polysinc_moments, reference_moments, solve_config};

const EXAMPLE1: &str = include_str!("../configs/example1.toml");
const EXAMPLE2: &str = include_str!("../configs/example2.toml");

#[test]
fn dense_and_iterative_agree_on_example2() {
    let mut cfg = Config::parse(EXAMPLE2).unwrap();
    cfg.chaos.p = 1;
    cfg.solver.n = 3;
    let (_, basis, sys) = cfg.assemble().unwrap();
    let (gx, gy) = cfg.grids().unwrap();
    let ctl = cfg.iter_control();
    let dense = solve_pce(&sys, &basis, &gx, &gy, cfg.solver.tau, SolverMethod::Dense, ctl).unwrap();
    let iter = solve_pce(&sys, &basis, &gx, &gy, cfg.solver.tau, SolverMethod::Iterative, ctl).unwrap();
    assert_eq!(iter.info.method, SolverMethod::Iterative);
    for (a, b) in dense.coeff_fields.iter().flatten().zip(iter.coeff_fields.iter().flatten()) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn example1_moments_against_sampled_reference() {
    let mut cfg = Config::parse(EXAMPLE1).unwrap();
    cfg.reference.nodes = 12;
    cfg.reference.fd_n = 81;
    let lattice = Lattice::new(cfg.problem().unwrap().domain, 41).unwrap();
    let reference = reference_moments(&cfg, polysinc::model::ReferenceKind::Sampled, &lattice).unwrap();
    let (_, sol) = solve_config(&cfg, cfg.solver.n, cfg.solver.tau).unwrap();
    let e = polysinc_moments(&sol, &lattice).unwrap().errors(&reference, &lattice).unwrap();
    assert!(e.mean.l2 < 5e-4, "{e:?}");
    assert!(e.variance.l2 < 5e-5, "{e:?}");
    assert!(e.mean.sup >= e.mean.l2 / 2.0);
}

#[test]
fn example1_mean_at_centre() {
    // u = w / (2 + xi) with w(0, 0) = -0.2946854 solving lap w = 1, and E[1 / (2 + xi)] = ln(3) / 2
    let cfg = Config::parse(EXAMPLE1).unwrap();
    let (_, sol) = solve_config(&cfg, cfg.solver.n, cfg.solver.tau).unwrap();
    let m = sol.mean_at(0.0, 0.0).unwrap();
    assert!((m + 0.2946854 * 3f64.ln() / 2.0).abs() < 1e-5, "{m}");
    assert!(sol.variance_at(0.0, 0.0).unwrap() > 0.0);
}
