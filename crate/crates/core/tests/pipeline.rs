use cipeem::analysis::{elliptic_projection, Sign};
use cipeem::experiment::{
    cmd_convergence, run_case, tail_slope, Config, ExperimentRecord, GammaSpec, SolutionKind,
};
use cipeem::forms::Method;
use cipeem::linalg::SolverKind;

fn config() -> Config {
    let mut cfg = Config::for_command("solve");
    cfg.kappa = 5.0;
    cfg
}

#[test]
fn eem_error_is_comparable_to_interpolation() {
    let case = run_case(&config(), Method::Eem, 5.0, 6).unwrap();
    let r = &case.record;
    assert!(r.residual <= 1e-10);
    // The interpolant is not the best approximation, so E_h may beat it.
    let q = r.rel_hcurl / r.interp_rel_hcurl;
    assert!((0.9..10.0).contains(&q), "{q}");
    assert!(r.rel_l2 < r.rel_hcurl);
}

#[test]
fn cip_and_eem_agree_at_fine_resolution() {
    let cfg = config();
    let eem = run_case(&cfg, Method::Eem, 5.0, 6).unwrap();
    let cip = run_case(&cfg, Method::Cip, 5.0, 6).unwrap();
    let q = cip.record.rel_hcurl / eem.record.rel_hcurl;
    assert!((0.5..2.0).contains(&q), "{q}");
    assert!(cip.stability.ratio.is_finite() && cip.stability.ratio > 0.0);
}

#[test]
fn gmres_matches_direct() {
    let mut cfg = config();
    cfg.kappa = 2.0;
    let d = run_case(&cfg, Method::Eem, 2.0, 4).unwrap();
    cfg.solver = SolverKind::Gmres;
    let g = run_case(&cfg, Method::Eem, 2.0, 4).unwrap();
    assert!(g.record.solver.starts_with("gmres"));
    assert!(g.record.iterations > 0);
    assert!((d.record.rel_hcurl - g.record.rel_hcurl).abs() <= 1e-8 * d.record.rel_hcurl);
}

#[test]
fn plane_wave_converges() {
    let mut cfg = Config::for_command("convergence");
    cfg.kappa = 3.0;
    cfg.solution = SolutionKind::PlaneWave;
    cfg.methods = vec![Method::Eem];
    cfg.n_list = vec![2, 4, 8];
    let (records, slopes) = cmd_convergence(&cfg).unwrap();
    assert_eq!(records.len(), 3);
    assert!(
        (0.75..=1.25).contains(&slopes[0].rel_hcurl),
        "{:?}",
        slopes[0]
    );
    assert!(slopes[0].rel_l2 > 1.5, "{:?}", slopes[0]);
}

#[test]
fn zero_gamma_cip_reproduces_eem() {
    let mut cfg = config();
    cfg.gamma = GammaSpec::Zero;
    let eem = run_case(&cfg, Method::Eem, 5.0, 3).unwrap();
    let cip = run_case(&cfg, Method::Cip, 5.0, 3).unwrap();
    assert!(eem.matrix.bit_identical(&cip.matrix));
    assert_eq!(eem.eh.coeffs, cip.eh.coeffs);
}

#[test]
fn projection_error_decreases() {
    let cfg = config();
    let mut h = Vec::new();
    let mut e = Vec::new();
    for n in [2, 4, 8] {
        let case = run_case(&cfg, Method::Cip, 5.0, n).unwrap();
        let (p, rep) = elliptic_projection(
            &case.space,
            &case.params,
            Method::Cip,
            &case.solution,
            Sign::Plus,
            6,
        )
        .unwrap();
        assert!(rep.relative_residual <= 1e-10);
        let err = cipeem::analysis::compute_errors(
            &case.space,
            &p,
            &case.solution,
            &case.params,
            Method::Cip,
            6,
        )
        .unwrap();
        h.push(case.space.mesh.h0);
        e.push(err.rel_l2);
    }
    assert!(tail_slope(&h, &e) > 1.5, "{e:?}");
}

#[test]
fn csv_round_trip() {
    let r = run_case(&config(), Method::Cip, 5.0, 2).unwrap().record;
    let back = ExperimentRecord::from_csv(&r.to_csv()).unwrap();
    assert_eq!(back.method, r.method);
    assert_eq!(back.n, r.n);
    assert_eq!(back.dofs, r.dofs);
    assert_eq!(back.rel_hcurl, r.rel_hcurl);
    assert_eq!(back.solver, r.solver);
}
