//! Acceptance criteria A1–A9. Runs sequentially and prints one line per
//! criterion. Failures are reported but only change the exit status when
//! `ACCEPTANCE_STRICT=1`. `ACCEPTANCE_ONLY=A1,A5` restricts the run.

use std::process::ExitCode;
use std::time::Instant;

use cipeem::analysis::{compute_errors, galerkin_orthogonality_check, EllipticProjector, Sign};
use cipeem::analytic::{
    default_plane_wave_direction, multipole_sine_solution, plane_wave_solution,
};
use cipeem::edge_fem::{EdgeSpace, FeFunction};
use cipeem::error::Result;
use cipeem::experiment::{run_case, solve_system, tail_slope, Config, ExperimentRecord, GammaSpec};
use cipeem::forms::{
    assemble_hat_a, assemble_rhs, assemble_system, paper_gamma, Method, ProblemParams,
};
use cipeem::geometry::Vec3;
use cipeem::linalg::SolverKind;
use cipeem::mesh::{BoxDomain, Mesh};
use cipeem::sparse::norm2;
use cipeem::validation::structural_checks;
use num_complex::Complex64 as C64;

const KAPPA: f64 = 5.0;
const N_LIST: [usize; 5] = [4, 6, 8, 12, 16];

struct Outcome {
    id: &'static str,
    passed: bool,
    soft: bool,
    detail: String,
}

impl Outcome {
    fn new(id: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            passed,
            soft: false,
            detail,
        }
    }

    fn line(&self) -> String {
        let status = match (self.passed, self.soft) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => "FAIL",
        };
        format!("{} {status}: {}", self.id, self.detail)
    }
}

/// Largest solver residual seen anywhere in the run.
#[derive(Default)]
struct Residuals(f64);

impl Residuals {
    fn see(&mut self, r: f64) {
        self.0 = self.0.max(r);
    }
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn slope_of(rs: &[ExperimentRecord], f: impl Fn(&ExperimentRecord) -> f64) -> f64 {
    let h: Vec<f64> = rs.iter().map(|r| r.h0).collect();
    tail_slope(&h, &rs.iter().map(f).collect::<Vec<_>>())
}

fn base_config() -> Config {
    let mut cfg = Config::for_command("convergence");
    cfg.kappa = KAPPA;
    cfg
}

fn space(n: usize) -> Result<EdgeSpace> {
    EdgeSpace::new(Mesh::cub6(n, BoxDomain::shifted_unit())?)
}

/// A1, A2 and A3 share the EEM runs at κ = 5.
fn convergence(res: &mut Residuals) -> Result<Vec<Outcome>> {
    let cfg = base_config();
    let t0 = Instant::now();
    let mut records = Vec::new();
    let (mut h, mut i_l2, mut i_curl, mut i_bdry) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for n in N_LIST {
        let case = run_case(&cfg, Method::Eem, KAPPA, n)?;
        res.see(case.solve.relative_residual);
        h.push(case.space.mesh.h0);
        i_l2.push(case.interpolation.rel_l2);
        i_curl.push(case.interpolation.rel_curl);
        i_bdry.push(case.interpolation.rel_boundary);
        records.push(case.record);
    }
    let minutes = t0.elapsed().as_secs_f64() / 60.0;
    let s_hcurl = slope_of(&records, |r| r.rel_hcurl);
    let s_l2 = slope_of(&records, |r| r.rel_l2);
    let errs: Vec<String> = records
        .iter()
        .map(|r| format!("{:.3e}", r.rel_hcurl))
        .collect();
    let a1 = Outcome::new(
        "A1",
        in_range(s_hcurl, 0.75, 1.25) && minutes <= 10.0,
        format!(
            "EEM rel H(curl) slope {s_hcurl:.3} (target [0.75, 1.25]); errors {}; runtime {minutes:.2} min (target <= 10)",
            errs.join(" ")
        ),
    );
    let a2 = Outcome::new(
        "A2",
        in_range(s_l2, 1.7, 2.3),
        format!("EEM rel L2 slope {s_l2:.3} (target [1.7, 2.3])"),
    );
    let (sl, sc, sb) = (
        tail_slope(&h, &i_l2),
        tail_slope(&h, &i_curl),
        tail_slope(&h, &i_bdry),
    );
    let a3 = Outcome::new(
        "A3",
        in_range(sl, 1.8, 2.2) && in_range(sc, 0.8, 1.2) && in_range(sb, 1.2, 1.8),
        format!(
            "interpolation slopes: L2 {sl:.3} (target [1.8, 2.2]), curl {sc:.3} (target [0.8, 1.2]), boundary tangential {sb:.3} (target [1.2, 1.8])"
        ),
    );
    Ok(vec![a1, a2, a3])
}

fn a4(res: &mut Residuals) -> Result<Outcome> {
    let sol = multipole_sine_solution(KAPPA)?;
    let (d, p) = default_plane_wave_direction();
    let w = plane_wave_solution(KAPPA, d, p)?;
    let ue = |x: &Vec3| sol.e_at(x);
    let uc = |x: &Vec3| sol.curl_at(x);
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, gamma, method) in [
        ("gamma=0", [C64::new(0.0, 0.0); 3], Method::Eem),
        ("gamma=paper", paper_gamma(), Method::Cip),
    ] {
        let params = ProblemParams::new(KAPPA, 1.0)?.with_gamma(gamma);
        let (mut h, mut l2, mut energy) = (Vec::new(), Vec::new(), Vec::new());
        let (mut ident, mut adj): (f64, f64) = (0.0, 0.0);
        for n in N_LIST {
            let s = space(n)?;
            let a_hat = assemble_hat_a(&s, &params, method)?;
            let coords = s.dof_points();
            let proj = EllipticProjector::new(&s, &params, &a_hat, Some(&coords))?;
            let (pu, rep) = proj.project_smooth(&ue, &uc, Sign::Plus, 6)?;
            res.see(rep.relative_residual);
            let e = compute_errors(&s, &pu, &sol, &params, method, 6)?;
            h.push(s.mesh.h0);
            l2.push(e.rel_l2);
            energy.push(e.rel_augmented);
            if n == N_LIST[0] {
                // P⁺ applied to a discrete function reproduces it.
                for sign in [Sign::Plus, Sign::Minus] {
                    let (pv, rep) = proj.project_discrete(&pu, sign)?;
                    res.see(rep.relative_residual);
                    ident = ident.max(norm2(&pv.sub(&pu).coeffs) / norm2(&pu.coeffs));
                }
                adj = proj.adjoint_identity_defect(&sol, &w, 6)?;
            }
        }
        let (sl, se) = (tail_slope(&h, &l2), tail_slope(&h, &energy));
        ok &= in_range(sl, 1.7, 2.3) && in_range(se, 0.75, 1.25) && ident <= 1e-10 && adj <= 1e-10;
        parts.push(format!("{label}: L2 slope {sl:.3}, energy slope {se:.3}, |P v - v| {ident:.1e}, adjoint defect {adj:.1e}"));
    }
    Ok(Outcome::new(
        "A4",
        ok,
        format!(
            "{} (targets [1.7, 2.3], [0.75, 1.25], 1e-10)",
            parts.join("; ")
        ),
    ))
}

fn a5(res: &mut Residuals) -> Result<Outcome> {
    let s = space(4)?;
    let sol = multipole_sine_solution(KAPPA)?;
    let params = ProblemParams::new(KAPPA, 1.0)?.with_gamma(paper_gamma());
    let mut ok = true;
    let mut parts = Vec::new();
    for method in [Method::Eem, Method::Cip] {
        let a = assemble_system(&s, &params, method)?;
        let mut defects = Vec::new();
        for deg in [6, 12] {
            let b = assemble_rhs(&s, &*sol.f, &|x: &Vec3, nu: &Vec3| sol.g_at(x, nu), deg);
            let (x, rep) = solve_system(&s, &a, &b, SolverKind::Direct)?;
            res.see(rep.relative_residual);
            let eh = FeFunction::from_coeffs(x);
            defects.push(galerkin_orthogonality_check(
                &s, &a, &eh, &sol, &params, method, deg, 5, 11,
            )?);
        }
        ok &= defects[0] <= 1e-3 && defects[1] * 10.0 <= defects[0];
        parts.push(format!(
            "{}: {:.2e} (degree 6) -> {:.2e} (degree 12)",
            method.name(),
            defects[0],
            defects[1]
        ));
    }
    Ok(Outcome::new(
        "A5",
        ok,
        format!(
            "normalized defect {} (target <= 1e-3, shrink >= 10x)",
            parts.join(", ")
        ),
    ))
}

fn a6(res: &mut Residuals) -> Result<Outcome> {
    // κ³h0² stays within a factor two of 16.
    let cases = [(2.0, 1), (4.0, 2), (8.0, 6), (16.0, 16)];
    let cfg = base_config();
    let mut ok = true;
    let mut parts = Vec::new();
    for method in [Method::Eem, Method::Cip] {
        let mut ratios = Vec::new();
        for (kappa, n) in cases {
            let case = run_case(&cfg, method, kappa, n)?;
            res.see(case.solve.relative_residual);
            ratios.push(case.stability.ratio);
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
        ok &= hi / lo <= 3.0;
        let list: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
        parts.push(format!(
            "{} ratios {} max/min {:.3}",
            method.name(),
            list.join(" "),
            hi / lo
        ));
    }
    Ok(Outcome::new(
        "A6",
        ok,
        format!(
            "kappa 2,4,8,16 with n 1,2,6,16: {} (target <= 3)",
            parts.join("; ")
        ),
    ))
}

fn a7(res: &mut Residuals) -> Result<Vec<Outcome>> {
    let cfg = base_config();
    let kappas = [4.0, 8.0, 12.0, 16.0, 20.0];
    let (mut eem, mut cip) = (Vec::new(), Vec::new());
    for &kappa in &kappas {
        // κh0 = 1 on the unit cube.
        let n = kappa as usize;
        for (method, out) in [(Method::Eem, &mut eem), (Method::Cip, &mut cip)] {
            let case = run_case(&cfg, method, kappa, n)?;
            res.see(case.solve.relative_residual);
            out.push(case.record);
        }
    }
    let ratios: Vec<f64> = eem
        .iter()
        .map(|r| r.rel_hcurl / r.interp_rel_hcurl)
        .collect();
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0]);
    let list: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    let i = Outcome::new(
        "A7(i)",
        monotone,
        format!(
            "EEM error/interpolation ratio at kappa 4..20: {} (target non-decreasing)",
            list.join(" ")
        ),
    );
    let mut violations = Vec::new();
    let mut cmp = Vec::new();
    for (e, c) in eem.iter().zip(&cip) {
        cmp.push(format!("{:.3}", c.rel_hcurl / e.rel_hcurl));
        if e.kappa >= 8.0 && c.rel_hcurl > e.rel_hcurl {
            violations.push(e.kappa);
        }
    }
    let mut ii = Outcome::new(
        "A7(ii)",
        violations.is_empty(),
        format!(
            "CIP/EEM rel H(curl) at kappa 4..20: {}; violations at kappa >= 8: {violations:?}",
            cmp.join(" ")
        ),
    );
    ii.soft = true;
    Ok(vec![i, ii])
}

fn a8(res: &Residuals) -> Result<Outcome> {
    let wanted = [
        "forms.symmetry",
        "basis.gradient_curl",
        "forms.zero_gamma_penalty",
        "mesh.euler",
        "interp.p1_exact",
        "solver.residual",
        "analytic.fd_residual",
    ];
    let checks = structural_checks()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for name in wanted {
        match checks.iter().find(|c| c.name == name) {
            Some(c) => {
                ok &= c.passed;
                parts.push(format!(
                    "{} {}",
                    c.name,
                    if c.passed { "ok" } else { "failed" }
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    ok &= res.0 <= 1e-10;
    parts.push(format!("max solver residual in this run {:.1e}", res.0));
    Ok(Outcome::new("A8", ok, parts.join(", ")))
}

fn a9(res: &mut Residuals) -> Result<Outcome> {
    let mut cfg = base_config();
    cfg.gamma = GammaSpec::Zero;
    let eem = run_case(&cfg, Method::Eem, KAPPA, 6)?;
    let cip = run_case(&cfg, Method::Cip, KAPPA, 6)?;
    res.see(eem.solve.relative_residual);
    res.see(cip.solve.relative_residual);
    let same_matrix = eem.matrix.bit_identical(&cip.matrix);
    let same_solution = eem.eh.coeffs == cip.eh.coeffs;
    Ok(Outcome::new(
        "A9",
        same_matrix && same_solution,
        format!("CIP with gamma = 0 at n = 6: matrix bit-identical {same_matrix}, solution identical {same_solution}"),
    ))
}

fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .is_test(true)
        .try_init();
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|t| t.trim().to_uppercase()).collect());
    let selected = |id: &str| only.as_ref().is_none_or(|o| o.iter().any(|x| x == id));
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut res = Residuals::default();
    let mut outcomes: Vec<Outcome> = Vec::new();
    let record =
        |ids: &[&'static str], r: Result<Vec<Outcome>>, outcomes: &mut Vec<Outcome>| match r {
            Ok(v) => {
                for o in v {
                    println!("{}", o.line());
                    outcomes.push(o);
                }
            }
            Err(e) => {
                for id in ids {
                    let o = Outcome::new(id, false, format!("error: {e}"));
                    println!("{}", o.line());
                    outcomes.push(o);
                }
            }
        };

    let t0 = Instant::now();
    if ["A1", "A2", "A3"].iter().any(|id| selected(id)) {
        record(&["A1", "A2", "A3"], convergence(&mut res), &mut outcomes);
    }
    if selected("A4") {
        record(&["A4"], a4(&mut res).map(|o| vec![o]), &mut outcomes);
    }
    if selected("A5") {
        record(&["A5"], a5(&mut res).map(|o| vec![o]), &mut outcomes);
    }
    if selected("A6") {
        record(&["A6"], a6(&mut res).map(|o| vec![o]), &mut outcomes);
    }
    if selected("A7") {
        record(&["A7"], a7(&mut res), &mut outcomes);
    }
    if selected("A9") {
        record(&["A9"], a9(&mut res).map(|o| vec![o]), &mut outcomes);
    }
    if selected("A8") {
        record(&["A8"], a8(&res).map(|o| vec![o]), &mut outcomes);
    }

    let hard_failures: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed && !o.soft)
        .map(|o| o.id)
        .collect();
    println!(
        "acceptance: {} of {} passed, hard failures {:?}, {:.1} s",
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len(),
        hard_failures,
        t0.elapsed().as_secs_f64()
    );
    if strict && !hard_failures.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
