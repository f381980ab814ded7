//! Error norms, discrete stability metrics, the elliptic projections `P_h^±`
//! and the consistency diagnostics built on them.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::analytic::ManufacturedSolution;
use crate::edge_fem::{EdgeSpace, FeFunction};
use crate::error::{Error, Result};
use crate::forms::{assemble_form, smooth_form_load, FormCoefficients, Method, ProblemParams};
use crate::geometry::{norm_sqr, tangential, CVec3, Vec3};
use crate::linalg::{DirectOptions, DirectSolver, SolveReport};
use crate::mesh::LOCAL_FACES;
use crate::quadrature::{TetRule, TriRule};
use crate::sparse::CsrMatrix;

/// Default quadrature degree for error norms and data terms.
pub const ERROR_QUAD_DEGREE: usize = 6;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Squared pieces of a norm: `‖v‖²`, `‖curl v‖²`, `‖v_T‖²_Γ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormParts {
    pub l2_sq: f64,
    pub curl_sq: f64,
    pub boundary_sq: f64,
}

impl NormParts {
    pub fn l2(&self) -> f64 {
        self.l2_sq.sqrt()
    }

    pub fn hcurl(&self) -> f64 {
        (self.curl_sq + self.l2_sq).sqrt()
    }

    /// `(‖curl v‖² + κ²‖v‖² + κλ‖v_T‖²_Γ)^{1/2}`
    pub fn energy(&self, kappa: f64, lambda: f64) -> f64 {
        (self.curl_sq + kappa * kappa * self.l2_sq + kappa * lambda * self.boundary_sq).sqrt()
    }

    pub fn boundary(&self) -> f64 {
        self.boundary_sq.sqrt()
    }

    fn add(self, o: NormParts) -> NormParts {
        NormParts {
            l2_sq: self.l2_sq + o.l2_sq,
            curl_sq: self.curl_sq + o.curl_sq,
            boundary_sq: self.boundary_sq + o.boundary_sq,
        }
    }
}

fn face_bary(fb: &[f64; 3], local_face: usize) -> [f64; 4] {
    let mut bary = [0.0; 4];
    for (k, &v) in LOCAL_FACES[local_face].iter().enumerate() {
        bary[v] = fb[k];
    }
    bary
}

/// Norm pieces of `u − v` and of `u` by quadrature, where `u` is a smooth
/// field (with its curl) and `v` a discrete one. Either may be absent.
pub fn difference_norms(
    space: &EdgeSpace,
    v: Option<&FeFunction>,
    u: Option<(
        &(dyn Fn(&Vec3) -> CVec3 + Sync),
        &(dyn Fn(&Vec3) -> CVec3 + Sync),
    )>,
    degree: usize,
) -> (NormParts, NormParts) {
    let vrule = TetRule::with_degree(degree);
    let frule = TriRule::with_degree(degree);
    let eval = |t: usize, bary: &[f64; 4], x: &Vec3| -> (CVec3, CVec3, CVec3, CVec3) {
        let (uv, uc) = match u {
            Some((e, c)) => (e(x), c(x)),
            None => (CVec3::zeros(), CVec3::zeros()),
        };
        let (vv, vc) = match v {
            Some(v) => space.eval_bary(v, t, bary),
            None => (CVec3::zeros(), CVec3::zeros()),
        };
        (uv, uc, uv - vv, uc - vc)
    };
    let per_tet: Vec<(NormParts, NormParts)> = (0..space.mesh.num_tets())
        .into_par_iter()
        .map(|t| {
            let geom = &space.geometry[t];
            let mut diff = NormParts::default();
            let mut exact = NormParts::default();
            for (bary, w) in vrule.bary.iter().zip(&vrule.weights) {
                let x = geom.point(bary);
                let (uv, uc, dv, dc) = eval(t, bary, &x);
                let wv = w * geom.volume;
                diff.l2_sq += norm_sqr(&dv) * wv;
                diff.curl_sq += norm_sqr(&dc) * wv;
                exact.l2_sq += norm_sqr(&uv) * wv;
                exact.curl_sq += norm_sqr(&uc) * wv;
            }
            (diff, exact)
        })
        .collect();
    let boundary: Vec<(usize, usize)> = space
        .mesh
        .boundary_faces()
        .map(|(f, face)| (f, face.tets[0]))
        .collect();
    let per_face: Vec<(f64, f64)> = boundary
        .par_iter()
        .map(|&(f, t)| {
            let face = &space.mesh.faces[f];
            let geom = space.mesh.face_geometry(f);
            let (mut d, mut e) = (0.0, 0.0);
            for (fb, w) in frule.bary.iter().zip(&frule.weights) {
                let bary = face_bary(fb, face.local[0]);
                let x = space.geometry[t].point(&bary);
                let (uv, _, dv, _) = eval(t, &bary, &x);
                let wf = w * geom.area;
                d += norm_sqr(&tangential(&dv, &geom.normal)) * wf;
                e += norm_sqr(&tangential(&uv, &geom.normal)) * wf;
            }
            (d, e)
        })
        .collect();
    // Sequential sums keep results independent of the thread count.
    let (mut diff, mut exact) = per_tet.into_iter().fold(
        (NormParts::default(), NormParts::default()),
        |(a, b), (c, d)| (a.add(c), b.add(d)),
    );
    for (d, e) in per_face {
        diff.boundary_sq += d;
        exact.boundary_sq += e;
    }
    (diff, exact)
}

/// Norm pieces of a discrete function by quadrature.
pub fn discrete_norms(space: &EdgeSpace, v: &FeFunction) -> NormParts {
    // `v` is piecewise linear, so degree 2 is exact.
    difference_norms(space, Some(v), None, 2).0
}

/// Constant tangential jump `[curl v]` on interior face `f`.
pub fn curl_jump(space: &EdgeSpace, v: &FeFunction, f: usize, swap: bool) -> CVec3 {
    let face = &space.mesh.faces[f];
    let order: [usize; 2] = if swap { [1, 0] } else { [0, 1] };
    let mut j = CVec3::zeros();
    for side in order {
        let t = face.tets[side];
        let nu = space.mesh.tet_face_normal(t, face.local[side]);
        let c = space.curl_on(v, t);
        j += crate::geometry::cross_complex_real(&c, &nu);
    }
    j
}

/// `Σ_f |γ_f| h_f ‖[curl v]‖²_f` over interior faces with nonzero `γ_f`.
pub fn jump_seminorm_sq(
    space: &EdgeSpace,
    v: &FeFunction,
    params: &ProblemParams,
    swap: bool,
) -> Result<f64> {
    if !params.has_penalty() {
        return Ok(0.0);
    }
    let classes = space.mesh.classify_interior_faces()?;
    let mut s = 0.0;
    for (f, _) in space.mesh.interior_faces() {
        let gamma = params.gamma_of(classes[f].expect("interior face classified"));
        if gamma == ZERO {
            continue;
        }
        let geom = space.mesh.face_geometry(f);
        s += gamma.norm() * geom.diameter * geom.area * norm_sqr(&curl_jump(space, v, f, swap));
    }
    Ok(s)
}

/// Absolute and relative errors of a discrete field against an exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l2: f64,
    pub curl: f64,
    pub hcurl: f64,
    pub energy: f64,
    /// Energy norm augmented by the jump seminorm.
    pub augmented: f64,
    pub boundary: f64,
    pub rel_l2: f64,
    pub rel_curl: f64,
    pub rel_hcurl: f64,
    pub rel_energy: f64,
    pub rel_augmented: f64,
    pub rel_boundary: f64,
    /// Exact-solution norms used as denominators.
    pub exact: NormParts,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

/// Errors of `eh` against `sol`. The jump term only enters for CIP; the
/// exact solution is smooth, so the jump of the error is that of `eh`.
pub fn compute_errors(
    space: &EdgeSpace,
    eh: &FeFunction,
    sol: &ManufacturedSolution,
    params: &ProblemParams,
    method: Method,
    degree: usize,
) -> Result<ErrorReport> {
    let e = |x: &Vec3| sol.e_at(x);
    let c = |x: &Vec3| sol.curl_at(x);
    let (d, ex) = difference_norms(space, Some(eh), Some((&e, &c)), degree);
    let jump_sq = match method {
        Method::Eem => 0.0,
        Method::Cip => jump_seminorm_sq(space, eh, params, false)?,
    };
    let (k, l) = (params.kappa, params.lambda);
    let energy = d.energy(k, l);
    let augmented = (energy * energy + jump_sq).sqrt();
    Ok(ErrorReport {
        l2: d.l2(),
        curl: d.curl_sq.sqrt(),
        hcurl: d.hcurl(),
        energy,
        augmented,
        boundary: d.boundary(),
        rel_l2: ratio(d.l2(), ex.l2()),
        rel_curl: ratio(d.curl_sq.sqrt(), ex.curl_sq.sqrt()),
        rel_hcurl: ratio(d.hcurl(), ex.hcurl()),
        rel_energy: ratio(energy, ex.energy(k, l)),
        rel_augmented: ratio(augmented, ex.energy(k, l)),
        rel_boundary: ratio(d.boundary(), ex.boundary()),
        exact: ex,
    })
}

/// Errors of the interpolant `π_N E`.
pub fn interpolation_errors(
    space: &EdgeSpace,
    sol: &ManufacturedSolution,
    params: &ProblemParams,
    method: Method,
    degree: usize,
) -> Result<ErrorReport> {
    let pi = space.interpolate(&|x: &Vec3| sol.e_at(x));
    compute_errors(space, &pi, sol, params, method, degree)
}

/// Both sides of the discrete stability estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `‖curl E_h‖ + κ‖E_h‖ + κ‖E_{h,T}‖_Γ` (+ jump seminorm for CIP).
    pub lhs: f64,
    /// `‖f‖ + ‖g‖_Γ`
    pub rhs: f64,
    pub ratio: f64,
}

/// `‖f‖` and `‖g_T‖_Γ` by quadrature.
pub fn data_norms(space: &EdgeSpace, sol: &ManufacturedSolution, degree: usize) -> (f64, f64) {
    let vrule = TetRule::with_degree(degree);
    let frule = TriRule::with_degree(degree);
    let f_sq: Vec<f64> = (0..space.mesh.num_tets())
        .into_par_iter()
        .map(|t| {
            let geom = &space.geometry[t];
            vrule
                .bary
                .iter()
                .zip(&vrule.weights)
                .map(|(b, w)| norm_sqr(&sol.f_at(&geom.point(b))) * w * geom.volume)
                .sum()
        })
        .collect();
    let mut g_sq = 0.0;
    for (f, face) in space.mesh.boundary_faces() {
        let geom = space.mesh.face_geometry(f);
        let t = face.tets[0];
        for (fb, w) in frule.bary.iter().zip(&frule.weights) {
            let x = space.geometry[t].point(&face_bary(fb, face.local[0]));
            g_sq +=
                norm_sqr(&tangential(&sol.g_at(&x, &geom.normal), &geom.normal)) * w * geom.area;
        }
    }
    (f_sq.iter().sum::<f64>().sqrt(), g_sq.sqrt())
}

pub fn stability_metrics(
    space: &EdgeSpace,
    eh: &FeFunction,
    sol: &ManufacturedSolution,
    params: &ProblemParams,
    method: Method,
    degree: usize,
) -> Result<StabilityReport> {
    let n = discrete_norms(space, eh);
    let k = params.kappa;
    let mut lhs = n.curl_sq.sqrt() + k * n.l2() + k * n.boundary();
    if method == Method::Cip {
        lhs += jump_seminorm_sq(space, eh, params, false)?.sqrt();
    }
    let (f, g) = data_norms(space, sol, degree);
    let rhs = f + g;
    Ok(StabilityReport {
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Factored `Â` for repeated elliptic projections.
pub struct EllipticProjector<'a> {
    space: &'a EdgeSpace,
    params: &'a ProblemParams,
    a_hat: &'a CsrMatrix,
    solver: DirectSolver<'a>,
}

impl<'a> EllipticProjector<'a> {
    /// `a_hat` must be the matrix of `â_γ` on `space`.
    pub fn new(
        space: &'a EdgeSpace,
        params: &'a ProblemParams,
        a_hat: &'a CsrMatrix,
        coords: Option<&'a [[f64; 3]]>,
    ) -> Result<Self> {
        if a_hat.nrows != space.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.num_dofs(),
                got: a_hat.nrows,
            });
        }
        let solver = DirectSolver::new(
            a_hat,
            &DirectOptions {
                coords,
                ..Default::default()
            },
        )?;
        Ok(Self {
            space,
            params,
            a_hat,
            solver,
        })
    }

    /// `b_i = â(u, φ_i)` for `+`, `â(φ_i, u)` for `−`.
    pub fn smooth_load<U, C>(&self, u: &U, curl_u: &C, sign: Sign, degree: usize) -> Vec<C64>
    where
        U: Fn(&Vec3) -> CVec3 + ?Sized,
        C: Fn(&Vec3) -> CVec3 + ?Sized,
    {
        let coef = FormCoefficients::shifted(self.params);
        smooth_form_load(self.space, u, curl_u, coef, degree, sign == Sign::Minus)
    }

    /// `b_i = â(v, φ_i)` for `+`, `â(φ_i, v)` for `−`.
    pub fn discrete_load(&self, v: &FeFunction, sign: Sign) -> Vec<C64> {
        match sign {
            Sign::Plus => self.a_hat.mul_vec(&v.coeffs),
            Sign::Minus => {
                let c: Vec<C64> = v.coeffs.iter().map(|z| z.conj()).collect();
                self.a_hat.mul_vec(&c)
            }
        }
    }

    /// Solve with a load from [`Self::smooth_load`] or [`Self::discrete_load`].
    /// `Â` is symmetric, so the `−` system is the conjugate of the `+` one.
    pub fn project_load(&self, load: &[C64], sign: Sign) -> Result<(FeFunction, SolveReport)> {
        let (x, report) = self.solver.solve(load)?;
        let x = match sign {
            Sign::Plus => x,
            Sign::Minus => x.into_iter().map(|z| z.conj()).collect(),
        };
        Ok((FeFunction::from_coeffs(x), report))
    }

    pub fn project_smooth<U, C>(
        &self,
        u: &U,
        curl_u: &C,
        sign: Sign,
        degree: usize,
    ) -> Result<(FeFunction, SolveReport)>
    where
        U: Fn(&Vec3) -> CVec3 + ?Sized,
        C: Fn(&Vec3) -> CVec3 + ?Sized,
    {
        self.project_load(&self.smooth_load(u, curl_u, sign, degree), sign)
    }

    pub fn project_discrete(
        &self,
        v: &FeFunction,
        sign: Sign,
    ) -> Result<(FeFunction, SolveReport)> {
        self.project_load(&self.discrete_load(v, sign), sign)
    }

    /// Relative defect of `â(P⁺u, w) = â(u, P⁻w)` for smooth `u`, `w`.
    pub fn adjoint_identity_defect(
        &self,
        u: &ManufacturedSolution,
        w: &ManufacturedSolution,
        degree: usize,
    ) -> Result<f64> {
        let ue = |x: &Vec3| u.e_at(x);
        let uc = |x: &Vec3| u.curl_at(x);
        let we = |x: &Vec3| w.e_at(x);
        let wc = |x: &Vec3| w.curl_at(x);
        let b_plus = self.smooth_load(&ue, &uc, Sign::Plus, degree);
        let b_minus = self.smooth_load(&we, &wc, Sign::Minus, degree);
        let (pu, _) = self.project_load(&b_plus, Sign::Plus)?;
        let (pw, _) = self.project_load(&b_minus, Sign::Minus)?;
        // â(P⁺u, w) = Σ_j x⁺_j â(φ_j, w); â(u, P⁻w) = Σ_i conj(x⁻_i) â(u, φ_i).
        let lhs: C64 = pu.coeffs.iter().zip(&b_minus).map(|(x, c)| x * c).sum();
        let rhs: C64 = pw
            .coeffs
            .iter()
            .zip(&b_plus)
            .map(|(x, b)| x.conj() * b)
            .sum();
        Ok((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE))
    }
}

/// Convenience wrapper: assemble, factor and project once.
pub fn elliptic_projection(
    space: &EdgeSpace,
    params: &ProblemParams,
    method: Method,
    sol: &ManufacturedSolution,
    sign: Sign,
    degree: usize,
) -> Result<(FeFunction, SolveReport)> {
    let a_hat = crate::forms::assemble_hat_a(space, params, method)?;
    let coords = space.dof_points();
    let proj = EllipticProjector::new(space, params, &a_hat, Some(&coords))?;
    proj.project_smooth(
        &|x: &Vec3| sol.e_at(x),
        &|x: &Vec3| sol.curl_at(x),
        sign,
        degree,
    )
}

fn random_function(n: usize, rng: &mut rand::rngs::StdRng, complex: bool) -> FeFunction {
    FeFunction::from_coeffs(
        (0..n)
            .map(|_| {
                C64::new(
                    rng.gen_range(-1.0..1.0),
                    if complex {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        0.0
                    },
                )
            })
            .collect(),
    )
}

/// `⦀v⦀` of a discrete function.
pub fn augmented_norm(
    space: &EdgeSpace,
    v: &FeFunction,
    params: &ProblemParams,
    method: Method,
) -> Result<f64> {
    let n = discrete_norms(space, v);
    let j = match method {
        Method::Eem => 0.0,
        Method::Cip => jump_seminorm_sq(space, v, params, false)?,
    };
    let e = n.energy(params.kappa, params.lambda);
    Ok((e * e + j).sqrt())
}

/// Max over random `v_h` of `|a_γ(E − E_h, v_h)| / (⦀E − E_h⦀ ⦀v_h⦀)`.
/// `a_γ(E, v_h)` is integrated at `degree`, `a_γ(E_h, v_h)` uses `a`.
#[allow(clippy::too_many_arguments)]
pub fn galerkin_orthogonality_check(
    space: &EdgeSpace,
    a: &CsrMatrix,
    eh: &FeFunction,
    sol: &ManufacturedSolution,
    params: &ProblemParams,
    method: Method,
    degree: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let load = smooth_form_load(
        space,
        &|x: &Vec3| sol.e_at(x),
        &|x: &Vec3| sol.curl_at(x),
        FormCoefficients::maxwell(params),
        degree,
        false,
    );
    let aeh = a.mul_vec(&eh.coeffs);
    let residual: Vec<C64> = load.iter().zip(&aeh).map(|(l, r)| l - r).collect();
    let err = compute_errors(
        space,
        eh,
        sol,
        params,
        method,
        degree.max(ERROR_QUAD_DEGREE),
    )?
    .augmented;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let v = random_function(space.num_dofs(), &mut rng, true);
        let defect: C64 = v
            .coeffs
            .iter()
            .zip(&residual)
            .map(|(vi, r)| vi.conj() * r)
            .sum();
        let vn = augmented_norm(space, &v, params, method)?;
        worst = worst.max(ratio(defect.norm(), err * vn));
    }
    Ok(worst)
}

/// `‖v − v⁰‖ / ‖v_T‖_Γ` where `v⁰` has its boundary DOFs zeroed.
pub fn boundary_zeroing_ratio(space: &EdgeSpace, v: &FeFunction) -> f64 {
    let v0 = space.zero_boundary_dofs(v);
    let d = discrete_norms(space, &v.sub(&v0));
    let b = discrete_norms(space, v);
    ratio(d.l2(), b.boundary())
}

/// Worst cases over random real `v_h` of the coercivity structure of `â_γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    /// `min Re â(v,v) / (½‖curl v‖² + κ²‖v‖²)`; at least 1 when coercive.
    pub re_ratio: f64,
    /// `min (Re â(v,v) − Im â(v,v)) / ⦀v⦀²`
    pub combined_ratio: f64,
    /// `min −Im â(v,v)`; nonnegative for `Im γ ≤ 0`.
    pub min_neg_imag: f64,
}

pub fn coercivity_diagnostic(
    space: &EdgeSpace,
    a_hat: &CsrMatrix,
    params: &ProblemParams,
    method: Method,
    trials: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let k2 = params.kappa * params.kappa;
    let mut rep = CoercivityReport {
        re_ratio: f64::INFINITY,
        combined_ratio: f64::INFINITY,
        min_neg_imag: f64::INFINITY,
    };
    for _ in 0..trials {
        let v = random_function(space.num_dofs(), &mut rng, false);
        let q = a_hat.sesquilinear(&v.coeffs, &v.coeffs);
        let n = discrete_norms(space, &v);
        let triple = augmented_norm(space, &v, params, method)?;
        rep.re_ratio = rep.re_ratio.min(q.re / (0.5 * n.curl_sq + k2 * n.l2_sq));
        rep.combined_ratio = rep.combined_ratio.min((q.re - q.im) / (triple * triple));
        rep.min_neg_imag = rep.min_neg_imag.min(-q.im);
    }
    Ok(rep)
}

/// Matrix of `‖curl ·‖² + κ²‖·‖² + κλ‖·_T‖²_Γ` on `space`.
pub fn energy_matrix(space: &EdgeSpace, params: &ProblemParams) -> CsrMatrix {
    assemble_form(
        space,
        FormCoefficients {
            curl: C64::new(1.0, 0.0),
            mass: C64::new(params.kappa * params.kappa, 0.0),
            boundary: C64::new(params.kappa * params.lambda, 0.0),
        },
    )
}
