//! Assembly of the sesquilinear forms
//!
//! ```text
//! a(u, v)   = (curl u, curl v) − κ²(u, v) − iκλ⟨u_T, v_T⟩_Γ
//! J(u, v)   = Σ_f γ_f h_f ⟨[curl u], [curl v]⟩_f
//! a_γ       = a + J
//! â_γ       = a_γ + 2κ²(u, v)
//! ```
//!
//! and of the load `(f, v) + ⟨g, v_T⟩_Γ`. Shape functions are real, so the
//! matrices are complex symmetric (`A = Aᵀ`). Row `i`, column `j` holds
//! `form(φ_j, φ_i)`.

use num_complex::Complex64 as C64;

use crate::edge_fem::EdgeSpace;
use crate::error::{Error, Result};
use crate::geometry::{cdot_real, tangential, CVec3, Vec3};
use crate::mesh::{FaceClass, LOCAL_FACES};
use crate::quadrature::{TetRule, TriRule};
use crate::sparse::CsrMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Galerkin method: plain edge elements or with the curl-jump penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Eem,
    Cip,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Eem => "EEM",
            Method::Cip => "CIP",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eem" => Ok(Method::Eem),
            "cip" | "cip-eem" => Ok(Method::Cip),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Penalty values tuned for cub6 meshes, with a small negative imaginary shift.
pub fn paper_gamma() -> [C64; 3] {
    [
        C64::new(-(2f64.sqrt()) / 24.0, -0.01),
        C64::new(-(6f64.sqrt()) / 72.0, -0.01),
        C64::new(-(2f64.sqrt()) / 48.0, -0.01),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub kappa: f64,
    pub lambda: f64,
    /// Penalty values `γ₁, γ₂, γ₃`.
    pub gamma: [C64; 3],
    /// Index into `gamma` for each [`FaceClass`] (by ordinal).
    pub class_to_gamma: [usize; 3],
}

impl ProblemParams {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            kappa,
            lambda,
            gamma: [ZERO; 3],
            class_to_gamma: [0, 1, 2],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(mut self, gamma: [C64; 3]) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_class_map(mut self, class_to_gamma: [usize; 3]) -> Result<Self> {
        if class_to_gamma.iter().any(|&i| i > 2) {
            return Err(Error::Config(format!(
                "class map {class_to_gamma:?} has an index above 2"
            )));
        }
        self.class_to_gamma = class_to_gamma;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn gamma_of(&self, class: FaceClass) -> C64 {
        self.gamma[self.class_to_gamma[class.ordinal()]]
    }

    pub fn has_penalty(&self) -> bool {
        self.gamma.iter().any(|g| *g != ZERO)
    }

    /// Penalty values outside `Re γ ≥ 0, Im γ ≤ 0`. Negative real parts are
    /// admissible only down to a mesh-dependent bound, so these are warnings.
    pub fn penalty_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, g) in self.gamma.iter().enumerate() {
            if g.re < 0.0 {
                out.push(format!("gamma{} = {} has negative real part; coercivity of the shifted form needs |Re gamma| small", i + 1, fmt_complex(*g)));
            }
            if g.im > 0.0 {
                out.push(format!(
                    "gamma{} = {} has positive imaginary part",
                    i + 1,
                    fmt_complex(*g)
                ));
            }
        }
        out
    }
}

/// `a+bi` rendering used in CSV and config echoes.
pub fn fmt_complex(z: C64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parse `a+bi`, `a-bi`, `a`, `bi`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim().replace(' ', "");
    let bad = || Error::Config(format!("cannot parse complex number '{s}'"));
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = body[..k].parse().map_err(|_| bad())?;
                let im_s = &body[k..];
                let im: f64 = match im_s {
                    "+" => 1.0,
                    "-" => -1.0,
                    _ => im_s.parse().map_err(|_| bad())?,
                };
                Ok(C64::new(re, im))
            }
            None => {
                let im: f64 = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    _ => body.parse().map_err(|_| bad())?,
                };
                Ok(C64::new(0.0, im))
            }
        }
    } else {
        Ok(C64::new(t.parse().map_err(|_| bad())?, 0.0))
    }
}

/// Real 12×12 element matrices of one tetrahedron.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub curl_curl: [[f64; 12]; 12],
    pub mass: [[f64; 12]; 12],
}

/// Exact curl-curl and mass matrices: curls are constant and the shapes
/// are linear in the barycentric coordinates, `∫ λ_k λ_l = |K|(1 + δ_kl)/20`.
pub fn element_matrices(space: &EdgeSpace, t: usize) -> ElementMatrices {
    let basis = &space.bases[t];
    let vol = space.geometry[t].volume;
    let sums: [Vec3; 12] = std::array::from_fn(|i| basis.shapes[i].coeffs.iter().sum());
    let mut curl_curl = [[0.0; 12]; 12];
    let mut mass = [[0.0; 12]; 12];
    for i in 0..12 {
        for j in 0..=i {
            let si = &basis.shapes[i];
            let sj = &basis.shapes[j];
            let cc = vol * si.curl.dot(&sj.curl);
            let diag: f64 = (0..4).map(|k| si.coeffs[k].dot(&sj.coeffs[k])).sum();
            let m = vol / 20.0 * (diag + sums[i].dot(&sums[j]));
            curl_curl[i][j] = cc;
            curl_curl[j][i] = cc;
            mass[i][j] = m;
            mass[j][i] = m;
        }
    }
    ElementMatrices { curl_curl, mass }
}

/// Exact `∫_f φ_{i,T}·φ_{j,T}` over boundary face `f` in the local numbering
/// of its tetrahedron (`∫_f λ_k λ_l = |f|(1 + δ_kl)/12`).
pub fn boundary_face_matrix(space: &EdgeSpace, f: usize) -> [[f64; 12]; 12] {
    let mesh = &space.mesh;
    let face = &mesh.faces[f];
    let t = face.tets[0];
    let geom = mesh.face_geometry(f);
    let nu = geom.normal;
    let verts = LOCAL_FACES[face.local[0]];
    let basis = &space.bases[t];
    let proj: [[Vec3; 3]; 12] = std::array::from_fn(|i| {
        verts.map(|k| {
            let a = basis.shapes[i].coeffs[k];
            a - nu * a.dot(&nu)
        })
    });
    let sums: [Vec3; 12] = std::array::from_fn(|i| proj[i].iter().sum());
    let mut out = [[0.0; 12]; 12];
    for i in 0..12 {
        for j in 0..=i {
            let diag: f64 = (0..3).map(|k| proj[i][k].dot(&proj[j][k])).sum();
            let v = geom.area / 12.0 * (diag + sums[i].dot(&sums[j]));
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Coefficients of `c_curl (curl u, curl v) + c_mass (u, v) + c_bnd ⟨u_T, v_T⟩_Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCoefficients {
    pub curl: C64,
    pub mass: C64,
    pub boundary: C64,
}

impl FormCoefficients {
    /// The Maxwell form `a`.
    pub fn maxwell(p: &ProblemParams) -> Self {
        Self {
            curl: C64::new(1.0, 0.0),
            mass: C64::new(-p.kappa * p.kappa, 0.0),
            boundary: C64::new(0.0, -p.kappa * p.lambda),
        }
    }

    /// The shifted form `â = a + 2κ²(·,·)`.
    pub fn shifted(p: &ProblemParams) -> Self {
        Self {
            mass: C64::new(p.kappa * p.kappa, 0.0),
            ..Self::maxwell(p)
        }
    }

    pub fn mass_only() -> Self {
        Self {
            curl: ZERO,
            mass: C64::new(1.0, 0.0),
            boundary: ZERO,
        }
    }
}

fn volume_pattern(space: &EdgeSpace) -> CsrMatrix {
    CsrMatrix::from_groups(space.num_dofs(), space.tet_dofs.iter().map(|d| &d[..]))
}

/// Assemble `c_curl K + c_mass M + c_bnd B` for the given coefficients.
pub fn assemble_form(space: &EdgeSpace, coef: FormCoefficients) -> CsrMatrix {
    let mut a = volume_pattern(space);
    for t in 0..space.mesh.num_tets() {
        let em = element_matrices(space, t);
        let dofs = &space.tet_dofs[t];
        for i in 0..12 {
            for j in 0..12 {
                let v = coef.curl * em.curl_curl[i][j] + coef.mass * em.mass[i][j];
                a.add_to(dofs[i], dofs[j], v);
            }
        }
    }
    if coef.boundary != ZERO {
        for (f, face) in space.mesh.boundary_faces() {
            let bm = boundary_face_matrix(space, f);
            let dofs = &space.tet_dofs[face.tets[0]];
            for i in 0..12 {
                for j in 0..12 {
                    if bm[i][j] != 0.0 {
                        a.add_to(dofs[i], dofs[j], coef.boundary * bm[i][j]);
                    }
                }
            }
        }
    }
    a
}

/// Matrix of the Maxwell form `a`.
pub fn assemble_a(space: &EdgeSpace, params: &ProblemParams) -> CsrMatrix {
    assemble_form(space, FormCoefficients::maxwell(params))
}

pub fn assemble_mass(space: &EdgeSpace) -> CsrMatrix {
    assemble_form(space, FormCoefficients::mass_only())
}

/// How the two one-sided traces are combined on an interior face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpRule {
    /// `curl u|K⁻ × ν_K⁻ + curl u|K⁺ × ν_K⁺`.
    #[default]
    Sum,
    /// Sign-flipped second trace. Inconsistent; only used to check that the
    /// validation suite detects it.
    Difference,
}

/// Per-DOF jumps `[curl φ]` on interior face `f`, as `(dof, vector)` pairs.
/// `swap` processes `K⁺` before `K⁻`.
pub fn face_jumps(space: &EdgeSpace, f: usize, rule: JumpRule, swap: bool) -> Vec<(usize, Vec3)> {
    let mesh = &space.mesh;
    let face = &mesh.faces[f];
    debug_assert!(face.interior);
    let order: [usize; 2] = if swap { [1, 0] } else { [0, 1] };
    let mut out: Vec<(usize, Vec3)> = Vec::with_capacity(9);
    for side in order {
        let t = face.tets[side];
        let mut nu = mesh.tet_face_normal(t, face.local[side]);
        if rule == JumpRule::Difference && side == 1 {
            nu = -nu;
        }
        let basis = &space.bases[t];
        for (k, &d) in space.tet_dofs[t].iter().enumerate() {
            let c = basis.shapes[k].curl;
            if c == Vec3::zeros() {
                continue;
            }
            let j = c.cross(&nu);
            match out.iter_mut().find(|(dd, _)| *dd == d) {
                Some((_, v)) => *v += j,
                None => out.push((d, j)),
            }
        }
    }
    out
}

/// Interior-penalty matrix `J`. Faces with `γ_f = 0` contribute no entries,
/// so for `γ ≡ 0` the result is an empty matrix.
pub fn assemble_penalty(space: &EdgeSpace, params: &ProblemParams) -> Result<CsrMatrix> {
    assemble_penalty_with(space, params, JumpRule::Sum)
}

pub fn assemble_penalty_with(
    space: &EdgeSpace,
    params: &ProblemParams,
    rule: JumpRule,
) -> Result<CsrMatrix> {
    let n = space.num_dofs();
    if !params.has_penalty() {
        return Ok(CsrMatrix::zeros(n, n));
    }
    let classes = space.mesh.classify_interior_faces()?;
    let mut contributions = Vec::new();
    for (f, _) in space.mesh.interior_faces() {
        let gamma = params.gamma_of(classes[f].expect("interior face classified"));
        if gamma == ZERO {
            continue;
        }
        let geom = space.mesh.face_geometry(f);
        let jumps = face_jumps(space, f, rule, false);
        contributions.push((gamma * (geom.diameter * geom.area), jumps));
    }
    let groups: Vec<Vec<usize>> = contributions
        .iter()
        .map(|(_, j)| j.iter().map(|(d, _)| *d).collect())
        .collect();
    let mut m = CsrMatrix::from_groups(n, groups.iter().map(|g| &g[..]));
    for (scale, jumps) in &contributions {
        for (di, ji) in jumps {
            for (dj, jj) in jumps {
                m.add_to(*di, *dj, *scale * ji.dot(jj));
            }
        }
    }
    Ok(m)
}

/// System matrix of `a_γ` for the chosen method (`J` only for CIP).
pub fn assemble_system(
    space: &EdgeSpace,
    params: &ProblemParams,
    method: Method,
) -> Result<CsrMatrix> {
    let a = assemble_a(space, params);
    match method {
        Method::Eem => Ok(a),
        Method::Cip => a.add_scaled(&assemble_penalty(space, params)?, C64::new(1.0, 0.0)),
    }
}

/// Matrix of `â_γ = a_γ + 2κ²(·,·)`.
pub fn assemble_hat_a(
    space: &EdgeSpace,
    params: &ProblemParams,
    method: Method,
) -> Result<CsrMatrix> {
    let a = assemble_system(space, params, method)?;
    let m = assemble_mass(space);
    a.add_scaled(&m, C64::new(2.0 * params.kappa * params.kappa, 0.0))
}

/// Load vector `b_i = (f, φ_i) + ⟨g_T, φ_{i,T}⟩_Γ` by quadrature of the given
/// degree. `g` receives the point and the outward unit normal and is
/// projected onto the tangent plane.
pub fn assemble_rhs<F, G>(space: &EdgeSpace, f: &F, g: &G, degree: usize) -> Vec<C64>
where
    F: Fn(&Vec3) -> CVec3 + ?Sized,
    G: Fn(&Vec3, &Vec3) -> CVec3 + ?Sized,
{
    let mut b = vec![ZERO; space.num_dofs()];
    let vrule = TetRule::with_degree(degree);
    for t in 0..space.mesh.num_tets() {
        let geom = &space.geometry[t];
        let basis = &space.bases[t];
        let dofs = &space.tet_dofs[t];
        let mut local = [ZERO; 12];
        for (bary, w) in vrule.bary.iter().zip(&vrule.weights) {
            let x = geom.point(bary);
            let fx = f(&x);
            let wv = w * geom.volume;
            for (k, s) in basis.shapes.iter().enumerate() {
                local[k] += cdot_real(&fx, &s.value(bary)) * wv;
            }
        }
        for k in 0..12 {
            b[dofs[k]] += local[k];
        }
    }
    let frule = TriRule::with_degree(degree);
    for (fi, face) in space.mesh.boundary_faces() {
        let geom = space.mesh.face_geometry(fi);
        let t = face.tets[0];
        let basis = &space.bases[t];
        let dofs = &space.tet_dofs[t];
        let verts = LOCAL_FACES[face.local[0]];
        let mut local = [ZERO; 12];
        for (fb, w) in frule.bary.iter().zip(&frule.weights) {
            let mut bary = [0.0; 4];
            for (k, &v) in verts.iter().enumerate() {
                bary[v] = fb[k];
            }
            let x = space.geometry[t].point(&bary);
            let gx = tangential(&g(&x, &geom.normal), &geom.normal);
            let wf = w * geom.area;
            for (k, s) in basis.shapes.iter().enumerate() {
                local[k] += cdot_real(&gx, &s.value(&bary)) * wf;
            }
        }
        for k in 0..12 {
            b[dofs[k]] += local[k];
        }
    }
    b
}

/// `form(u, φ_i)` (or `form(φ_i, u)` when `adjoint`) for a smooth field `u`
/// with curl `curl_u`, by quadrature. Jump terms vanish for smooth `u`.
pub fn smooth_form_load<U, C>(
    space: &EdgeSpace,
    u: &U,
    curl_u: &C,
    coef: FormCoefficients,
    degree: usize,
    adjoint: bool,
) -> Vec<C64>
where
    U: Fn(&Vec3) -> CVec3 + ?Sized,
    C: Fn(&Vec3) -> CVec3 + ?Sized,
{
    let fix = |v: CVec3| if adjoint { v.map(|z| z.conj()) } else { v };
    let mut b = vec![ZERO; space.num_dofs()];
    let vrule = TetRule::with_degree(degree);
    for t in 0..space.mesh.num_tets() {
        let geom = &space.geometry[t];
        let basis = &space.bases[t];
        let dofs = &space.tet_dofs[t];
        let mut local = [ZERO; 12];
        for (bary, w) in vrule.bary.iter().zip(&vrule.weights) {
            let x = geom.point(bary);
            let ux = fix(u(&x));
            let cx = fix(curl_u(&x));
            let wv = w * geom.volume;
            for (k, s) in basis.shapes.iter().enumerate() {
                local[k] += (coef.curl * cdot_real(&cx, &s.curl)
                    + coef.mass * cdot_real(&ux, &s.value(bary)))
                    * wv;
            }
        }
        for k in 0..12 {
            b[dofs[k]] += local[k];
        }
    }
    if coef.boundary != ZERO {
        let frule = TriRule::with_degree(degree);
        for (fi, face) in space.mesh.boundary_faces() {
            let geom = space.mesh.face_geometry(fi);
            let t = face.tets[0];
            let basis = &space.bases[t];
            let dofs = &space.tet_dofs[t];
            let verts = LOCAL_FACES[face.local[0]];
            for (fb, w) in frule.bary.iter().zip(&frule.weights) {
                let mut bary = [0.0; 4];
                for (k, &v) in verts.iter().enumerate() {
                    bary[v] = fb[k];
                }
                let x = space.geometry[t].point(&bary);
                let ut = tangential(&fix(u(&x)), &geom.normal);
                for (k, s) in basis.shapes.iter().enumerate() {
                    b[dofs[k]] += coef.boundary * cdot_real(&ut, &s.value(&bary)) * (w * geom.area);
                }
            }
        }
    }
    b
}
