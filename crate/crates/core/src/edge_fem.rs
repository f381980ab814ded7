//! Lowest-order Nédélec edge elements of the second kind.
//!
//! Each edge `e = (a, b)` (global orientation low → high vertex index)
//! carries two shape functions on every incident tetrahedron:
//!
//! * the Whitney function `λ_a∇λ_b − λ_b∇λ_a`, curl `2∇λ_a×∇λ_b`;
//! * the gradient function `∇(λ_aλ_b)`, curl zero.
//!
//! The twelve functions span `(P₁)³` on a tetrahedron. The degrees of
//! freedom are the edge moments `M₁(v) = ∫_e v·t ds` and
//! `M₂(v) = ∫_e (v·t) q ds` with `q` the odd linear function that is `−1`
//! at `a` and `+1` at `b`. Against these shapes the moment matrix is
//! diagonal with entries `1` (Whitney) and `−1/3` (gradient), so coefficient
//! recovery from moments is a per-edge scaling.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{signed_volume, CVec3, Vec3};
use crate::mesh::{Mesh, LOCAL_EDGES};
use crate::quadrature::LineRule;

/// Shape kind carried by the second DOF slot of an edge.
pub const WHITNEY: usize = 0;
pub const GRADIENT: usize = 1;

/// Inverse of the diagonal moment matrix: coefficient = scale · moment.
pub const MOMENT_TO_COEFF: [f64; 2] = [1.0, -3.0];

/// Points used for the edge-moment quadrature.
pub const EDGE_QUAD_POINTS: usize = 4;

#[derive(Debug, Clone)]
pub struct TetGeometry {
    pub points: [Vec3; 4],
    pub volume: f64,
    pub grad_lambda: [Vec3; 4],
}

impl TetGeometry {
    pub fn new(points: [Vec3; 4]) -> Result<Self> {
        Self::with_index(points, 0)
    }

    fn with_index(points: [Vec3; 4], tet: usize) -> Result<Self> {
        let volume = signed_volume(&points);
        let scale = (points[1] - points[0])
            .norm()
            .max((points[3] - points[2]).norm());
        if !(volume.abs() > 1e-14 * scale.powi(3)) {
            return Err(Error::DegenerateTet { tet, volume });
        }
        let jac = nalgebra::Matrix3::from_columns(&[
            points[1] - points[0],
            points[2] - points[0],
            points[3] - points[0],
        ]);
        let inv = jac
            .try_inverse()
            .ok_or(Error::DegenerateTet { tet, volume })?;
        let g1: Vec3 = inv.row(0).transpose();
        let g2: Vec3 = inv.row(1).transpose();
        let g3: Vec3 = inv.row(2).transpose();
        let g0 = -(g1 + g2 + g3);
        Ok(Self {
            points,
            volume: volume.abs(),
            grad_lambda: [g0, g1, g2, g3],
        })
    }

    pub fn barycentric(&self, x: &Vec3) -> [f64; 4] {
        let d = x - self.points[0];
        let l1 = self.grad_lambda[1].dot(&d);
        let l2 = self.grad_lambda[2].dot(&d);
        let l3 = self.grad_lambda[3].dot(&d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    pub fn point(&self, bary: &[f64; 4]) -> Vec3 {
        self.points[0] * bary[0]
            + self.points[1] * bary[1]
            + self.points[2] * bary[2]
            + self.points[3] * bary[3]
    }

    pub fn diameter(&self) -> f64 {
        LOCAL_EDGES
            .iter()
            .map(|e| (self.points[e[1]] - self.points[e[0]]).norm())
            .fold(0.0, f64::max)
    }
}

/// A shape function `φ = Σ_k λ_k a_k` with constant curl.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFunction {
    pub coeffs: [Vec3; 4],
    pub curl: Vec3,
}

impl ShapeFunction {
    #[inline]
    pub fn value(&self, bary: &[f64; 4]) -> Vec3 {
        self.coeffs[0] * bary[0]
            + self.coeffs[1] * bary[1]
            + self.coeffs[2] * bary[2]
            + self.coeffs[3] * bary[3]
    }
}

/// The twelve shapes of one tetrahedron, ordered `2·(local edge) + kind`.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub shapes: [ShapeFunction; 12],
}

impl LocalBasis {
    /// Shapes oriented by `signs` (+1 when the local edge order agrees with
    /// the global orientation). Only the Whitney shapes depend on the sign.
    pub fn new(geom: &TetGeometry, signs: [i8; 6]) -> Self {
        let g = &geom.grad_lambda;
        let zero = ShapeFunction {
            coeffs: [Vec3::zeros(); 4],
            curl: Vec3::zeros(),
        };
        let mut shapes = [zero; 12];
        for (le, &[i, j]) in LOCAL_EDGES.iter().enumerate() {
            let s = signs[le] as f64;
            let mut w = zero;
            w.coeffs[i] = g[j] * s;
            w.coeffs[j] = -g[i] * s;
            w.curl = g[i].cross(&g[j]) * (2.0 * s);
            let mut q = zero;
            q.coeffs[i] = g[j];
            q.coeffs[j] = g[i];
            shapes[2 * le + WHITNEY] = w;
            shapes[2 * le + GRADIENT] = q;
        }
        Self { shapes }
    }

    /// Basis in local orientation (every local edge `i → j` with `i < j`).
    pub fn local(geom: &TetGeometry) -> Self {
        Self::new(geom, [1; 6])
    }

    /// `(value, curl)` of all twelve shapes at barycentric coordinates `bary`.
    pub fn eval(&self, bary: &[f64; 4]) -> [(Vec3, Vec3); 12] {
        std::array::from_fn(|k| (self.shapes[k].value(bary), self.shapes[k].curl))
    }
}

/// Max deviation from the identity of the 12x12 matrix of scaled edge
/// moments applied to the local shapes of `geom`.
pub fn unisolvence_defect(geom: &TetGeometry) -> f64 {
    let basis = LocalBasis::local(geom);
    let rule = LineRule::gauss(EDGE_QUAD_POINTS);
    let mut worst: f64 = 0.0;
    for (row_edge, &[i, j]) in LOCAL_EDGES.iter().enumerate() {
        let d = geom.points[j] - geom.points[i];
        let len = d.norm();
        let t = d / len;
        for (col, shape) in basis.shapes.iter().enumerate() {
            let mut m = [0.0; 2];
            for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                let mut bary = [0.0; 4];
                bary[i] = 1.0 - s;
                bary[j] = s;
                let vt = shape.value(&bary).dot(&t);
                m[0] += w * len * vt;
                m[1] += w * len * vt * (2.0 * s - 1.0);
            }
            for kind in 0..2 {
                let expected = if col == 2 * row_edge + kind { 1.0 } else { 0.0 };
                worst = worst.max((m[kind] * MOMENT_TO_COEFF[kind] - expected).abs());
            }
        }
    }
    worst
}

/// Two degrees of freedom per global edge: `2e + WHITNEY`, `2e + GRADIENT`.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub num_edges: usize,
    pub edge_on_boundary: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            num_edges: mesh.num_edges(),
            edge_on_boundary: mesh.edge_on_boundary.clone(),
        }
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_edges
    }

    #[inline]
    pub fn dof(&self, edge: usize, kind: usize) -> usize {
        2 * edge + kind
    }

    pub fn edge_of(&self, dof: usize) -> usize {
        dof / 2
    }

    pub fn kind_of(&self, dof: usize) -> usize {
        dof % 2
    }

    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        self.edge_on_boundary[dof / 2]
    }

    pub fn tet_dofs(&self, mesh: &Mesh, t: usize) -> [usize; 12] {
        let e = &mesh.tet_edges[t];
        std::array::from_fn(|k| self.dof(e[k / 2].index, k % 2))
    }
}

/// Mesh, DOF map, and per-tetrahedron geometry and basis caches.
#[derive(Debug, Clone)]
pub struct EdgeSpace {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub geometry: Vec<TetGeometry>,
    pub bases: Vec<LocalBasis>,
    pub tet_dofs: Vec<[usize; 12]>,
}

impl EdgeSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let dofs = DofMap::new(&mesh);
        let mut geometry = Vec::with_capacity(mesh.num_tets());
        let mut bases = Vec::with_capacity(mesh.num_tets());
        let mut tet_dofs = Vec::with_capacity(mesh.num_tets());
        for t in 0..mesh.num_tets() {
            let geom = TetGeometry::with_index(mesh.tet_points(t), t)?;
            let signs = mesh.tet_edges[t].map(|e| e.sign);
            bases.push(LocalBasis::new(&geom, signs));
            geometry.push(geom);
            tet_dofs.push(dofs.tet_dofs(&mesh, t));
        }
        Ok(Self {
            mesh,
            dofs,
            geometry,
            bases,
            tet_dofs,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs()
    }

    pub fn zero_function(&self) -> FeFunction {
        FeFunction::zeros(self.num_dofs())
    }

    /// Midpoint of the edge carrying each DOF (used for nested dissection).
    pub fn dof_points(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.num_dofs()];
        for (e, &[a, b]) in self.mesh.edges.iter().enumerate() {
            let m = (self.mesh.vertices[a] + self.mesh.vertices[b]) * 0.5;
            for kind in [WHITNEY, GRADIENT] {
                out[self.dofs.dof(e, kind)] = [m.x, m.y, m.z];
            }
        }
        out
    }

    /// Value and curl of `v` at barycentric coordinates `bary` of tet `t`.
    #[inline]
    pub fn eval_bary(&self, v: &FeFunction, t: usize, bary: &[f64; 4]) -> (CVec3, CVec3) {
        let mut val = CVec3::zeros();
        let mut curl = CVec3::zeros();
        let basis = &self.bases[t];
        for (k, &d) in self.tet_dofs[t].iter().enumerate() {
            let c = v.coeffs[d];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let s = &basis.shapes[k];
            let phi = s.value(bary);
            val += CVec3::new(c * phi.x, c * phi.y, c * phi.z);
            curl += CVec3::new(c * s.curl.x, c * s.curl.y, c * s.curl.z);
        }
        (val, curl)
    }

    /// Constant curl of `v` on tet `t`.
    pub fn curl_on(&self, v: &FeFunction, t: usize) -> CVec3 {
        let basis = &self.bases[t];
        let mut curl = CVec3::zeros();
        for (k, &d) in self.tet_dofs[t].iter().enumerate() {
            let c = v.coeffs[d];
            let s = basis.shapes[k].curl;
            curl += CVec3::new(c * s.x, c * s.y, c * s.z);
        }
        curl
    }

    /// Value and curl of `v` at a physical point in tet `t`.
    pub fn evaluate(&self, v: &FeFunction, t: usize, x: &Vec3) -> Result<(CVec3, CVec3)> {
        let geom = &self.geometry[t];
        let bary = geom.barycentric(x);
        if bary.iter().any(|&l| l < -1e-10) {
            return Err(Error::PointOutsideTet {
                tet: t,
                point: [x.x, x.y, x.z],
            });
        }
        Ok(self.eval_bary(v, t, &bary))
    }

    /// Edge moments `(M₁, M₂)` of `field` on global edge `e`.
    pub fn edge_moments<F>(&self, field: &F, e: usize, rule: &LineRule) -> [C64; 2]
    where
        F: Fn(&Vec3) -> CVec3 + ?Sized,
    {
        let [a, b] = self.mesh.edges[e];
        let xa = self.mesh.vertices[a];
        let d = self.mesh.vertices[b] - xa;
        let len = d.norm();
        let t = d / len;
        let mut m = [C64::new(0.0, 0.0); 2];
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let v = field(&(xa + d * s));
            let vt = v.x * t.x + v.y * t.y + v.z * t.z;
            m[0] += vt * (w * len);
            m[1] += vt * (w * len * (2.0 * s - 1.0));
        }
        m
    }

    /// Canonical interpolant `π_N field`.
    pub fn interpolate<F>(&self, field: &F) -> FeFunction
    where
        F: Fn(&Vec3) -> CVec3 + ?Sized,
    {
        let rule = LineRule::gauss(EDGE_QUAD_POINTS);
        let mut coeffs = vec![C64::new(0.0, 0.0); self.num_dofs()];
        for e in 0..self.mesh.num_edges() {
            let m = self.edge_moments(field, e, &rule);
            for kind in [WHITNEY, GRADIENT] {
                coeffs[self.dofs.dof(e, kind)] = m[kind] * MOMENT_TO_COEFF[kind];
            }
        }
        FeFunction { coeffs }
    }

    /// Copy of `v` with every degree of freedom on a boundary edge set to zero.
    pub fn zero_boundary_dofs(&self, v: &FeFunction) -> FeFunction {
        let mut out = v.clone();
        for (d, c) in out.coeffs.iter_mut().enumerate() {
            if self.dofs.is_boundary_dof(d) {
                *c = C64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Whether tet `t` has an edge on the boundary (and thus boundary DOFs).
    pub fn tet_touches_boundary(&self, t: usize) -> bool {
        self.mesh.tet_edges[t]
            .iter()
            .any(|e| self.dofs.edge_on_boundary[e.index])
    }
}

/// Coefficient vector of a discrete field in an [`EdgeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    pub coeffs: Vec<C64>,
}

impl FeFunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn sub(&self, other: &FeFunction) -> FeFunction {
        FeFunction {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}
