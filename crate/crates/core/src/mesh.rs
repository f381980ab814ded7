//! Conforming tetrahedral meshes of axis-aligned boxes.
//!
//! [`Mesh::cub6`] produces the Kuhn (Freudenthal) subdivision: every grid
//! cell is split into the six simplices `{t : t_σ(1) ≤ t_σ(2) ≤ t_σ(3)}` of
//! its local coordinates, so all six share the cell's main diagonal and
//! neighbouring cells agree on their face diagonals.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{signed_volume, Vec3};

/// Local vertex pairs of the six tetrahedron edges.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertices of the four tetrahedron faces; face `i` is opposite vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

const CLASSIFY_TOL: f64 = 1e-9;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BoxDomain {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn unit() -> Self {
        Self {
            lo: [0.0; 3],
            hi: [1.0; 3],
        }
    }

    /// The `(1, 2)³` cube used by the benchmark problems.
    pub fn shifted_unit() -> Self {
        Self {
            lo: [1.0; 3],
            hi: [2.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.hi[i] > self.lo[i]) || !self.lo[i].is_finite() || !self.hi[i].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "degenerate box: lo={:?} hi={:?}",
                    self.lo, self.hi
                )));
            }
        }
        Ok(())
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn max_side(&self) -> f64 {
        (0..3).map(|i| self.side(i)).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        self.side(0) * self.side(1) * self.side(2)
    }

    pub fn surface_area(&self) -> f64 {
        let (a, b, c) = (self.side(0), self.side(1), self.side(2));
        2.0 * (a * b + b * c + a * c)
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] - tol && p[i] <= self.hi[i] + tol)
    }
}

/// Global edge reference from a tetrahedron, with the orientation of the
/// local edge relative to the global low→high orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedEdge {
    pub index: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    /// Sorted global vertex indices.
    pub vertices: [usize; 3],
    /// Incident tetrahedra; `tets[0]` is the lower index.
    pub tets: [usize; 2],
    /// Local face index in each incident tetrahedron.
    pub local: [usize; 2],
    pub interior: bool,
}

impl Face {
    pub fn neighbours(&self) -> &[usize] {
        if self.interior {
            &self.tets
        } else {
            &self.tets[..1]
        }
    }
}

/// Interior-face kinds of a cub6 mesh, by normal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceClass {
    /// Normal parallel to a coordinate axis.
    AxisAligned,
    /// Normal parallel to a `(±1, ±1, 0)`-type direction.
    Diagonal2D,
    /// Normal parallel to a `(±1, ±1, ±1)`-type direction.
    Diagonal3D,
}

impl FaceClass {
    pub const ALL: [FaceClass; 3] = [Self::AxisAligned, Self::Diagonal2D, Self::Diagonal3D];

    pub fn ordinal(self) -> usize {
        match self {
            Self::AxisAligned => 0,
            Self::Diagonal2D => 1,
            Self::Diagonal3D => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AxisAligned => "axis-aligned",
            Self::Diagonal2D => "diagonal-2d",
            Self::Diagonal3D => "diagonal-3d",
        }
    }

    /// Classify a unit normal; `None` if it matches no class.
    pub fn from_normal(normal: &Vec3) -> Option<Self> {
        let mut a = [normal.x.abs(), normal.y.abs(), normal.z.abs()];
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let s3 = 1.0 / 3f64.sqrt();
        let close = |v: [f64; 3]| (0..3).all(|i| (a[i] - v[i]).abs() <= CLASSIFY_TOL);
        if close([0.0, 0.0, 1.0]) {
            Some(Self::AxisAligned)
        } else if close([0.0, s2, s2]) {
            Some(Self::Diagonal2D)
        } else if close([s3, s3, s3]) {
            Some(Self::Diagonal3D)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub area: f64,
    /// Unit normal, outward with respect to `tets[0]` of the face (and hence
    /// outward from the domain on boundary faces).
    pub normal: Vec3,
    /// Longest edge of the triangle.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: BoxDomain,
    /// Subdivisions per axis.
    pub n: usize,
    pub vertices: Vec<Vec3>,
    /// Positively oriented vertex quadruples.
    pub tets: Vec<[usize; 4]>,
    /// Vertex pairs, low → high index.
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Face>,
    pub tet_edges: Vec<[SignedEdge; 6]>,
    pub tet_faces: Vec<[usize; 4]>,
    pub edge_on_boundary: Vec<bool>,
    /// Grid spacing (largest box side / n).
    pub h0: f64,
    /// Largest tetrahedron diameter.
    pub h: f64,
}

impl Mesh {
    /// Kuhn subdivision of `domain` with `n` cells per axis.
    pub fn cub6(n: usize, domain: BoxDomain) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("cub6 mesh needs n >= 1".into()));
        }
        domain.validate()?;
        let np = n + 1;
        let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let t = [
                        i as f64 / n as f64,
                        j as f64 / n as f64,
                        k as f64 / n as f64,
                    ];
                    vertices.push(Vec3::from_fn(|a, _| {
                        if t[a] == 1.0 {
                            domain.hi[a]
                        } else {
                            domain.lo[a] + domain.side(a) * t[a]
                        }
                    }));
                }
            }
        }

        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut tets = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = [vid(c[0], c[1], c[2]); 4];
                        for (step, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            tet[step + 1] = vid(c[0], c[1], c[2]);
                        }
                        let p = tet.map(|v| vertices[v]);
                        if signed_volume(&p) < 0.0 {
                            tet.swap(2, 3);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
        Self::from_tets(domain, n, vertices, tets)
    }

    /// Build all derived entities (edges, faces, orientation data) from a
    /// vertex list and tetrahedra. Tetrahedra with negative orientation are
    /// flipped; degenerate ones are rejected.
    pub fn from_tets(
        domain: BoxDomain,
        n: usize,
        vertices: Vec<Vec3>,
        mut tets: Vec<[usize; 4]>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut h: f64 = 0.0;
        for (t, tet) in tets.iter_mut().enumerate() {
            if tet.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidInput(format!(
                    "tet {t} references a missing vertex"
                )));
            }
            let p = tet.map(|v| vertices[v]);
            let vol = signed_volume(&p);
            let scale = LOCAL_EDGES
                .iter()
                .map(|e| (p[e[1]] - p[e[0]]).norm())
                .fold(0.0, f64::max);
            h = h.max(scale);
            if vol.abs() <= 1e-14 * scale.powi(3) {
                return Err(Error::DegenerateTet {
                    tet: t,
                    volume: vol,
                });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(tets.len() * 2);
        let mut edges = Vec::new();
        let mut tet_edges = Vec::with_capacity(tets.len());
        for tet in &tets {
            let mut refs = [SignedEdge { index: 0, sign: 1 }; 6];
            for (le, pair) in LOCAL_EDGES.iter().enumerate() {
                let (a, b) = (tet[pair[0]], tet[pair[1]]);
                let key = (a.min(b), a.max(b));
                let next = edges.len();
                let idx = *edge_index.entry(key).or_insert(next);
                if idx == next {
                    edges.push([key.0, key.1]);
                }
                refs[le] = SignedEdge {
                    index: idx,
                    sign: if a < b { 1 } else { -1 },
                };
            }
            tet_edges.push(refs);
        }

        let mut face_index: HashMap<[usize; 3], usize> = HashMap::with_capacity(tets.len() * 3);
        let mut faces: Vec<Face> = Vec::new();
        let mut tet_faces = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter().enumerate() {
            let mut refs = [0usize; 4];
            for (lf, lv) in LOCAL_FACES.iter().enumerate() {
                let mut key = lv.map(|i| tet[i]);
                key.sort_unstable();
                match face_index.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.interior {
                            return Err(Error::InvalidInput(format!(
                                "face {key:?} shared by more than two tets"
                            )));
                        }
                        face.tets[1] = t;
                        face.local[1] = lf;
                        face.interior = true;
                        refs[lf] = f;
                    }
                    None => {
                        let f = faces.len();
                        face_index.insert(key, f);
                        faces.push(Face {
                            vertices: key,
                            tets: [t, t],
                            local: [lf, lf],
                            interior: false,
                        });
                        refs[lf] = f;
                    }
                }
            }
            tet_faces.push(refs);
        }

        let mut edge_on_boundary = vec![false; edges.len()];
        for face in faces.iter().filter(|f| !f.interior) {
            let t = face.tets[0];
            let lf = face.local[0];
            for (le, pair) in LOCAL_EDGES.iter().enumerate() {
                if pair[0] != lf && pair[1] != lf {
                    edge_on_boundary[tet_edges[t][le].index] = true;
                }
            }
        }

        let h0 = domain.max_side() / n.max(1) as f64;
        Ok(Self {
            domain,
            n,
            vertices,
            tets,
            edges,
            faces,
            tet_edges,
            tet_faces,
            edge_on_boundary,
            h0,
            h,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.tet_points(t))
    }

    /// `V - E + F - T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
            - self.num_tets() as i64
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| f.interior)
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| !f.interior)
    }

    /// Outward unit normal of local face `lf` of tetrahedron `t`.
    pub fn tet_face_normal(&self, t: usize, lf: usize) -> Vec3 {
        let p = self.tet_points(t);
        let [a, b, c] = LOCAL_FACES[lf];
        let mut nrm = (p[b] - p[a]).cross(&(p[c] - p[a]));
        if nrm.dot(&(p[lf] - p[a])) > 0.0 {
            nrm = -nrm;
        }
        nrm.normalize()
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].vertices.map(|v| self.vertices[v])
    }

    pub fn face_geometry(&self, f: usize) -> FaceGeometry {
        let p = self.face_points(f);
        let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let area = 0.5 * cross.norm();
        let face = &self.faces[f];
        let normal = self.tet_face_normal(face.tets[0], face.local[0]);
        let diameter = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| (p[j] - p[i]).norm())
            .fold(0.0, f64::max);
        FaceGeometry {
            area,
            normal,
            diameter,
        }
    }

    /// Class of every interior face; boundary faces map to `None`.
    pub fn classify_interior_faces(&self) -> Result<Vec<Option<FaceClass>>> {
        let mut out = vec![None; self.faces.len()];
        for (f, _) in self.interior_faces() {
            let normal = self.face_geometry(f).normal;
            let class = FaceClass::from_normal(&normal).ok_or(Error::UnclassifiableFace {
                face: f,
                normal: [normal.x, normal.y, normal.z],
            })?;
            out[f] = Some(class);
        }
        Ok(out)
    }

    pub fn stats(&self) -> Result<MeshStats> {
        let classes = self.classify_interior_faces()?;
        let mut per_class = [0usize; 3];
        for c in classes.iter().flatten() {
            per_class[c.ordinal()] += 1;
        }
        Ok(MeshStats {
            n: self.n,
            vertices: self.num_vertices(),
            edges: self.num_edges(),
            faces: self.num_faces(),
            interior_faces: self.faces.iter().filter(|f| f.interior).count(),
            boundary_edges: self.edge_on_boundary.iter().filter(|&&b| b).count(),
            tets: self.num_tets(),
            h0: self.h0,
            h: self.h,
            faces_per_class: per_class,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshStats {
    pub n: usize,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub interior_faces: usize,
    pub boundary_edges: usize,
    pub tets: usize,
    pub h0: f64,
    pub h: f64,
    pub faces_per_class: [usize; 3],
}

impl fmt::Display for MeshStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "vertices = {}", self.vertices)?;
        writeln!(f, "edges = {}", self.edges)?;
        writeln!(f, "boundary_edges = {}", self.boundary_edges)?;
        writeln!(f, "faces = {}", self.faces)?;
        writeln!(f, "interior_faces = {}", self.interior_faces)?;
        writeln!(f, "tets = {}", self.tets)?;
        writeln!(
            f,
            "euler = {}",
            self.vertices as i64 - self.edges as i64 + self.faces as i64 - self.tets as i64
        )?;
        writeln!(f, "h0 = {}", self.h0)?;
        writeln!(f, "h = {}", self.h)?;
        for c in FaceClass::ALL {
            writeln!(
                f,
                "faces[{}] = {}",
                c.name(),
                self.faces_per_class[c.ordinal()]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_counts() {
        let m = Mesh::cub6(1, BoxDomain::unit()).unwrap();
        assert_eq!(m.num_tets(), 6);
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_edges(), 19);
        assert_eq!(m.num_faces(), 18);
        assert_eq!(m.faces.iter().filter(|f| f.interior).count(), 6);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn two_cells_per_axis() {
        let m = Mesh::cub6(2, BoxDomain::shifted_unit()).unwrap();
        assert_eq!(m.num_tets(), 48);
        assert_eq!(m.num_vertices(), 27);
        assert!((m.h0 - 0.5).abs() < 1e-15);
        assert!((m.h - 0.5 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn every_tet_contains_the_main_diagonal() {
        let d = BoxDomain::new([1.0, -1.0, 0.5], [2.0, 1.0, 3.0]).unwrap();
        let m = Mesh::cub6(1, d).unwrap();
        let lo = m
            .vertices
            .iter()
            .position(|v| (v - Vec3::from(d.lo)).norm() < 1e-14)
            .unwrap();
        let hi = m
            .vertices
            .iter()
            .position(|v| (v - Vec3::from(d.hi)).norm() < 1e-14)
            .unwrap();
        for tet in &m.tets {
            assert!(tet.contains(&lo) && tet.contains(&hi));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Mesh::cub6(0, BoxDomain::unit()).is_err());
        assert!(BoxDomain::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
        assert!(Mesh::cub6(
            2,
            BoxDomain {
                lo: [0.0; 3],
                hi: [1.0, 1.0, -1.0]
            }
        )
        .is_err());
    }

    #[test]
    fn single_cell_interior_faces_are_diagonal() {
        let m = Mesh::cub6(1, BoxDomain::unit()).unwrap();
        let classes = m.classify_interior_faces().unwrap();
        let mut normals = Vec::new();
        for (f, _) in m.interior_faces() {
            assert_eq!(classes[f], Some(FaceClass::Diagonal2D));
            let n = m.face_geometry(f).normal;
            // normals lie in the planes x_a = x_b through the diagonal
            assert!(n.sum().abs() < 1e-12);
            let mut key = n.map(|x| (x * 2f64.sqrt()).round() as i32);
            if key.iter().find(|&&c| c != 0) == Some(&-1) {
                key = -key;
            }
            normals.push([key.x, key.y, key.z]);
        }
        normals.sort();
        normals.dedup();
        assert_eq!(normals, vec![[0, 1, -1], [1, -1, 0], [1, 0, -1]]);
    }

    #[test]
    fn midplane_faces_are_axis_aligned() {
        let m = Mesh::cub6(2, BoxDomain::shifted_unit()).unwrap();
        let classes = m.classify_interior_faces().unwrap();
        let mut found = 0;
        for (f, _) in m.interior_faces() {
            let p = m.face_points(f);
            if p.iter().all(|v| (v.x - 1.5).abs() < 1e-14) {
                assert_eq!(classes[f], Some(FaceClass::AxisAligned));
                let g = m.face_geometry(f);
                assert!((g.diameter - 2f64.sqrt() / 2.0).abs() < 1e-14);
                found += 1;
            }
        }
        assert_eq!(found, 8);
    }

    #[test]
    fn interior_face_class_counts_n2() {
        // brute force over the 48-tet mesh: 6 diagonal faces per cell and
        // 2 triangles per shared cell square (3 planes x 4 squares)
        let m = Mesh::cub6(2, BoxDomain::unit()).unwrap();
        let s = m.stats().unwrap();
        assert_eq!(s.faces_per_class, [24, 48, 0]);
        let m3 = Mesh::cub6(3, BoxDomain::unit()).unwrap();
        let s3 = m3.stats().unwrap();
        // per cell: 6 diagonal faces; axis faces: 3 planes-directions * 2 interior planes * 9 squares * 2
        assert_eq!(s3.faces_per_class, [108, 162, 0]);
    }

    #[test]
    fn face_geometry_of_boundary_faces() {
        let d = BoxDomain::shifted_unit();
        let m = Mesh::cub6(2, d).unwrap();
        for (f, _) in m.boundary_faces() {
            let g = m.face_geometry(f);
            let p = m.face_points(f);
            assert!((g.normal.norm() - 1.0).abs() < 1e-14);
            for axis in 0..3 {
                if p.iter().all(|v| (v[axis] - d.lo[axis]).abs() < 1e-14) {
                    let mut e = Vec3::zeros();
                    e[axis] = -1.0;
                    assert!((g.normal - e).norm() < 1e-14);
                }
                if p.iter().all(|v| (v[axis] - d.hi[axis]).abs() < 1e-14) {
                    let mut e = Vec3::zeros();
                    e[axis] = 1.0;
                    assert!((g.normal - e).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn unit_right_triangle_geometry() {
        let vertices = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let m = Mesh::from_tets(BoxDomain::unit(), 1, vertices, vec![[0, 1, 2, 3]]).unwrap();
        let f = m.tet_faces[0][3];
        let g = m.face_geometry(f);
        assert!((g.area - 0.5).abs() < 1e-15);
        assert!((g.normal - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn from_tets_flips_negative_orientation() {
        let vertices = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let m =
            Mesh::from_tets(BoxDomain::unit(), 1, vertices.clone(), vec![[0, 2, 1, 3]]).unwrap();
        assert!(m.tet_volume(0) > 0.0);
        let flat = vec![
            vertices[0],
            vertices[1],
            vertices[2],
            Vec3::new(1.0, 1.0, 0.0),
        ];
        assert!(matches!(
            Mesh::from_tets(BoxDomain::unit(), 1, flat, vec![[0, 1, 2, 3]]),
            Err(Error::DegenerateTet { .. })
        ));
    }

    #[test]
    fn stats_dump_contains_counts() {
        let m = Mesh::cub6(1, BoxDomain::unit()).unwrap();
        let text = m.stats().unwrap().to_string();
        assert!(text.contains("tets = 6"));
        assert!(text.contains("euler = 1"));
        assert!(text.contains("faces[diagonal-2d] = 6"));
    }
}
