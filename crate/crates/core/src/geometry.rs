//! Small vector helpers shared by the mesh, element, and analysis code.

use nalgebra::Vector3;
use num_complex::Complex64 as C64;

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<C64>;

pub fn to_complex(v: &Vec3) -> CVec3 {
    CVec3::new(v.x.into(), v.y.into(), v.z.into())
}

/// Bilinear (non-conjugating) dot product of a complex and a real vector.
pub fn cdot_real(a: &CVec3, b: &Vec3) -> C64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

pub fn cross_complex_real(a: &CVec3, b: &Vec3) -> CVec3 {
    CVec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Squared hermitian norm.
pub fn norm_sqr(a: &CVec3) -> f64 {
    a.x.norm_sqr() + a.y.norm_sqr() + a.z.norm_sqr()
}

/// Tangential component `(ν × v) × ν = v - (v·ν)ν` for a unit normal.
pub fn tangential(v: &CVec3, normal: &Vec3) -> CVec3 {
    let vn = cdot_real(v, normal);
    CVec3::new(
        v.x - vn * normal.x,
        v.y - vn * normal.y,
        v.z - vn * normal.z,
    )
}

pub fn tangential_real(v: &Vec3, normal: &Vec3) -> Vec3 {
    v - normal * v.dot(normal)
}

/// Signed volume of the tetrahedron `(p0, p1, p2, p3)`.
pub fn signed_volume(p: &[Vec3; 4]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}
