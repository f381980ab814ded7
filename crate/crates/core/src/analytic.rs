//! Manufactured solutions of `curl curl E − κ²E = f` with the impedance
//! condition `curl E × ν − iκλ E_T = g`, and a finite-difference residual
//! oracle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{cross_complex_real, tangential, to_complex, CVec3, Vec3};

pub type Field = Arc<dyn Fn(&Vec3) -> CVec3 + Send + Sync>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `j₁(z) = sin z/z² − cos z/z`.
pub fn spherical_j1(z: C64) -> Result<C64> {
    nonzero(z)?;
    Ok(z.sin() / (z * z) - z.cos() / z)
}

/// `y₁(z) = −cos z/z² − sin z/z`.
pub fn spherical_y1(z: C64) -> Result<C64> {
    nonzero(z)?;
    Ok(-z.cos() / (z * z) - z.sin() / z)
}

/// `h₁⁽¹⁾(z) = −e^{iz}(z + i)/z²`.
pub fn spherical_hankel_1(z: C64) -> Result<C64> {
    nonzero(z)?;
    Ok(-(I * z).exp() * (z + I) / (z * z))
}

/// `h₁⁽¹⁾(z)` assembled as `j₁ + i y₁`.
pub fn spherical_hankel_1_bessel(z: C64) -> Result<C64> {
    Ok(spherical_j1(z)? + I * spherical_y1(z)?)
}

/// `h₁⁽¹⁾′(z) = h₀⁽¹⁾(z) − 2h₁⁽¹⁾(z)/z` with `h₀⁽¹⁾(z) = −i e^{iz}/z`.
pub fn spherical_hankel_1_prime(z: C64) -> Result<C64> {
    let h1 = spherical_hankel_1(z)?;
    let h0 = -I * (I * z).exp() / z;
    Ok(h0 - 2.0 * h1 / z)
}

fn nonzero(z: C64) -> Result<()> {
    if z.norm() == 0.0 {
        Err(Error::Domain(
            "spherical Bessel functions of order 1 are singular at z = 0".into(),
        ))
    } else {
        Ok(())
    }
}

/// Exact field data for a Maxwell problem with impedance boundary.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub name: String,
    pub kappa: f64,
    pub lambda: f64,
    pub e: Field,
    pub curl_e: Field,
    pub f: Field,
}

impl fmt::Debug for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedSolution")
            .field("name", &self.name)
            .field("kappa", &self.kappa)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl ManufacturedSolution {
    pub fn e_at(&self, x: &Vec3) -> CVec3 {
        (self.e)(x)
    }

    pub fn curl_at(&self, x: &Vec3) -> CVec3 {
        (self.curl_e)(x)
    }

    pub fn f_at(&self, x: &Vec3) -> CVec3 {
        (self.f)(x)
    }

    /// `g = curl E × ν − iκλ E_T` for the outward unit normal `nu`.
    pub fn g_at(&self, x: &Vec3, nu: &Vec3) -> CVec3 {
        let c = cross_complex_real(&self.curl_at(x), nu);
        let et = tangential(&self.e_at(x), nu);
        c - et * (I * (self.kappa * self.lambda))
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Normalization of the real degree-one harmonics `c·x_k/r`.
pub fn harmonic_normalization() -> f64 {
    (3.0 / (4.0 * PI)).sqrt()
}

/// Sum of the three real harmonics `Y₁^m` is `c (a·x)/r` with `a = (1,1,1)`.
const MULTIPOLE_AXIS: [f64; 3] = [1.0, 1.0, 1.0];

/// `E = κ Σ_m h₁(κr) ∇_S Y₁^m × r̂ + κ⁻¹(sin κz, sin κy, sin κx)`, `λ = 1`.
///
/// With `u = h₁(κr) Σ Y₁^m` the multipole part is `κ curl(x u)` and its curl
/// is `κ(∇ ∂_r(r u) + κ² x u)`.
pub fn multipole_sine_solution(kappa: f64) -> Result<ManufacturedSolution> {
    check_kappa(kappa)?;
    let mp = multipole_only(kappa)?;
    let (e_mp, c_mp) = (mp.e.clone(), mp.curl_e.clone());
    let e: Field = Arc::new(move |x: &Vec3| e_mp(x) + to_complex(&sine_part(kappa, x)));
    let curl_e: Field = Arc::new(move |x: &Vec3| {
        let s = CVec3::new(
            C64::new(0.0, 0.0),
            C64::new((kappa * x.z).cos() - (kappa * x.x).cos(), 0.0),
            C64::new(0.0, 0.0),
        );
        c_mp(x) + s
    });
    let f: Field = Arc::new(move |x: &Vec3| {
        CVec3::new(
            0.0.into(),
            C64::new(-kappa * (kappa * x.y).sin(), 0.0),
            0.0.into(),
        )
    });
    Ok(ManufacturedSolution {
        name: "multipole-sine".into(),
        kappa,
        lambda: 1.0,
        e,
        curl_e,
        f,
    })
}

fn sine_part(kappa: f64, x: &Vec3) -> Vec3 {
    Vec3::new(
        (kappa * x.z).sin(),
        (kappa * x.y).sin(),
        (kappa * x.x).sin(),
    ) / kappa
}

/// The multipole part alone; it satisfies the source-free equation.
pub fn multipole_only(kappa: f64) -> Result<ManufacturedSolution> {
    check_kappa(kappa)?;
    let c = harmonic_normalization();
    let a = Vec3::from(MULTIPOLE_AXIS);
    let e: Field = Arc::new(move |x: &Vec3| {
        let r = x.norm();
        let phi =
            spherical_hankel_1(C64::new(kappa * r, 0.0)).unwrap_or(C64::new(f64::NAN, 0.0)) / r;
        to_complex(&a.cross(x)) * (phi * (kappa * c))
    });
    let curl_e: Field = Arc::new(move |x: &Vec3| {
        let r = x.norm();
        let z = C64::new(kappa * r, 0.0);
        let (h1, dh1) = match (spherical_hankel_1(z), spherical_hankel_1_prime(z)) {
            (Ok(h), Ok(d)) => (h, d),
            _ => return CVec3::repeat(C64::new(f64::NAN, 0.0)),
        };
        let phi = h1 / r;
        // ∂_r(r u) = c (a·x) ψ(r), ψ = (h₁ + z h₁′)/r
        let psi = (h1 + z * dh1) / r;
        // ψ′ from the spherical Bessel equation
        let dpsi = -kappa * (z - 2.0 / z) * h1 / r - psi / r;
        let ax = a.dot(x);
        let radial = ax * (dpsi / r + kappa * kappa * phi);
        (to_complex(&a) * psi + to_complex(x) * radial) * C64::new(kappa * c, 0.0)
    });
    let f: Field = Arc::new(|_: &Vec3| CVec3::zeros());
    Ok(ManufacturedSolution {
        name: "multipole".into(),
        kappa,
        lambda: 1.0,
        e,
        curl_e,
        f,
    })
}

/// Default propagation direction and polarization of the plane wave.
pub fn default_plane_wave_direction() -> (Vec3, Vec3) {
    (
        Vec3::new(1.0, 2.0, 2.0) / 3.0,
        Vec3::new(2.0, -2.0, 1.0) / 3.0,
    )
}

/// `E = p e^{iκ d·x}`, `f = 0`, `λ = 1`.
pub fn plane_wave_solution(kappa: f64, d: Vec3, p: Vec3) -> Result<ManufacturedSolution> {
    check_kappa(kappa)?;
    if (d.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "direction must be a unit vector, |d| = {}",
            d.norm()
        )));
    }
    if p.dot(&d).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "polarization not orthogonal to direction, p·d = {}",
            p.dot(&d)
        )));
    }
    let dp = d.cross(&p);
    let e: Field = Arc::new(move |x: &Vec3| to_complex(&p) * (I * (kappa * d.dot(x))).exp());
    let curl_e: Field =
        Arc::new(move |x: &Vec3| to_complex(&dp) * (I * kappa * (I * (kappa * d.dot(x))).exp()));
    let f: Field = Arc::new(|_: &Vec3| CVec3::zeros());
    Ok(ManufacturedSolution {
        name: "plane-wave".into(),
        kappa,
        lambda: 1.0,
        e,
        curl_e,
        f,
    })
}

/// `E ≡ 0`.
pub fn zero_solution(kappa: f64) -> Result<ManufacturedSolution> {
    check_kappa(kappa)?;
    let z: Field = Arc::new(|_: &Vec3| CVec3::zeros());
    Ok(ManufacturedSolution {
        name: "zero".into(),
        kappa,
        lambda: 1.0,
        e: z.clone(),
        curl_e: z.clone(),
        f: z,
    })
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "kappa must be positive, got {kappa}"
        )))
    }
}

/// Step used by the finite-difference oracles.
pub const FD_STEP: f64 = 1e-3;

/// Fourth-order centered derivative of `field` along axis `k`.
fn fd_partial<F: Fn(&Vec3) -> CVec3>(field: &F, x: &Vec3, k: usize, h: f64) -> CVec3 {
    let mut e = Vec3::zeros();
    e[k] = h;
    let p1 = field(&(x + e));
    let m1 = field(&(x - e));
    let p2 = field(&(x + 2.0 * e));
    let m2 = field(&(x - 2.0 * e));
    (m2 - p2 + (p1 - m1) * C64::new(8.0, 0.0)) / C64::new(12.0 * h, 0.0)
}

pub fn fd_curl<F: Fn(&Vec3) -> CVec3>(field: &F, x: &Vec3, h: f64) -> CVec3 {
    let dx = fd_partial(field, x, 0, h);
    let dy = fd_partial(field, x, 1, h);
    let dz = fd_partial(field, x, 2, h);
    CVec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
}

pub fn fd_divergence<F: Fn(&Vec3) -> CVec3>(field: &F, x: &Vec3, h: f64) -> C64 {
    fd_partial(field, x, 0, h).x + fd_partial(field, x, 1, h).y + fd_partial(field, x, 2, h).z
}

/// `max |FD(curl curl E) − κ²E − f|` over `points`, with both curls taken
/// by nested finite differences of `E` only.
pub fn residual_oracle(sol: &ManufacturedSolution, points: &[Vec3]) -> f64 {
    let e = |x: &Vec3| sol.e_at(x);
    let curl = |x: &Vec3| fd_curl(&e, x, FD_STEP);
    let k2 = sol.kappa * sol.kappa;
    points
        .iter()
        .map(|x| {
            let cc = fd_curl(&curl, x, FD_STEP);
            let r = cc - sol.e_at(x) * C64::new(k2, 0.0) - sol.f_at(x);
            crate::geometry::norm_sqr(&r).sqrt()
        })
        .fold(0.0, f64::max)
}
