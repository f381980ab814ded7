//! Edge-element solvers for the time-harmonic Maxwell equations
//!
//! ```text
//!   curl curl E - κ² E = f            in Ω
//!   curl E × ν - iκλ E_T = g          on Γ = ∂Ω
//! ```
//!
//! discretised with the lowest-order Nédélec edge elements of the second
//! kind on Kuhn-subdivided box meshes, optionally stabilised with a
//! continuous interior penalty on the jumps of the tangential curl across
//! interior faces (CIP-EEM).

pub mod analysis;
pub mod analytic;
pub mod edge_fem;
pub mod error;
pub mod experiment;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod validation;
pub mod vtk;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
