//! Linear solvers for the complex-symmetric indefinite systems: a
//! multifrontal `LDLᵀ` (primary), a threshold-pivoting sparse LU (fallback
//! and non-symmetric input), and ILU(0)-preconditioned restarted GMRES.

mod gmres;
mod ilu;
mod ldlt;
mod lu;
pub mod ordering;

use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::{relative_residual, CsrMatrix};

pub use gmres::{gmres, GmresOptions};
pub use ilu::Ilu0;
pub use ldlt::{SymmetricLdlt, STATIC_PIVOT};
pub use lu::{SparseLu, PIVOT_THRESHOLD};

/// Residuals above this trigger a warning from [`solve`].
pub const RESIDUAL_TARGET: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Gmres,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Gmres => "gmres",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(SolverKind::Direct),
            "gmres" | "iterative" => Ok(SolverKind::Gmres),
            other => Err(Error::Config(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: SolverKind,
    /// `ldlt`, `lu` or `ilu0`.
    pub factorization: &'static str,
    /// GMRES iterations (refinement steps for the direct solver).
    pub iterations: usize,
    /// `‖b − Ax‖ / ‖b‖` recomputed with the original matrix.
    pub relative_residual: f64,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
    /// Stored entries of `L + U` (direct) or of the ILU factor.
    pub factor_nnz: usize,
    /// Pivots replaced by the static-pivot threshold (`LDLᵀ` only).
    pub perturbed_pivots: usize,
}

impl SolveReport {
    pub fn accurate(&self) -> bool {
        self.relative_residual <= RESIDUAL_TARGET
    }
}

/// Which sparse factorization the direct solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectMethod {
    /// `LDLᵀ` for complex symmetric input, LU otherwise.
    #[default]
    Auto,
    Ldlt,
    Lu,
}

impl DirectMethod {
    pub fn name(self) -> &'static str {
        match self {
            DirectMethod::Auto => "auto",
            DirectMethod::Ldlt => "ldlt",
            DirectMethod::Lu => "lu",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DirectOptions<'a> {
    pub method: DirectMethod,
    /// One point per unknown; enables nested dissection ordering.
    pub coords: Option<&'a [[f64; 3]]>,
}

/// Relative symmetry defect below which a matrix is treated as symmetric.
const SYMMETRY_TOL: f64 = 1e-13;

/// Factor and solve with default options.
pub fn solve_direct(a: &CsrMatrix, b: &[C64]) -> Result<(Vec<C64>, SolveReport)> {
    solve_direct_with(a, b, &DirectOptions::default())
}

/// Factor and solve once.
pub fn solve_direct_with(
    a: &CsrMatrix,
    b: &[C64],
    opts: &DirectOptions,
) -> Result<(Vec<C64>, SolveReport)> {
    check_dims(a, b)?;
    DirectSolver::new(a, opts)?.solve(b)
}

enum Factors {
    Ldlt(SymmetricLdlt),
    Lu(SparseLu),
}

impl Factors {
    fn apply(&self, r: &[C64]) -> Vec<C64> {
        match self {
            Factors::Ldlt(f) => f.solve(r),
            Factors::Lu(f) => f.solve(r),
        }
        .expect("dimension checked")
    }

    fn name(&self) -> &'static str {
        match self {
            Factors::Ldlt(_) => "ldlt",
            Factors::Lu(_) => "lu",
        }
    }

    fn nnz(&self) -> usize {
        match self {
            Factors::Ldlt(f) => f.nnz(),
            Factors::Lu(f) => f.nnz(),
        }
    }

    fn perturbed(&self) -> usize {
        match self {
            Factors::Ldlt(f) => f.perturbed_pivots,
            Factors::Lu(_) => 0,
        }
    }
}

/// A factored matrix that can be applied to several right-hand sides.
///
/// The `LDLᵀ` path uses static pivots, so every solve is followed by
/// refinement (GMRES preconditioned with the factors). With
/// [`DirectMethod::Auto`], a solve that still misses [`RESIDUAL_TARGET`]
/// switches to threshold-pivoting LU for this and later solves.
pub struct DirectSolver<'a> {
    a: &'a CsrMatrix,
    method: DirectMethod,
    factors: Factors,
    fallback: std::cell::OnceCell<Result<(SparseLu, f64)>>,
    factor_seconds: f64,
}

impl<'a> DirectSolver<'a> {
    pub fn new(a: &'a CsrMatrix, opts: &DirectOptions) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch {
                expected: a.nrows,
                got: a.ncols,
            });
        }
        let symmetric = a.symmetry_defect() <= SYMMETRY_TOL * a.max_abs();
        let use_ldlt = match opts.method {
            DirectMethod::Auto => symmetric,
            DirectMethod::Ldlt if !symmetric => {
                return Err(Error::InvalidInput(
                    "LDLT requires a complex symmetric matrix".into(),
                ));
            }
            DirectMethod::Ldlt => true,
            DirectMethod::Lu => false,
        };
        let t0 = Instant::now();
        let factors = if use_ldlt {
            let order = match opts.coords {
                Some(c) => ordering::nested_dissection(a, c)?,
                None => ordering::amd_order(a)?,
            };
            Factors::Ldlt(SymmetricLdlt::factor(a, &order)?)
        } else {
            Factors::Lu(SparseLu::factor(a)?)
        };
        Ok(Self {
            a,
            method: opts.method,
            factors,
            fallback: std::cell::OnceCell::new(),
            factor_seconds: t0.elapsed().as_secs_f64(),
        })
    }

    pub fn factorization(&self) -> &'static str {
        self.factors.name()
    }

    pub fn solve(&self, b: &[C64]) -> Result<(Vec<C64>, SolveReport)> {
        check_dims(self.a, b)?;
        if self.fallback.get().is_none() {
            let t1 = Instant::now();
            let (x, iterations) = refine(self.a, b, |r| self.factors.apply(r))?;
            let report = SolveReport {
                method: SolverKind::Direct,
                factorization: self.factors.name(),
                iterations,
                relative_residual: relative_residual(self.a, &x, b),
                factor_seconds: self.factor_seconds,
                solve_seconds: t1.elapsed().as_secs_f64(),
                factor_nnz: self.factors.nnz(),
                perturbed_pivots: self.factors.perturbed(),
            };
            let can_fall_back =
                self.method == DirectMethod::Auto && matches!(self.factors, Factors::Ldlt(_));
            if report.accurate() || !can_fall_back {
                warn_if_inaccurate(&report);
                return Ok((x, report));
            }
            log::warn!(
                "LDLT residual {:.3e} ({} perturbed pivots); refactoring with threshold LU",
                report.relative_residual,
                report.perturbed_pivots
            );
        }
        let (lu, lu_seconds) = match self.fallback.get_or_init(|| {
            let t0 = Instant::now();
            SparseLu::factor(self.a).map(|lu| (lu, t0.elapsed().as_secs_f64()))
        }) {
            Ok((lu, s)) => (lu, *s),
            Err(e) => return Err(Error::InvalidInput(format!("fallback LU failed: {e}"))),
        };
        let t1 = Instant::now();
        let (x, iterations) = refine(self.a, b, |r| lu.solve(r).expect("dimension checked"))?;
        let report = SolveReport {
            method: SolverKind::Direct,
            factorization: "lu",
            iterations,
            relative_residual: relative_residual(self.a, &x, b),
            factor_seconds: self.factor_seconds + lu_seconds,
            solve_seconds: t1.elapsed().as_secs_f64(),
            factor_nnz: lu.nnz(),
            perturbed_pivots: 0,
        };
        warn_if_inaccurate(&report);
        Ok((x, report))
    }
}

/// One solve with the factors, then GMRES preconditioned by them if the
/// residual is not yet well below target. Returns the refinement steps.
fn refine<F>(a: &CsrMatrix, b: &[C64], apply: F) -> Result<(Vec<C64>, usize)>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let x0 = apply(b);
    let res = relative_residual(a, &x0, b);
    if res <= RESIDUAL_TARGET * 1e-2 {
        return Ok((x0, 0));
    }
    let ax = a.mul_vec(&x0);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let opts = GmresOptions {
        tol: RESIDUAL_TARGET * 1e-2 / res,
        restart: 30,
        max_iter: 60,
    };
    match gmres(a, &r, &apply, &opts) {
        Ok((dx, it)) => Ok((x0.iter().zip(&dx).map(|(p, q)| p + q).collect(), it)),
        Err(Error::Breakdown { .. }) | Err(Error::InvalidInput(_)) => Ok((x0, 0)),
        Err(e) => Err(e),
    }
}

/// ILU(0)-preconditioned GMRES.
pub fn solve_gmres(
    a: &CsrMatrix,
    b: &[C64],
    opts: &GmresOptions,
) -> Result<(Vec<C64>, SolveReport)> {
    check_dims(a, b)?;
    let t0 = Instant::now();
    let ilu = Ilu0::factor(a)?;
    let factor_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (x, iterations) = gmres(a, b, |r| ilu.apply(r), opts)?;
    let report = SolveReport {
        method: SolverKind::Gmres,
        factorization: "ilu0",
        iterations,
        relative_residual: relative_residual(a, &x, b),
        factor_seconds,
        solve_seconds: t1.elapsed().as_secs_f64(),
        factor_nnz: ilu.nnz(),
        perturbed_pivots: 0,
    };
    warn_if_inaccurate(&report);
    Ok((x, report))
}

pub fn solve(
    a: &CsrMatrix,
    b: &[C64],
    kind: SolverKind,
    opts: &GmresOptions,
) -> Result<(Vec<C64>, SolveReport)> {
    match kind {
        SolverKind::Direct => solve_direct(a, b),
        SolverKind::Gmres => solve_gmres(a, b, opts),
    }
}

fn check_dims(a: &CsrMatrix, b: &[C64]) -> Result<()> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch {
            expected: a.nrows,
            got: a.ncols,
        });
    }
    if b.len() != a.nrows {
        return Err(Error::DimensionMismatch {
            expected: a.nrows,
            got: b.len(),
        });
    }
    Ok(())
}

fn warn_if_inaccurate(r: &SolveReport) {
    if !r.accurate() {
        log::warn!(
            "{} solve: relative residual {:.3e} above {:.0e}",
            r.method.name(),
            r.relative_residual,
            RESIDUAL_TARGET
        );
    }
}
