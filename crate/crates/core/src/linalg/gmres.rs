//! Restarted GMRES with right preconditioning and Givens rotations.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOptions {
    /// Relative residual target `‖b − Ax‖/‖b‖`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 100,
            max_iter: 5000,
        }
    }
}

const BREAKDOWN: f64 = 1e-300;

/// Solve `A x = b` with right preconditioner `m ≈ A⁻¹`. Returns the solution
/// and the number of Arnoldi steps. Fails if `max_iter` is exhausted.
pub fn gmres<M>(a: &CsrMatrix, b: &[C64], m: M, opts: &GmresOptions) -> Result<(Vec<C64>, usize)>
where
    M: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let restart = opts.restart.max(1);
    let mut iters = 0usize;
    let mut ax = vec![zero; n];
    loop {
        a.mul_vec_into(&x, &mut ax);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta <= opts.tol * bnorm {
            return Ok((x, iters));
        }
        if iters >= opts.max_iter {
            return Err(Error::InvalidInput(format!(
                "GMRES did not converge in {} iterations (relative residual {:.3e})",
                iters,
                beta / bnorm
            )));
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<C64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut w = vec![zero; n];
        for j in 0..restart {
            iters += 1;
            let z = m(&v[j]);
            a.mul_vec_into(&z, &mut w);
            // modified Gram–Schmidt
            let mut col = vec![zero; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij: C64 = vi.iter().zip(&w).map(|(p, q)| p.conj() * q).sum();
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hnext = norm2(&w);
            col[j + 1] = C64::new(hnext, 0.0);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = zero;
            g.push(-s.conj() * g[j]);
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            let converged = g[j + 1].norm() <= opts.tol * bnorm;
            if hnext <= BREAKDOWN {
                if !converged && col_is_singular(&h[j], j) {
                    return Err(Error::Breakdown { iteration: iters });
                }
                update(&mut x, &h, &g, &v, &m);
                break;
            }
            v.push(w.iter().map(|z| z / hnext).collect());
            if converged || j + 1 == restart || iters >= opts.max_iter {
                v.pop();
                update(&mut x, &h, &g, &v, &m);
                break;
            }
        }
    }
}

fn col_is_singular(col: &[C64], j: usize) -> bool {
    col[j].norm() <= BREAKDOWN
}

/// Complex Givens rotation with real cosine annihilating `b` against `a`.
fn givens(a: C64, b: C64) -> (C64, C64) {
    let na = a.norm();
    if b.norm() == 0.0 {
        return (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (C64::new(0.0, 0.0), (b.conj() / b.norm()));
    }
    let r = (na * na + b.norm_sqr()).sqrt();
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (C64::new(c, 0.0), s)
}

fn update<M>(x: &mut [C64], h: &[Vec<C64>], g: &[C64], v: &[Vec<C64>], m: &M)
where
    M: Fn(&[C64]) -> Vec<C64>,
{
    let k = h.len();
    let mut y = vec![C64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h[j][i] * y[j];
        }
        y[i] = s / h[i][i];
    }
    let n = x.len();
    let mut u = vec![C64::new(0.0, 0.0); n];
    for (yi, vi) in y.iter().zip(v) {
        for (uk, vk) in u.iter_mut().zip(vi) {
            *uk += yi * vk;
        }
    }
    let z = m(&u);
    for (xk, zk) in x.iter_mut().zip(&z) {
        *xk += zk;
    }
}
