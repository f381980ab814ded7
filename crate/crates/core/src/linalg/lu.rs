//! Left-looking sparse LU (Gilbert–Peierls) with a fill-reducing column
//! ordering and threshold partial pivoting.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// A pivot candidate on the diagonal is kept while
/// `|a_kk| ≥ PIVOT_THRESHOLD · max_i |a_ik|`.
pub const PIVOT_THRESHOLD: f64 = 0.1;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const NONE: usize = usize::MAX;

/// `P A Q = L U` with unit lower `L`. Columns are stored compressed; `L`
/// rows are in pivot order after factorization.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    /// Column permutation: step `k` eliminates column `q[k]` of `A`.
    q: Vec<usize>,
    /// Row permutation: original row `i` became pivot row `pinv[i]`.
    pinv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<u32>,
    l_val: Vec<C64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<u32>,
    u_val: Vec<C64>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let q = super::ordering::amd_order(a)?;
        Self::factor_with_order(a, q)
    }

    pub fn factor_with_order(a: &CsrMatrix, q: Vec<usize>) -> Result<Self> {
        let n = a.nrows;
        if a.ncols != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols,
            });
        }
        if q.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.len(),
            });
        }
        // columns of A are rows of Aᵀ
        let at = a.transpose();
        let mut pinv = vec![NONE; n];
        let guess = 4 * a.nnz() + n;
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut l_idx: Vec<u32> = Vec::with_capacity(guess);
        let mut l_val: Vec<C64> = Vec::with_capacity(guess);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut u_idx: Vec<u32> = Vec::with_capacity(guess);
        let mut u_val: Vec<C64> = Vec::with_capacity(guess);
        l_ptr.push(0);
        u_ptr.push(0);

        let mut x = vec![ZERO; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![false; n];

        for k in 0..n {
            let col = q[k];
            let (rows, vals) = at.row(col);
            // reach of the column pattern in the graph of L
            let mut top = n;
            for &r in rows {
                if !mark[r] {
                    top = dfs(
                        r,
                        &l_ptr,
                        &l_idx,
                        &pinv,
                        top,
                        &mut xi,
                        &mut stack,
                        &mut pstack,
                        &mut mark,
                    );
                }
            }
            for &i in &xi[top..] {
                mark[i] = false;
            }
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            // sparse triangular solve in topological order
            for p in top..n {
                let j = xi[p];
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = x[j];
                if xj == ZERO {
                    continue;
                }
                for t in l_ptr[jj] + 1..l_ptr[jj + 1] {
                    x[l_idx[t] as usize] -= l_val[t] * xj;
                }
            }
            // pivot choice
            let mut ipiv = NONE;
            let mut amax = -1.0;
            for &i in &xi[top..] {
                if pinv[i] == NONE {
                    let t = x[i].norm();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i] as u32);
                    u_val.push(x[i]);
                }
            }
            if ipiv == NONE || amax <= 0.0 || !amax.is_finite() {
                return Err(Error::Singular {
                    kind: "numerically",
                    pivot: k,
                });
            }
            if pinv[col] == NONE && x[col].norm() >= PIVOT_THRESHOLD * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u_idx.push(k as u32);
            u_val.push(pivot);
            u_ptr.push(u_idx.len());
            pinv[ipiv] = k;
            l_idx.push(ipiv as u32);
            l_val.push(C64::new(1.0, 0.0));
            let inv = pivot.inv();
            for &i in &xi[top..] {
                if pinv[i] == NONE {
                    l_idx.push(i as u32);
                    l_val.push(x[i] * inv);
                }
                x[i] = ZERO;
            }
            l_ptr.push(l_idx.len());
        }
        for r in l_idx.iter_mut() {
            *r = pinv[*r as usize] as u32;
        }
        Ok(Self {
            n,
            q,
            pinv,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
        })
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut y = vec![ZERO; n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for j in 0..n {
            let yj = y[j];
            if yj == ZERO {
                continue;
            }
            for t in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                y[self.l_idx[t] as usize] -= self.l_val[t] * yj;
            }
        }
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[last];
            let yj = y[j];
            if yj == ZERO {
                continue;
            }
            for t in self.u_ptr[j]..last {
                y[self.u_idx[t] as usize] -= self.u_val[t] * yj;
            }
        }
        let mut x = vec![ZERO; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        Ok(x)
    }
}

/// Non-recursive depth-first search from row `start` through the columns of
/// `L` already computed; finished nodes are pushed onto `xi[..top]`.
#[allow(clippy::too_many_arguments)]
fn dfs(
    start: usize,
    l_ptr: &[usize],
    l_idx: &[u32],
    pinv: &[usize],
    mut top: usize,
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    mark: &mut [bool],
) -> usize {
    let mut head = 0usize;
    stack[0] = start;
    loop {
        let j = stack[head];
        let jnew = pinv[j];
        if !mark[j] {
            mark[j] = true;
            pstack[head] = if jnew == NONE { 0 } else { l_ptr[jnew] + 1 };
        }
        let mut done = true;
        if jnew != NONE {
            let end = l_ptr[jnew + 1];
            let mut p = pstack[head];
            while p < end {
                let i = l_idx[p] as usize;
                p += 1;
                if !mark[i] {
                    pstack[head] = p;
                    head += 1;
                    stack[head] = i;
                    done = false;
                    break;
                }
            }
        }
        if done {
            top -= 1;
            xi[top] = j;
            if head == 0 {
                break;
            }
            head -= 1;
        }
    }
    top
}
