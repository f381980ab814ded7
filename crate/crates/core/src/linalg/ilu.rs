//! Incomplete LU with zero fill on the pattern of `A`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct Ilu0 {
    /// `L` (unit, strictly lower part) and `U` share the CSR pattern of `A`.
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = lu.position(i, i).ok_or(Error::Singular {
                kind: "structurally",
                pivot: i,
            })?;
        }
        let mut where_in_row = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                where_in_row[lu.col_idx[p]] = p;
            }
            for p in start..diag[i] {
                let k = lu.col_idx[p];
                let ukk = lu.values[diag[k]];
                if ukk == C64::new(0.0, 0.0) {
                    return Err(Error::Singular {
                        kind: "numerically",
                        pivot: k,
                    });
                }
                let lik = lu.values[p] / ukk;
                lu.values[p] = lik;
                for t in diag[k] + 1..lu.row_ptr[k + 1] {
                    let w = where_in_row[lu.col_idx[t]];
                    if w != usize::MAX {
                        let u = lu.values[t];
                        lu.values[w] -= lik * u;
                    }
                }
            }
            for p in start..end {
                where_in_row[lu.col_idx[p]] = usize::MAX;
            }
            if lu.values[diag[i]].norm() == 0.0 {
                return Err(Error::Singular {
                    kind: "numerically",
                    pivot: i,
                });
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// `(LU)⁻¹ r`.
    pub fn apply(&self, r: &[C64]) -> Vec<C64> {
        let n = self.diag.len();
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for p in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.values[p] * y[self.lu.col_idx[p]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[p] * y[self.lu.col_idx[p]];
            }
            y[i] = s / self.lu.values[self.diag[i]];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_tridiagonal() {
        // no fill for tridiagonal matrices, so ILU(0) is the exact LU
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(2.0, 0.5)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.0)));
                t.push((i + 1, i, C64::new(-1.0, 0.1)));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let ilu = Ilu0::factor(&a).unwrap();
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = ilu.apply(&b);
        assert!(crate::sparse::relative_residual(&a, &x, &b) < 1e-13);
    }

    #[test]
    fn missing_diagonal_is_an_error() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 1, C64::new(1.0, 0.0)), (1, 0, C64::new(1.0, 0.0))],
        )
        .unwrap();
        assert!(matches!(
            Ilu0::factor(&a),
            Err(Error::Singular { pivot: 0, .. })
        ));
    }
}
