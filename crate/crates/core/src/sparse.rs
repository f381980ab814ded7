//! Compressed-row complex matrices and pattern-based assembly.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Square or rectangular complex matrix in CSR form with sorted column
/// indices and no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed in
    /// input order, so the result is deterministic.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, C64)],
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Zero-valued matrix whose pattern couples every pair of indices within
    /// each group.
    pub fn from_groups<'a, I>(n: usize, groups: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]> + Clone,
    {
        let mut counts = vec![0usize; n + 1];
        for g in groups.clone() {
            for &r in g {
                counts[r + 1] += g.len();
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; counts[n]];
        for g in groups {
            for &r in g {
                let start = fill[r];
                cols[start..start + g.len()].copy_from_slice(g);
                fill[r] += g.len();
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(cols.len() / 2);
        for r in 0..n {
            let row = &mut cols[counts[r]..counts[r + 1]];
            row.sort_unstable();
            let mut prev = usize::MAX;
            for &c in row.iter() {
                if c != prev {
                    col_idx.push(c);
                    prev = c;
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        let values = vec![ZERO; col_idx.len()];
        Self {
            nrows: n,
            ncols: n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.position(i, j).map_or(ZERO, |k| self.values[k])
    }

    /// Add `v` to an entry that must exist in the pattern.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: C64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in pattern"));
        self.values[k] += v;
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// Bilinear form `yᵀ A x` (no conjugation).
    pub fn bilinear(&self, y: &[C64], x: &[C64]) -> C64 {
        self.mul_vec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Sesquilinear form `yᴴ A x`.
    pub fn sesquilinear(&self, y: &[C64], x: &[C64]) -> C64 {
        self.mul_vec(x)
            .iter()
            .zip(y)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut fill = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![ZERO; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                col_idx[fill[c]] = i;
                values[fill[c]] = self.values[k];
                fill[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s·other` over the union pattern. Entries present in only one
    /// operand are copied, so adding an empty matrix returns an identical one.
    pub fn add_scaled(&self, other: &CsrMatrix, s: C64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                got: other.nrows,
            });
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] < cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] < ca[p]);
                if take_a {
                    col_idx.push(ca[p]);
                    values.push(va[p]);
                    p += 1;
                } else if take_b {
                    col_idx.push(cb[q]);
                    values.push(s * vb[q]);
                    q += 1;
                } else {
                    col_idx.push(ca[p]);
                    values.push(va[p] + s * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij − A_ji|` over all stored entries of either triangle.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).norm());
            }
        }
        worst
    }

    /// True when patterns and all value bits agree.
    pub fn bit_identical(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }

    /// MatrixMarket `coordinate complex general` export.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.values[k];
                writeln!(
                    w,
                    "{} {} {:.17e} {:.17e}",
                    i + 1,
                    self.col_idx[k] + 1,
                    v.re,
                    v.im
                )?;
            }
        }
        Ok(())
    }

    /// Parse the output of [`write_matrix_market`](Self::write_matrix_market).
    pub fn read_matrix_market(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("MatrixMarket: {m}"));
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('%') && !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("missing size line"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("bad size line")))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(bad("size line needs 3 fields"));
        }
        let mut trip = Vec::with_capacity(dims[2]);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad("entry needs 4 fields"));
            }
            let i: usize = f[0].parse().map_err(|_| bad("row"))?;
            let j: usize = f[1].parse().map_err(|_| bad("col"))?;
            let re: f64 = f[2].parse().map_err(|_| bad("re"))?;
            let im: f64 = f[3].parse().map_err(|_| bad("im"))?;
            trip.push((i - 1, j - 1, C64::new(re, im)));
        }
        Self::from_triplets(dims[0], dims[1], &trip)
    }
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖Ax − b‖₂ / ‖b‖₂` (or `‖Ax‖₂` when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            &[
                (0, 1, c(1.0, 0.0)),
                (1, 0, c(2.0, 1.0)),
                (0, 1, c(0.5, 0.5)),
            ],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), c(1.5, 0.5));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn group_pattern() {
        let g1 = [0usize, 2];
        let g2 = [1usize, 2];
        let m = CsrMatrix::from_groups(3, [&g1[..], &g2[..]]);
        assert_eq!(m.row_ptr, vec![0, 2, 4, 7]);
        assert_eq!(m.col_idx, vec![0, 2, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn adding_empty_matrix_is_bit_identical() {
        let m =
            CsrMatrix::from_triplets(3, 3, &[(0, 0, c(0.1, 0.2)), (2, 1, c(-3.0, 0.0))]).unwrap();
        let z = CsrMatrix::zeros(3, 3);
        assert!(m.add_scaled(&z, c(7.0, 1.0)).unwrap().bit_identical(&m));
    }

    #[test]
    fn matrix_market_roundtrip() {
        let m = CsrMatrix::from_triplets(3, 2, &[(0, 0, c(0.1, 0.2)), (2, 1, c(-3.0, 1e-300))])
            .unwrap();
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate complex general"));
        let back = CsrMatrix::read_matrix_market(&text).unwrap();
        assert!(back.bit_identical(&m));
    }

    proptest! {
        #[test]
        fn transpose_is_involution_and_matches_bilinear_form(
            entries in proptest::collection::vec((0usize..6, 0usize..5, -1.0f64..1.0, -1.0f64..1.0), 0..30),
            x in proptest::collection::vec(-1.0f64..1.0, 5),
            y in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let trip: Vec<_> = entries.iter().map(|&(i, j, a, b)| (i, j, c(a, b))).collect();
            let m = CsrMatrix::from_triplets(6, 5, &trip).unwrap();
            let t = m.transpose();
            prop_assert!(t.transpose().bit_identical(&m));
            let xc: Vec<C64> = x.iter().map(|&v| c(v, 0.5 * v)).collect();
            let yc: Vec<C64> = y.iter().map(|&v| c(-v, v)).collect();
            let lhs = m.bilinear(&yc, &xc);
            let rhs = t.bilinear(&xc, &yc);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
