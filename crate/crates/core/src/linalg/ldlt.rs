//! Multifrontal `P A Pᵀ = L D Lᵀ` for complex symmetric (not Hermitian)
//! matrices. Supernodal fronts are dense; their trailing updates run
//! through faer's matrix multiply. Pivots are static: a pivot smaller than
//! `STATIC_PIVOT · max|a_ij|` is replaced by that value and counted, and
//! the caller is expected to refine.

use faer::linalg::matmul::triangular::{matmul, BlockStructure};
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative size below which a pivot is perturbed.
pub const STATIC_PIVOT: f64 = 1e-10;

const NONE: usize = usize::MAX;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const PANEL: usize = 48;

#[derive(Debug, Clone)]
struct Supernode {
    first: usize,
    ncols: usize,
    /// Row indices below the diagonal block, ascending, permuted numbering.
    rows: Vec<usize>,
    nchildren: usize,
}

impl Supernode {
    fn front(&self) -> usize {
        self.ncols + self.rows.len()
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricLdlt {
    n: usize,
    /// `perm[k]`: original index of the `k`-th eliminated unknown.
    perm: Vec<usize>,
    nodes: Vec<Supernode>,
    /// Column-major `front × ncols` blocks: unit-lower `L` with `D` on the diagonal.
    factors: Vec<Vec<C64>>,
    pub perturbed_pivots: usize,
}

/// Symmetric pattern permuted by `perm`, rows sorted.
fn permuted(a: &CsrMatrix, perm: &[usize]) -> CsrMatrix {
    let n = a.nrows;
    let mut iperm = vec![0usize; n];
    for (k, &p) in perm.iter().enumerate() {
        iperm[p] = k;
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::with_capacity(a.nnz());
    let mut values = Vec::with_capacity(a.nnz());
    let mut buf: Vec<(usize, C64)> = Vec::new();
    for &old in perm {
        let (cols, vals) = a.row(old);
        buf.clear();
        buf.extend(cols.iter().zip(vals).map(|(&c, &v)| (iperm[c], v)));
        buf.sort_unstable_by_key(|e| e.0);
        for &(c, v) in &buf {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix {
        nrows: n,
        ncols: n,
        row_ptr,
        col_idx,
        values,
    }
}

fn etree(b: &CsrMatrix) -> Vec<usize> {
    let n = b.nrows;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        let (cols, _) = b.row(k);
        for &c in cols {
            let mut i = c;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

fn postorder(parent: &[usize]) -> Vec<usize> {
    let n = parent.len();
    let mut head = vec![NONE; n];
    let mut next = vec![NONE; n];
    for j in (0..n).rev() {
        if parent[j] != NONE {
            next[j] = head[parent[j]];
            head[parent[j]] = j;
        }
    }
    let mut post = Vec::with_capacity(n);
    let mut stack = Vec::new();
    for root in 0..n {
        if parent[root] != NONE {
            continue;
        }
        stack.push(root);
        while let Some(&top) = stack.last() {
            let child = head[top];
            if child == NONE {
                post.push(top);
                stack.pop();
            } else {
                head[top] = next[child];
                stack.push(child);
            }
        }
    }
    post
}

/// Column counts of `L` (diagonal included) by row-subtree traversal.
fn column_counts(b: &CsrMatrix, parent: &[usize]) -> Vec<usize> {
    let n = b.nrows;
    let mut cc = vec![1usize; n];
    let mut mark = vec![NONE; n];
    for i in 0..n {
        mark[i] = i;
        let (cols, _) = b.row(i);
        for &k in cols {
            if k >= i {
                break;
            }
            let mut j = k;
            while mark[j] != i {
                cc[j] += 1;
                mark[j] = i;
                j = parent[j];
            }
        }
    }
    cc
}

/// Whether merging a child block of `k1` columns into a parent of `k2`
/// columns is acceptable given the explicit zeros it introduces.
fn accept_merge(ncols: usize, zeros: usize, stored: usize) -> bool {
    let frac = zeros as f64 / stored.max(1) as f64;
    ncols <= 4 || (ncols <= 16 && frac < 0.8) || (ncols <= 48 && frac < 0.1) || frac < 0.05
}

impl SymmetricLdlt {
    /// Factor with the given elimination order. `a` must be complex
    /// symmetric with a symmetric pattern.
    pub fn factor(a: &CsrMatrix, order: &[usize]) -> Result<Self> {
        let n = a.nrows;
        if a.ncols != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols,
            });
        }
        if !super::ordering::is_permutation(order, n) {
            return Err(Error::InvalidInput(
                "elimination order is not a permutation".into(),
            ));
        }
        // postorder the elimination tree so that fronts form a stack
        let b0 = permuted(a, order);
        let post = postorder(&etree(&b0));
        let perm: Vec<usize> = post.iter().map(|&k| order[k]).collect();
        drop(b0);
        let b = permuted(a, &perm);
        let parent = etree(&b);
        let cc = column_counts(&b, &parent);

        let mut nchild = vec![0usize; n];
        for &p in &parent {
            if p != NONE {
                nchild[p] += 1;
            }
        }
        // fundamental supernodes, then relaxed amalgamation of chains
        let mut starts = Vec::new();
        for j in 0..n {
            let continues = j > 0 && parent[j - 1] == j && nchild[j] == 1 && cc[j - 1] == cc[j] + 1;
            if !continues {
                starts.push(j);
            }
        }
        starts.push(n);
        // (first, ncols, front size, true entries)
        let mut merged: Vec<(usize, usize, usize, usize)> = Vec::new();
        for w in starts.windows(2) {
            let (f, e) = (w[0], w[1]);
            let k = e - f;
            let m = cc[f];
            let nz: usize = (f..e).map(|j| cc[j]).sum();
            let mut cur = (f, k, m, nz);
            if let Some(&(pf, pk, pm, pnz)) = merged.last() {
                let last_col = pf + pk - 1;
                if parent[last_col] == f {
                    let kk = pk + k;
                    let mm = kk + (m - k);
                    let stored = kk * mm - kk * (kk - 1) / 2;
                    let true_nz = pnz + nz;
                    if mm >= pm && accept_merge(kk, stored - true_nz, stored) {
                        merged.pop();
                        cur = (pf, kk, mm, true_nz);
                    }
                }
            }
            merged.push(cur);
        }
        let ns = merged.len();
        let mut node_of = vec![0usize; n];
        for (s, &(f, k, _, _)) in merged.iter().enumerate() {
            for j in f..f + k {
                node_of[j] = s;
            }
        }
        // row structures, bottom-up
        let mut nodes: Vec<Supernode> = Vec::with_capacity(ns);
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); ns];
        let mut mark = vec![NONE; n];
        for (s, &(f, k, m, _)) in merged.iter().enumerate() {
            let last = f + k - 1;
            let mut rows = Vec::with_capacity(m - k);
            for j in f..=last {
                let (cols, _) = b.row(j);
                for &i in cols {
                    if i > last && mark[i] != s {
                        mark[i] = s;
                        rows.push(i);
                    }
                }
            }
            for &c in &children[s] {
                let child: &Supernode = &nodes[c];
                for &i in &child.rows {
                    if i > last && mark[i] != s {
                        mark[i] = s;
                        rows.push(i);
                    }
                }
            }
            rows.sort_unstable();
            if let Some(&p) = rows.first() {
                children[node_of[p]].push(s);
            }
            nodes.push(Supernode {
                first: f,
                ncols: k,
                rows,
                nchildren: children[s].len(),
            });
        }
        let anorm = a.max_abs();
        if anorm == 0.0 {
            return Err(Error::Singular {
                kind: "numerically",
                pivot: 0,
            });
        }
        let mut this = Self {
            n,
            perm,
            nodes,
            factors: Vec::with_capacity(ns),
            perturbed_pivots: 0,
        };
        this.numeric(&b, anorm * STATIC_PIVOT)?;
        Ok(this)
    }

    fn numeric(&mut self, b: &CsrMatrix, tiny: f64) -> Result<()> {
        let mut pos = vec![NONE; self.n];
        let mut stack: Vec<(usize, Vec<C64>)> = Vec::new();
        for s in 0..self.nodes.len() {
            let node = &self.nodes[s];
            let (f, k) = (node.first, node.ncols);
            let m = node.front();
            for c in 0..k {
                pos[f + c] = c;
            }
            for (a, &r) in node.rows.iter().enumerate() {
                pos[r] = k + a;
            }
            let mut front = vec![ZERO; m * m];
            for c in 0..k {
                let (cols, vals) = b.row(f + c);
                for (&i, &v) in cols.iter().zip(vals) {
                    if i >= f + c {
                        front[pos[i] + c * m] += v;
                    }
                }
            }
            // extend-add the update matrices of the children
            let nc = node.nchildren;
            for (child, upd) in stack.drain(stack.len() - nc..) {
                let rows = &self.nodes[child].rows;
                let r = rows.len();
                let local: Vec<usize> = rows.iter().map(|&i| pos[i]).collect();
                for bcol in 0..r {
                    let dst = local[bcol] * m;
                    for arow in bcol..r {
                        front[dst + local[arow]] += upd[arow + bcol * r];
                    }
                }
            }
            self.perturbed_pivots += partial_factor(&mut front, m, k, tiny);
            let factor = front[..m * k].to_vec();
            let r = m - k;
            if r > 0 {
                let mut upd = vec![ZERO; r * r];
                for c in 0..r {
                    let src = (k + c) * m + k;
                    upd[c * r + c..(c + 1) * r].copy_from_slice(&front[src + c..src + r]);
                }
                stack.push((s, upd));
            }
            self.factors.push(factor);
            for c in 0..k {
                pos[f + c] = NONE;
            }
            for &r in &node.rows {
                pos[r] = NONE;
            }
        }
        if self.perturbed_pivots > 0 {
            log::debug!("LDLT: {} pivots perturbed", self.perturbed_pivots);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored factor entries.
    pub fn nnz(&self) -> usize {
        self.factors.iter().map(|f| f.len()).sum()
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rhs.len(),
            });
        }
        let mut y: Vec<C64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for (node, l) in self.nodes.iter().zip(&self.factors) {
            let (f, k, m) = (node.first, node.ncols, node.front());
            for c in 0..k {
                let yc = y[f + c];
                if yc == ZERO {
                    continue;
                }
                let col = &l[c * m..(c + 1) * m];
                for i in c + 1..k {
                    y[f + i] -= col[i] * yc;
                }
                for (a, &r) in node.rows.iter().enumerate() {
                    y[r] -= col[k + a] * yc;
                }
            }
        }
        for (node, l) in self.nodes.iter().zip(&self.factors) {
            let m = node.front();
            for c in 0..node.ncols {
                y[node.first + c] /= l[c * m + c];
            }
        }
        for (node, l) in self.nodes.iter().zip(&self.factors).rev() {
            let (f, k, m) = (node.first, node.ncols, node.front());
            for c in (0..k).rev() {
                let col = &l[c * m..(c + 1) * m];
                let mut s = y[f + c];
                for i in c + 1..k {
                    s -= col[i] * y[f + i];
                }
                for (a, &r) in node.rows.iter().enumerate() {
                    s -= col[k + a] * y[r];
                }
                y[f + c] = s;
            }
        }
        let mut x = vec![ZERO; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }
}

/// Eliminate the first `k` columns of the dense symmetric `m × m` front
/// (lower triangle, column-major), leaving the Schur complement in the
/// trailing block. Returns the number of perturbed pivots.
fn partial_factor(front: &mut [C64], m: usize, k: usize, tiny: f64) -> usize {
    let mut perturbed = 0;
    let mut j0 = 0;
    while j0 < k {
        let j1 = (j0 + PANEL).min(k);
        for j in j0..j1 {
            let mut d = front[j * m + j];
            if d.norm() < tiny {
                d = if d.norm() > 0.0 {
                    d / d.norm() * tiny
                } else {
                    C64::new(tiny, 0.0)
                };
                front[j * m + j] = d;
                perturbed += 1;
            }
            let inv = d.inv();
            for i in j + 1..m {
                front[j * m + i] *= inv;
            }
            for c in j + 1..j1 {
                let t = front[j * m + c] * d;
                if t == ZERO {
                    continue;
                }
                let (left, right) = front.split_at_mut(c * m);
                let lj = &left[j * m..j * m + m];
                let dst = &mut right[..m];
                for i in c..m {
                    dst[i] -= lj[i] * t;
                }
            }
        }
        if j1 < m {
            let rows = m - j1;
            let width = j1 - j0;
            let mut lp = vec![ZERO; rows * width];
            let mut w = vec![ZERO; rows * width];
            for c in 0..width {
                let col = (j0 + c) * m;
                let d = front[col + j0 + c];
                lp[c * rows..(c + 1) * rows].copy_from_slice(&front[col + j1..col + m]);
                for i in 0..rows {
                    w[c * rows + i] = lp[c * rows + i] * d;
                }
            }
            let lp = MatRef::from_column_major_slice(&lp, rows, width);
            let w = MatRef::from_column_major_slice(&w, rows, width);
            let full = MatMut::from_column_major_slice_mut(front, m, m);
            let dst = full.submatrix_mut(j1, j1, rows, rows);
            matmul(
                dst,
                BlockStructure::TriangularLower,
                Accum::Add,
                w,
                BlockStructure::Rectangular,
                lp.transpose(),
                BlockStructure::Rectangular,
                C64::new(-1.0, 0.0),
                Par::Seq,
            );
        }
        j0 = j1;
    }
    perturbed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ordering::amd_order;
    use crate::sparse::relative_residual;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((
                i,
                i,
                C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..0.5)),
            ));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn etree_and_postorder_of_arrow_matrix() {
        // arrow pattern: every column couples to the last one
        let n = 5;
        let mut t: Vec<(usize, usize, C64)> = (0..n).map(|i| (i, i, C64::new(4.0, 0.0))).collect();
        for i in 0..n - 1 {
            t.push((i, n - 1, C64::new(1.0, 0.0)));
            t.push((n - 1, i, C64::new(1.0, 0.0)));
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let parent = etree(&a);
        assert_eq!(parent, vec![4, 4, 4, 4, NONE]);
        assert_eq!(postorder(&parent), vec![0, 1, 2, 3, 4]);
        assert_eq!(column_counts(&a, &parent), vec![2, 2, 2, 2, 1]);
    }

    #[test]
    fn solves_random_complex_symmetric_systems() {
        for seed in 0..5 {
            let a = random_symmetric(400, seed);
            let p = amd_order(&a).unwrap();
            let f = SymmetricLdlt::factor(&a, &p).unwrap();
            let b: Vec<C64> = (0..400).map(|i| C64::new(i as f64, 1.0)).collect();
            let x = f.solve(&b).unwrap();
            assert!(relative_residual(&a, &x, &b) < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn dense_front_matches_reference() {
        // a fully coupled matrix is one supernode exercising the blocked path
        let n = 130;
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    + if i == j { C64::new(20.0, 0.0) } else { ZERO };
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let f = SymmetricLdlt::factor(&a, &(0..n).collect::<Vec<_>>()).unwrap();
        assert_eq!(f.nodes.len(), 1);
        let b = vec![C64::new(1.0, -1.0); n];
        let x = f.solve(&b).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-12);
        assert_eq!(f.perturbed_pivots, 0);
    }

    #[test]
    fn zero_pivot_is_perturbed_not_fatal() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[
                (0, 1, C64::new(1.0, 0.0)),
                (1, 0, C64::new(1.0, 0.0)),
                (1, 1, C64::new(0.0, 0.0)),
            ],
        )
        .unwrap();
        let f = SymmetricLdlt::factor(&a, &[0, 1]).unwrap();
        assert!(f.perturbed_pivots >= 1);
    }
}
