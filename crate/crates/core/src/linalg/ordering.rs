//! Fill-reducing orderings of symmetric sparsity patterns: approximate
//! minimum degree, and coordinate-based nested dissection with minimum
//! degree on the leaves.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Parts at or below this size are ordered by minimum degree.
const LEAF_SIZE: usize = 200;
/// Candidate cut planes tried per split.
const MAX_CUT_CANDIDATES: usize = 9;

/// `perm[k]` is the original index eliminated at step `k`.
pub fn amd_order(a: &CsrMatrix) -> Result<Vec<usize>> {
    amd_pattern(a.nrows, &a.row_ptr, &a.col_idx)
}

fn amd_pattern(n: usize, ptr: &[usize], idx: &[usize]) -> Result<Vec<usize>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let (p, _, _) = amd::order::<usize>(n, ptr, idx, &amd::Control::default())
        .map_err(|s| Error::InvalidInput(format!("minimum degree ordering failed: {s:?}")))?;
    Ok(p)
}

/// Nested dissection by axis-aligned cuts through the point cloud `coords`
/// (one point per unknown). The separator of each cut is the set of
/// unknowns on the far side that couple to the near side.
pub fn nested_dissection(a: &CsrMatrix, coords: &[[f64; 3]]) -> Result<Vec<usize>> {
    let n = a.nrows;
    if coords.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coords.len(),
        });
    }
    let mut label = vec![0u32; n];
    let mut next_label = 1u32;
    let mut order = Vec::with_capacity(n);
    let mut local = vec![usize::MAX; n];
    // explicit stack: (nodes, label, separator to append after both halves)
    enum Task {
        Part(Vec<usize>, u32),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Task::Part((0..n).collect(), 0)];
    while let Some(task) = stack.pop() {
        let (nodes, lab) = match task {
            Task::Emit(sep) => {
                order.extend(sep);
                continue;
            }
            Task::Part(nodes, lab) => (nodes, lab),
        };
        if nodes.len() <= LEAF_SIZE {
            order.extend(leaf_order(a, &nodes, &mut local)?);
            continue;
        }
        match best_cut(a, coords, &nodes, &label, lab) {
            Some((left, right, sep)) => {
                let (ll, rl) = (next_label, next_label + 1);
                next_label += 2;
                for &v in &left {
                    label[v] = ll;
                }
                for &v in &right {
                    label[v] = rl;
                }
                for &v in &sep {
                    label[v] = u32::MAX;
                }
                stack.push(Task::Emit(sep));
                stack.push(Task::Part(right, rl));
                stack.push(Task::Part(left, ll));
            }
            None => order.extend(leaf_order(a, &nodes, &mut local)?),
        }
    }
    debug_assert_eq!(order.len(), n);
    Ok(order)
}

fn leaf_order(a: &CsrMatrix, nodes: &[usize], local: &mut [usize]) -> Result<Vec<usize>> {
    for (k, &v) in nodes.iter().enumerate() {
        local[v] = k;
    }
    let mut ptr = vec![0usize];
    let mut idx = Vec::new();
    for &v in nodes {
        let (cols, _) = a.row(v);
        let start = idx.len();
        idx.extend(
            cols.iter()
                .filter_map(|&c| (local[c] != usize::MAX).then_some(local[c])),
        );
        idx[start..].sort_unstable();
        ptr.push(idx.len());
    }
    for &v in nodes {
        local[v] = usize::MAX;
    }
    Ok(amd_pattern(nodes.len(), &ptr, &idx)?
        .into_iter()
        .map(|k| nodes[k])
        .collect())
}

type Cut = (Vec<usize>, Vec<usize>, Vec<usize>);

fn best_cut(
    a: &CsrMatrix,
    coords: &[[f64; 3]],
    nodes: &[usize],
    label: &[u32],
    lab: u32,
) -> Option<Cut> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &v in nodes {
        for d in 0..3 {
            lo[d] = lo[d].min(coords[v][d]);
            hi[d] = hi[d].max(coords[v][d]);
        }
    }
    let axis = (0..3)
        .max_by(|&p, &q| (hi[p] - lo[p]).total_cmp(&(hi[q] - lo[q])))
        .unwrap();
    let extent = hi[axis] - lo[axis];
    if extent <= 0.0 {
        return None;
    }
    let tol = 1e-9 * extent;
    let mut values: Vec<f64> = nodes.iter().map(|&v| coords[v][axis]).collect();
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for &x in &values {
        if distinct.last().is_none_or(|&l| x - l > tol) {
            distinct.push(x);
        }
    }
    if distinct.len() < 3 {
        return None;
    }
    let median = values[values.len() / 2];
    let mid = distinct
        .iter()
        .position(|&x| x >= median - tol)
        .unwrap_or(distinct.len() / 2);
    let half = MAX_CUT_CANDIDATES / 2;
    let from = mid.saturating_sub(half).max(1);
    let to = (mid + half + 1).min(distinct.len() - 1);
    let mut best: Option<(usize, Cut)> = None;
    for &c in &distinct[from..to] {
        let near = |v: usize| coords[v][axis] < c - tol;
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut sep = Vec::new();
        for &v in nodes {
            if near(v) {
                left.push(v);
            } else {
                let (cols, _) = a.row(v);
                if cols.iter().any(|&w| label[w] == lab && near(w)) {
                    sep.push(v);
                } else {
                    right.push(v);
                }
            }
        }
        if left.is_empty() || right.is_empty() {
            continue;
        }
        // separator size, penalised by imbalance
        let imbalance = left.len().max(right.len()) as f64 / nodes.len() as f64;
        let score = (sep.len() as f64 * (1.0 + 4.0 * (imbalance - 0.5).max(0.0))) as usize;
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, (left, right, sep)));
        }
    }
    best.map(|(_, c)| c)
}

/// Whether `perm` is a permutation of `0..n`.
pub fn is_permutation(perm: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    perm.len() == n
        && perm
            .iter()
            .all(|&p| p < n && !std::mem::replace(&mut seen[p], true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn grid_laplacian(m: usize) -> (CsrMatrix, Vec<[f64; 3]>) {
        let id = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
        let mut t = Vec::new();
        let mut coords = vec![[0.0; 3]; m * m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let v = id(i, j, k);
                    coords[v] = [i as f64, j as f64, k as f64];
                    t.push((v, v, C64::new(6.0, 0.0)));
                    for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                        if i + di < m && j + dj < m && k + dk < m {
                            let w = id(i + di, j + dj, k + dk);
                            t.push((v, w, C64::new(-1.0, 0.0)));
                            t.push((w, v, C64::new(-1.0, 0.0)));
                        }
                    }
                }
            }
        }
        (
            CsrMatrix::from_triplets(m * m * m, m * m * m, &t).unwrap(),
            coords,
        )
    }

    #[test]
    fn orderings_are_permutations() {
        let (a, c) = grid_laplacian(9);
        assert!(is_permutation(&amd_order(&a).unwrap(), a.nrows));
        assert!(is_permutation(&nested_dissection(&a, &c).unwrap(), a.nrows));
    }

    #[test]
    fn top_separator_is_a_grid_plane() {
        let (a, c) = grid_laplacian(15);
        let p = nested_dissection(&a, &c).unwrap();
        // the last 225 eliminated unknowns share one coordinate value
        let last = &p[p.len() - 225..];
        let same = (0..3).any(|d| last.iter().all(|&v| c[v][d] == c[last[0]][d]));
        assert!(same);
    }

    #[test]
    fn coordinate_count_mismatch() {
        let (a, _) = grid_laplacian(3);
        assert!(nested_dissection(&a, &[[0.0; 3]; 2]).is_err());
    }
}
