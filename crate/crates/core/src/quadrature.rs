//! Gauss-Legendre rules on segments and collapsed (Duffy) product rules on
//! the reference triangle and tetrahedron.
//!
//! Simplex rules are stored in barycentric coordinates with weights that
//! sum to one, so integrating over a physical simplex is
//! `measure * Σ w_q f(x_q)`.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let kf = k as f64;
    for i in 0..k.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(k, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[k - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[k - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature on a segment parametrised by `s ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn gauss(k: usize) -> Self {
        let (points, weights) = gauss_legendre_unit(k);
        Self { points, weights }
    }
}

/// Quadrature on the reference triangle in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub degree: usize,
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriRule {
    /// Collapsed Gauss product rule exact for polynomials of total degree `degree`.
    pub fn with_degree(degree: usize) -> Self {
        let k = (degree + 2).div_ceil(2).max(1);
        let (x, w) = gauss_legendre_unit(k);
        let mut bary = Vec::with_capacity(k * k);
        let mut weights = Vec::with_capacity(k * k);
        for (&u, &wu) in x.iter().zip(&w) {
            for (&v, &wv) in x.iter().zip(&w) {
                let s = u;
                let t = v * (1.0 - u);
                bary.push([1.0 - s - t, s, t]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        Self {
            degree,
            bary,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Quadrature on the reference tetrahedron in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TetRule {
    pub degree: usize,
    pub bary: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    /// Collapsed Gauss product rule exact for polynomials of total degree `degree`.
    pub fn with_degree(degree: usize) -> Self {
        let k = (degree + 3).div_ceil(2).max(1);
        let (x, w) = gauss_legendre_unit(k);
        let mut bary = Vec::with_capacity(k * k * k);
        let mut weights = Vec::with_capacity(k * k * k);
        for (&u, &wu) in x.iter().zip(&w) {
            for (&v, &wv) in x.iter().zip(&w) {
                for (&s, &ws) in x.iter().zip(&w) {
                    let a = u;
                    let b = v * (1.0 - u);
                    let c = s * (1.0 - u) * (1.0 - v);
                    bary.push([1.0 - a - b - c, a, b, c]);
                    weights.push(6.0 * wu * wv * ws * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
        Self {
            degree,
            bary,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    // ∫_K Π λ_i^{α_i} / |K| = d! Π α_i! / (|α| + d)!
    fn bary_monomial_exact(alpha: &[usize]) -> f64 {
        let d = alpha.len() - 1;
        let total: usize = alpha.iter().sum();
        factorial(d) * alpha.iter().map(|&a| factorial(a)).product::<f64>() / factorial(total + d)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for k in 1..10 {
            let (x, w) = gauss_legendre_unit(k);
            for p in 0..(2 * k) {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * xi.powi(p as i32))
                    .sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "k={k} p={p}");
            }
        }
    }

    #[test]
    fn tet_rule_exact_on_barycentric_monomials() {
        for degree in [2, 6, 12] {
            let rule = TetRule::with_degree(degree);
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    for c in 0..=(degree - a - b) {
                        let d = degree - a - b - c;
                        let q: f64 = rule
                            .bary
                            .iter()
                            .zip(&rule.weights)
                            .map(|(l, w)| {
                                w * l[0].powi(a as i32)
                                    * l[1].powi(b as i32)
                                    * l[2].powi(c as i32)
                                    * l[3].powi(d as i32)
                            })
                            .sum();
                        let exact = bary_monomial_exact(&[a, b, c, d]);
                        assert!(
                            (q - exact).abs() <= 1e-12 * exact,
                            "degree {degree} alpha ({a},{b},{c},{d}): {q} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tri_rule_exact_on_barycentric_monomials() {
        for degree in [2, 6, 12] {
            let rule = TriRule::with_degree(degree);
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let c = degree - a - b;
                    let q: f64 = rule
                        .bary
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| {
                            w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)
                        })
                        .sum();
                    let exact = bary_monomial_exact(&[a, b, c]);
                    assert!((q - exact).abs() <= 1e-12 * exact);
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let t = TetRule::with_degree(6);
        assert!((t.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let f = TriRule::with_degree(6);
        assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
