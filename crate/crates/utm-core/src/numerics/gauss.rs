//! Gauss–Legendre rules and the collocation integration matrix.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    GaussRule { nodes, weights }
}

/// Cached Gauss–Legendre rule with `n` points on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(compute(n))).clone()
}

/// Gauss rule together with the collocation matrix
/// `A[i][j] = ∫_0^{c_i} L_j(τ) dτ`, where `L_j` is the Lagrange basis on the
/// nodes. Built through the orthonormal shifted Legendre expansion of `L_j`,
/// which is exact for the discrete orthogonality of the rule.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub rule: GaussRule,
    pub a: Vec<Vec<f64>>,
}

fn build_collocation(m: usize) -> Collocation {
    let rule = (*gauss_legendre(m)).clone();
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        let u_i = 2.0 * rule.nodes[i] - 1.0;
        // ∫_0^{c_i} P_k(2τ - 1) dτ for k = 0..m-1.
        let mut ints = vec![0.0; m];
        for (k, v) in ints.iter_mut().enumerate() {
            *v = if k == 0 {
                0.5 * (u_i + 1.0)
            } else {
                let pk1 = legendre_value(k + 1, u_i);
                let pkm1 = legendre_value(k - 1, u_i);
                0.5 * (pk1 - pkm1) / (2.0 * k as f64 + 1.0)
            };
        }
        for j in 0..m {
            let u_j = 2.0 * rule.nodes[j] - 1.0;
            let mut s = 0.0;
            for (k, int_k) in ints.iter().enumerate() {
                // Orthonormal on [0,1]: sqrt(2k+1) P_k(2τ-1).
                let norm = 2.0 * k as f64 + 1.0;
                s += norm * legendre_value(k, u_j) * int_k;
            }
            a[i][j] = rule.weights[j] * s;
        }
    }
    Collocation { rule, a }
}

fn legendre_value(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Cached collocation data for `m` Gauss nodes.
pub fn collocation(m: usize) -> Arc<Collocation> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Collocation>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(m).or_insert_with(|| Arc::new(build_collocation(m))).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 4, 8, 16, 32] {
            let r = gauss_legendre(n);
            for p in 0..(2 * n) {
                let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn collocation_matrix_integrates_polynomials() {
        let m = 8;
        let c = collocation(m);
        for p in 0..m {
            for i in 0..m {
                let ci = c.rule.nodes[i];
                let s: f64 = (0..m).map(|j| c.a[i][j] * c.rule.nodes[j].powi(p as i32)).sum();
                assert!((s - ci.powi(p as i32 + 1) / (p as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }
}
