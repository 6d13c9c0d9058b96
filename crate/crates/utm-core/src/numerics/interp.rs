//! Barycentric Lagrange interpolation on Chebyshev points.

/// Chebyshev points of the first kind mapped to `[a, b]`, with barycentric
/// weights.
#[derive(Debug, Clone)]
pub struct ChebyshevBasis {
    pub points: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevBasis {
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let th = std::f64::consts::PI * (2 * j + 1) as f64 / (2 * n) as f64;
            points.push(0.5 * (a + b) + 0.5 * (b - a) * th.cos());
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            weights.push(sign * th.sin());
        }
        ChebyshevBasis { points, weights }
    }

    /// Values of every Lagrange basis polynomial at `x`, written into `out`.
    pub fn basis_at(&self, x: f64, out: &mut [f64]) {
        let n = self.points.len();
        for j in 0..n {
            if x == self.points[j] {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[j] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for j in 0..n {
            let t = self.weights[j] / (x - self.points[j]);
            out[j] = t;
            denom += t;
        }
        out.iter_mut().for_each(|o| *o /= denom);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let b = ChebyshevBasis::new(20, 0.0, 2.0);
        let vals: Vec<f64> = b.points.iter().map(|&s| s.sin()).collect();
        let mut l = vec![0.0; 20];
        for x in [0.0, 0.3, 1.7, 2.0] {
            b.basis_at(x, &mut l);
            let p: f64 = l.iter().zip(&vals).map(|(a, b)| a * b).sum();
            assert!((p - x.sin()).abs() < 1e-13);
        }
    }
}
