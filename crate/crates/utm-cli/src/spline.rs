//! Natural cubic spline through complex samples, held constant outside
//! the sample range.

use utm_core::C64;

#[derive(Debug, Clone)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<C64>,
    /// Second derivatives at the knots.
    m: Vec<C64>,
}

impl NaturalSpline {
    /// `x` must be strictly increasing with at least two knots.
    pub fn new(x: Vec<f64>, y: Vec<C64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        let n = x.len();
        let mut m = vec![C64::new(0.0, 0.0); n];
        if n > 2 {
            // Thomas algorithm on the interior knots.
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; n];
            let mut rhs = vec![C64::new(0.0, 0.0); n];
            for i in 1..n - 1 {
                diag[i] = 2.0 * (h[i - 1] + h[i]);
                rhs[i] = ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]) * 6.0;
            }
            for i in 2..n - 1 {
                let w = h[i - 1] / diag[i - 1];
                diag[i] -= w * h[i - 1];
                let prev = rhs[i - 1];
                rhs[i] -= prev * w;
            }
            m[n - 2] = rhs[n - 2] / diag[n - 2];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i] - m[i + 1] * h[i]) / diag[i];
            }
        }
        NaturalSpline { x, y, m }
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.x.len();
        if x <= self.x[0] || x >= self.x[n - 1] {
            return None;
        }
        Some(self.x.partition_point(|&k| k <= x) - 1)
    }

    pub fn value(&self, x: f64) -> C64 {
        let Some(i) = self.locate(x) else {
            return if x <= self.x[0] { self.y[0] } else { *self.y.last().unwrap() };
        };
        let h = self.x[i + 1] - self.x[i];
        let (a, b) = ((self.x[i + 1] - x) / h, (x - self.x[i]) / h);
        self.y[i] * a
            + self.y[i + 1] * b
            + (self.m[i] * (a * a * a - a) + self.m[i + 1] * (b * b * b - b)) * (h * h / 6.0)
    }

    pub fn derivative(&self, x: f64) -> C64 {
        let Some(i) = self.locate(x) else { return C64::new(0.0, 0.0) };
        let h = self.x[i + 1] - self.x[i];
        let (a, b) = ((self.x[i + 1] - x) / h, (x - self.x[i]) / h);
        (self.y[i + 1] - self.y[i]) / h + (self.m[i + 1] * (3.0 * b * b - 1.0) - self.m[i] * (3.0 * a * a - 1.0)) * (h / 6.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_zero_end_curvature() {
        // The natural spline is exact for data that is linear.
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.3).collect();
        let y = x.iter().map(|&v| C64::new(2.0 * v - 1.0, -v)).collect();
        let s = NaturalSpline::new(x, y);
        for v in [0.05, 0.61, 1.37] {
            assert!((s.value(v) - C64::new(2.0 * v - 1.0, -v)).norm() < 1e-14);
            assert!((s.derivative(v) - C64::new(2.0, -1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn interpolates_and_converges() {
        let n = 41;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&v| C64::new((3.0 * v).sin(), 0.0)).collect::<Vec<_>>();
        let s = NaturalSpline::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.value(*xi) - yi).norm() < 1e-15);
        }
        // Away from the ends the error is O(h⁴).
        assert!((s.value(0.512).re - (1.536f64).sin()).abs() < 1e-6);
        assert_eq!(s.value(-1.0), y[0]);
    }
}
