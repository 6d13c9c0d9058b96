//! Richardson-extrapolated central differences.

use num_complex::Complex64 as C64;

/// Default step for coefficient derivatives.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Fourth-order derivative estimate: two central differences at `h` and
/// `h/2` combined by Richardson extrapolation.
pub fn derivative<F: Fn(f64) -> C64 + ?Sized>(f: &F, x: f64, h: f64) -> C64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let h2 = 0.5 * h;
    let d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
    (d2 * 4.0 - d1) / 3.0
}

/// Fourth-order central second derivative on a uniform stencil.
pub fn second_derivative<F: Fn(f64) -> C64 + ?Sized>(f: &F, x: f64, h: f64) -> C64 {
    (-f(x + 2.0 * h) + f(x + h) * 16.0 - f(x) * 30.0 + f(x - h) * 16.0 - f(x - 2.0 * h))
        / (12.0 * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_exp() {
        let f = |x: f64| C64::new(0.0, 3.0 * x).exp();
        let d = derivative(&f, 0.4, DEFAULT_STEP);
        let exact = C64::new(0.0, 3.0) * f(0.4);
        assert!((d - exact).norm() < 1e-9);
    }
}
