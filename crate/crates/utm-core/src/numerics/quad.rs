//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use crate::error::{Result, UtmError};
use num_complex::Complex64 as C64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Options for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

/// Integrates `f` over `[a, b]`, splitting first at the given interior
/// breakpoints. Returns the value and the summed error estimate.
pub fn integrate_with_breaks<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<(C64, f64)> {
    if a == b {
        return Ok((C64::new(0.0, 0.0), 0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    pts.push(hi);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut intervals: Vec<(f64, f64, C64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: C64 = intervals.iter().map(|t| t.2).sum();
        let err: f64 = intervals.iter().map(|t| t.3).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(UtmError::Quadrature("non-finite integrand".into()));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            return Ok((total * sign, err));
        }
        if intervals.len() >= opts.max_intervals {
            return Err(UtmError::Quadrature(format!(
                "error estimate {err:.3e} after {} intervals",
                intervals.len()
            )));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (l, r, _, _) = intervals.swap_remove(idx);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            return Err(UtmError::Quadrature("interval underflow".into()));
        }
        let (v1, e1) = gk15(&f, l, m);
        let (v2, e2) = gk15(&f, m, r);
        intervals.push((l, m, v1, e1));
        intervals.push((m, r, v2, e2));
    }
}

/// Integrates `f` over `[a, b]` adaptively.
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<C64> {
    integrate_with_breaks(f, a, b, &[], opts).map(|(v, _)| v)
}

/// Integrates a real function.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    integrate(|x| C64::new(f(x), 0.0), a, b, opts).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillatory_integral() {
        let v = integrate(|x| C64::new(0.0, 40.0 * x).exp(), 0.0, 1.0, QuadOptions::default()).unwrap();
        let exact = (C64::new(0.0, 40.0).exp() - 1.0) / C64::new(0.0, 40.0);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn kink_with_break() {
        let (v, _) = integrate_with_breaks(|x| C64::new((x - 0.3).abs(), 0.0), 0.0, 1.0, &[0.3], QuadOptions::default()).unwrap();
        assert!((v.re - (0.045 + 0.245)).abs() < 1e-14);
    }
}
