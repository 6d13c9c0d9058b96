//! Numerical checks of the structural identities satisfied by the
//! accumulation functions and Δ: derivative identities, factorial bounds,
//! composition identities, the eigen boundary identity and the large-k
//! asymptotics of Δ.
//!
//! Every check returns a measured quantity and the threshold it must stay
//! below, so that callers (the property tests and the command line) can
//! report the margin rather than a bare boolean.

use std::sync::Arc;

use crate::accum::{AccumSeries, Family, Mesh, Sweep, Truncation, STRIDE};
use crate::coefficients::{DispersionCache, DomainKind, Wavenumber};
use crate::delta::{b0_asymptotic, classify, delta_fi, delta_hl, delta_wl, BoundaryConditions};
use crate::error::{Result, UtmError};
use crate::{C64, I};

/// One measured identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), measured, threshold }
    }

    /// Strict: a NaN measurement fails.
    pub fn passed(&self) -> bool {
        self.measured < self.threshold
    }
}

/// Relative floor of the derivative-identity scale.
pub const FLOOR: f64 = 1e-8;

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Families tabulated on a domain of the given kind.
fn families(kind: DomainKind) -> [Family; 2] {
    match kind {
        DomainKind::FiniteInterval => [Family::CsForward, Family::CsBackward],
        DomainKind::HalfLine => [Family::CsForward, Family::ETail],
        DomainKind::WholeLine => [Family::ETilde, Family::ETail],
    }
}

/// Value and derivative right-hand side of one channel at point `i`.
/// Channel 0 is 𝓒ₙ or 𝓔ₙ, channel 1 is 𝓢ₙ.
fn value(s: &AccumSeries, n: usize, ch: usize, i: usize) -> C64 {
    match (s.family, ch) {
        (Family::ETail | Family::ETilde, _) => s.e(n, i),
        (_, 0) => s.c(n, i),
        _ => s.s(n, i),
    }
}

fn rhs(s: &AccumSeries, n: usize, ch: usize, i: usize) -> (C64, f64) {
    let loc = s.sweep.local[i];
    let (w, eta) = (loc.omega, loc.eta);
    let prev = |c: usize| if n == 0 { zero() } else { value(s, n - 1, c, i) };
    let cur = |c: usize| value(s, n, c, i);
    let sg = sign(n);
    let (r, terms) = match (s.family, ch) {
        (Family::CsForward, 0) => {
            let (a, b) = (eta * prev(0) * 0.5, -w * cur(1) * sg);
            (a + b, a.norm() + b.norm())
        }
        (Family::CsForward, _) => {
            let (a, b) = (eta * prev(1) * 0.5, w * cur(0) * sg);
            (a + b, a.norm() + b.norm())
        }
        (Family::CsBackward, 0) => {
            let (a, b) = (-eta * prev(0) * 0.5, w * cur(1));
            (a + b, a.norm() + b.norm())
        }
        (Family::CsBackward, _) => {
            let (a, b) = (eta * prev(1) * 0.5, -w * cur(0));
            (a + b, a.norm() + b.norm())
        }
        (Family::ETail, _) => {
            let (a, b) = (-eta * prev(0) * 0.5, -I * w * cur(0) * (1.0 - sg));
            (a + b, a.norm() + b.norm())
        }
        (Family::ETilde, _) => {
            let (a, b) = (eta * prev(0) * 0.5, I * w * cur(0) * (1.0 - sg));
            (a + b, a.norm() + b.norm())
        }
    };
    (r, terms)
}

/// Sixth-order central differences of every tabulated level at `x`
/// against the derivative identities. The measured value is the largest
/// error relative to the size of the right-hand-side terms, floored at
/// [`FLOOR`]·|ω|·max|Vₙ| over the family.
pub fn derivative_identities(
    cache: Arc<DispersionCache>,
    k: Wavenumber,
    x: f64,
    h: f64,
    truncation: Truncation,
) -> Result<Check> {
    let kind = cache.profile().domain.kind;
    let pts = [x - 3.0 * h, x - 2.0 * h, x - h, x, x + h, x + 2.0 * h, x + 3.0 * h];
    let mesh = Mesh::over_window(cache, &pts)?;
    let sweep = mesh.sweep(k)?;
    let idx: Vec<usize> = pts
        .iter()
        .map(|&p| sweep.index_of(p).ok_or(UtmError::Coverage { x: p }))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for fam in families(kind) {
        let s = sweep.series(fam, truncation);
        let channels = if matches!(fam, Family::ETail | Family::ETilde) { 1 } else { 2 };
        let mut rows = Vec::new();
        for n in 0..=s.order() {
            for ch in 0..channels {
                let v: Vec<C64> = idx.iter().map(|&i| value(&s, n, ch, i)).collect();
                let fd = (-v[0] + v[1] * 9.0 - v[2] * 45.0 + v[4] * 45.0 - v[5] * 9.0 + v[6]) / (60.0 * h);
                let (r, terms) = rhs(&s, n, ch, idx[3]);
                rows.push(((fd - r).norm(), terms.max(fd.norm())));
            }
        }
        // Levels far below the size of the state, |ω|·max|Vₙ|, are compared
        // on an absolute footing since their relative error is roundoff.
        let omega = sweep.local[idx[3]].omega.norm();
        let state = (0..=s.order())
            .flat_map(|n| (0..channels).map(move |ch| (n, ch)))
            .map(|(n, ch)| value(&s, n, ch, idx[3]).norm())
            .fold(0.0, f64::max);
        let floor = FLOOR * omega * state;
        for (err, scale) in rows {
            let scale = scale.max(floor);
            if scale > 0.0 {
                worst = worst.max(err / scale);
            }
        }
    }
    Ok(Check::new("derivative identities", worst, 1e-6))
}

/// Running ∫|η| from the left end (`from_left`) or to the right end at
/// every flattened point. Both directions are summed separately so that
/// small tails are not lost to cancellation.
fn cumulative_l1(sweep: &Sweep, from_left: bool) -> Vec<f64> {
    let n = sweep.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    let term = |i: usize| sweep.class.weight(i) * sweep.local[i].eta.norm();
    if from_left {
        for (i, o) in out.iter_mut().enumerate() {
            acc += term(i);
            *o = acc;
        }
    } else {
        for i in (0..n).rev() {
            out[i] = acc;
            acc += term(i);
        }
    }
    out
}

/// Bounds below this are treated as zero: the ratio of two subnormal
/// numbers carries no information.
const UNDERFLOW: f64 = 1e-290;

/// Factorial bound |𝒥ₙ| ≤ L₁ⁿ/(2ⁿn!) on every J-form value and script
/// value tabulated at the mesh panel boundaries. The measured value is the largest ratio |value|/bound
/// over points with a positive bound (so it must stay below one); level
/// zero and zero bounds are checked separately and turn the measurement
/// to infinity if violated.
pub fn factorial_bounds(cache: Arc<DispersionCache>, k: Wavenumber, truncation: Truncation) -> Result<Check> {
    let kind = cache.profile().domain.kind;
    let mesh = Mesh::over_window(cache, &[])?;
    let sweep = mesh.sweep(k)?;
    let left = cumulative_l1(&sweep, true);
    let right = cumulative_l1(&sweep, false);
    let mut worst: f64 = 0.0;
    for fam in families(kind) {
        let s = sweep.series(fam, truncation);
        // Panel boundaries, where the cumulative Gauss sums are exact.
        for i in (0..sweep.len()).filter(|i| i % STRIDE == 0) {
            let l1 = match fam {
                Family::CsForward | Family::ETilde => left[i],
                Family::CsBackward | Family::ETail => right[i],
            };
            for n in 0..=s.order() {
                let mut vals = vec![s.raw(n, 0, i)];
                if matches!(fam, Family::CsForward | Family::CsBackward) {
                    vals.extend([s.raw(n, 1, i), s.script_c(n, i), s.script_s(n, i)]);
                }
                let bound = crate::accum::factorial_bound(l1, n);
                for v in vals {
                    let m = v.norm();
                    if n == 0 {
                        if m > 1.0 + 1e-12 {
                            worst = f64::INFINITY;
                        }
                    } else if bound > UNDERFLOW {
                        worst = worst.max(m / bound);
                    } else if m > 1e-15 {
                        worst = f64::INFINITY;
                    }
                }
            }
        }
    }
    Ok(Check::new("factorial bound", worst, 1.0))
}

/// Composition identities at the interior point `x`: the interval
/// splitting of 𝒞ₙ and 𝒮ₙ, the half-line splitting of 𝓔ₙ, or the
/// whole-line splitting of 𝓔ₙ for even n against the value read at the
/// window edge.
pub fn composition_identities(
    cache: Arc<DispersionCache>,
    k: Wavenumber,
    x: f64,
    order: usize,
) -> Result<Check> {
    let kind = cache.profile().domain.kind;
    let mesh = Mesh::over_window(cache, &[x])?;
    let sweep = mesh.sweep(k)?;
    let ix = sweep.index_of(x).ok_or(UtmError::Coverage { x })?;
    let last = sweep.last();
    let tr = Truncation::Fixed(order);
    let mut worst: f64 = 0.0;
    let mut record = |lhs: C64, rhs: C64, terms: f64| {
        let scale = terms.max(lhs.norm()).max(1e-300);
        worst = worst.max((lhs - rhs).norm() / scale);
    };
    match kind {
        DomainKind::FiniteInterval => {
            let fwd = sweep.series(Family::CsForward, tr);
            let bwd = sweep.series(Family::CsBackward, tr);
            for n in 0..=order {
                let (mut c, mut s, mut tc, mut ts) = (zero(), zero(), 0.0, 0.0);
                for l in 0..=n {
                    let sg = sign(n - l);
                    let (cl, sl) = (fwd.script_c(n - l, ix), fwd.script_s(n - l, ix));
                    let (cr, sr) = (bwd.script_c(l, ix), bwd.script_s(l, ix));
                    c += cl * cr - sl * sr * sg;
                    s += sl * cr + cl * sr * sg;
                    tc += (cl * cr).norm() + (sl * sr).norm();
                    ts += (sl * cr).norm() + (cl * sr).norm();
                }
                record(fwd.script_c(n, last), c, tc);
                record(fwd.script_s(n, last), s, ts);
            }
        }
        DomainKind::HalfLine => {
            let fwd = sweep.series(Family::CsForward, tr);
            let tail = sweep.series(Family::ETail, tr);
            for n in 0..=order {
                let (mut e, mut t) = (zero(), 0.0);
                for l in 0..=n {
                    let left = fwd.script_c(n - l, ix) - I * fwd.script_s(n - l, ix) * sign(n);
                    e += left * tail.e(l, ix);
                    t += (left * tail.e(l, ix)).norm();
                }
                record(tail.e(n, 0), e, t);
            }
        }
        DomainKind::WholeLine => {
            let tilde = sweep.series(Family::ETilde, tr);
            let tail = sweep.series(Family::ETail, tr);
            for n in (0..=order).step_by(2) {
                let (mut e, mut t) = (zero(), 0.0);
                for l in 0..=n {
                    e += tilde.e(n - l, ix) * tail.e(l, ix);
                    t += (tilde.e(n - l, ix) * tail.e(l, ix)).norm();
                }
                record(tail.e(n, 0), e, t);
            }
        }
    }
    Ok(Check::new("composition identities", worst, 1e-8))
}

/// |Σ(−1)ⁿ𝓒ₙ·Σ𝓒ₙ + Σ(−1)ⁿ𝓢ₙ·Σ𝓢ₙ − 1| over (x_l, x_r), relative to the
/// size of the two products.
pub fn eigen_bc_identity(cache: Arc<DispersionCache>, k: Wavenumber, truncation: Truncation) -> Result<Check> {
    if cache.profile().domain.kind != DomainKind::FiniteInterval {
        return Err(UtmError::Argument("the boundary identity needs a finite interval".into()));
    }
    let mesh = Mesh::over_window(cache, &[])?;
    let sweep = mesh.sweep(k)?;
    let fwd = sweep.series(Family::CsForward, truncation);
    let last = sweep.last();
    let (mut c, mut s, mut ca, mut sa) = (zero(), zero(), zero(), zero());
    for n in 0..=fwd.order() {
        let (cn, sn) = (fwd.c(n, last), fwd.s(n, last));
        c += cn;
        s += sn;
        ca += cn * sign(n);
        sa += sn * sign(n);
    }
    let value = ca * c + sa * s;
    let scale = (ca * c).norm().max((sa * s).norm()).max(1.0);
    Ok(Check::new("eigen boundary identity", (value - 1.0).norm() / scale, 1e-6))
}

/// |Δ(k)/𝔟₀(k) − 1| at |k| = 4r, 8r and 16r on both rays of the contour.
pub fn asymptotic_sandwich(cache: Arc<DispersionCache>, bc: &BoundaryConditions, safety: f64) -> Result<Check> {
    let (r, theta0) = cache.contour_params(safety)?;
    let kind = cache.profile().domain.kind;
    let case = if kind == DomainKind::FiniteInterval { Some(classify(bc, &cache)?) } else { None };
    let mesh = Mesh::over_window(cache.clone(), &[0.0_f64].into_iter().filter(|_| kind == DomainKind::WholeLine).collect::<Vec<_>>())?;
    let mut worst: f64 = 0.0;
    for scale in [4.0, 8.0, 16.0] {
        for angle in [theta0, std::f64::consts::PI - theta0] {
            let kv = C64::from_polar(scale * r, angle);
            let k = Wavenumber::Physical(kv);
            let sweep = mesh.sweep(k)?;
            let delta = match kind {
                DomainKind::FiniteInterval => delta_fi(bc, &sweep.series(Family::CsForward, Truncation::Adaptive))?,
                DomainKind::HalfLine => delta_hl(bc, &sweep.series(Family::ETail, Truncation::Adaptive))?,
                DomainKind::WholeLine => {
                    let split = sweep.index_of(0.0).ok_or(UtmError::Coverage { x: 0.0 })?;
                    let tilde = sweep.series(Family::ETilde, Truncation::Adaptive);
                    let tail = sweep.series(Family::ETail, Truncation::Adaptive);
                    delta_wl(&tilde, &tail, split)?
                }
            };
            let b0 = b0_asymptotic(k, case.as_ref(), bc, &cache)?;
            worst = worst.max((delta / b0 - 1.0).norm());
        }
    }
    Ok(Check::new("asymptotic sandwich", worst, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::coefficients::{Domain, Preset};

    #[test]
    fn cgl_identities_hold() {
        let cache = Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap());
        let k = Wavenumber::Physical(c64(6.0, 4.0));
        let d = derivative_identities(cache.clone(), k, 0.37, 1e-3, Truncation::Fixed(4)).unwrap();
        assert!(d.passed(), "{d:?}");
        let f = factorial_bounds(cache.clone(), k, Truncation::Fixed(4)).unwrap();
        assert!(f.passed(), "{f:?}");
        let c = composition_identities(cache.clone(), k, 0.61, 6).unwrap();
        assert!(c.passed(), "{c:?}");
        let b = eigen_bc_identity(cache.clone(), k, Truncation::Adaptive).unwrap();
        assert!(b.passed(), "{b:?}");
        let s = asymptotic_sandwich(cache, &BoundaryConditions::periodic(), 2.0).unwrap();
        assert!(s.passed(), "{s:?}");
    }
}
