//! Boundary conditions, Boundary Case classification and the
//! characteristic function Δ(k) on the three domains.
//!
//! Δ is assembled from J-form accumulation values so that no unbounded
//! exponential is formed: on the interval, Δ = 2i(𝔞Ξ + Σ𝔠ₙ𝒞ₙ + Σ𝔰ₙ𝒮ₙ)
//! with 𝒞ₙ = Ξ𝓒ₙ, 𝒮ₙ = Ξ𝓢ₙ the script values over (x_l, x_r).

use crate::accum::{AccumSeries, Family};
use crate::coefficients::{DispersionCache, DomainKind, Wavenumber};
use crate::error::{Result, UtmError};
use crate::{C64, I};

/// Relative tolerance of the exact-algebra zero tests.
pub const ZERO_TOL: f64 = 1e-12;
/// Relative tolerance of the Case 4 non-degeneracy test, which involves
/// differentiated coefficient data.
pub const CASE4_TOL: f64 = 1e-8;

/// Boundary data of the three problems.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryConditions {
    WholeLine,
    /// a₀q(x_l) + a₁q_x(x_l) = f₀(t).
    HalfLine { a0: C64, a1: C64 },
    /// Rows (a_{j1}, a_{j2}, b_{j1}, b_{j2}) acting on
    /// (q(x_l), q_x(x_l), q(x_r), q_x(x_r)).
    FiniteInterval { rows: [[C64; 4]; 2] },
}

impl BoundaryConditions {
    pub fn half_line(a0: C64, a1: C64) -> Result<Self> {
        if a0 == C64::new(0.0, 0.0) && a1 == C64::new(0.0, 0.0) {
            return Err(UtmError::BoundaryRank);
        }
        Ok(BoundaryConditions::HalfLine { a0, a1 })
    }

    pub fn interval(rows: [[C64; 4]; 2]) -> Result<Self> {
        let bc = BoundaryConditions::FiniteInterval { rows };
        let scale = rows.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        let big = (1..=4)
            .flat_map(|i| ((i + 1)..=4).map(move |j| (i, j)))
            .map(|(i, j)| bc.minor(i, j).norm())
            .fold(0.0, f64::max);
        if scale == 0.0 || big <= ZERO_TOL * scale * scale {
            return Err(UtmError::BoundaryRank);
        }
        Ok(bc)
    }

    /// Real-valued convenience constructor for the interval.
    pub fn interval_real(rows: [[f64; 4]; 2]) -> Result<Self> {
        let c = |r: [f64; 4]| r.map(|v| C64::new(v, 0.0));
        Self::interval([c(rows[0]), c(rows[1])])
    }

    pub fn dirichlet() -> Self {
        Self::interval_real([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]).unwrap()
    }

    pub fn neumann() -> Self {
        Self::interval_real([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]).unwrap()
    }

    pub fn periodic() -> Self {
        Self::interval_real([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]).unwrap()
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            BoundaryConditions::WholeLine => DomainKind::WholeLine,
            BoundaryConditions::HalfLine { .. } => DomainKind::HalfLine,
            BoundaryConditions::FiniteInterval { .. } => DomainKind::FiniteInterval,
        }
    }

    /// (a:b)_{i,j}, columns counted from 1. Zero off the interval.
    pub fn minor(&self, i: usize, j: usize) -> C64 {
        match self {
            BoundaryConditions::FiniteInterval { rows } => {
                rows[0][i - 1] * rows[1][j - 1] - rows[0][j - 1] * rows[1][i - 1]
            }
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Row j (0-based) of the interval matrix.
    pub fn row(&self, j: usize) -> [C64; 4] {
        match self {
            BoundaryConditions::FiniteInterval { rows } => rows[j],
            _ => [C64::new(0.0, 0.0); 4],
        }
    }

    fn minor_scale(&self) -> f64 {
        (1..=4)
            .flat_map(|i| ((i + 1)..=4).map(move |j| (i, j)))
            .map(|(i, j)| self.minor(i, j).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Case4,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCase {
    pub case: Case,
    pub regular: bool,
    pub warning: Option<String>,
}

/// Derived boundary constants m_𝔠₀, m_𝔠₁, m_𝔰, 𝔲₊.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConstants {
    pub m_c0: C64,
    pub m_c1: C64,
    pub m_s: C64,
    pub u_plus: C64,
    pub u_minus: C64,
}

pub fn boundary_constants(bc: &BoundaryConditions, cache: &DispersionCache) -> Result<BoundaryConstants> {
    let (xl, xr) = match cache.profile().domain {
        d if d.kind == DomainKind::FiniteInterval => (d.x_l.unwrap(), d.x_r.unwrap()),
        _ => return Err(UtmError::Argument("boundary constants need a finite interval".into())),
    };
    let (ml, mr) = (cache.mu(xl), cache.mu(xr));
    let (ul, ur) = (cache.ufrak(xl), cache.ufrak(xr));
    Ok(BoundaryConstants {
        m_c0: bc.minor(1, 4) / ml - bc.minor(2, 3) / mr,
        m_c1: bc.minor(1, 4) / ml + bc.minor(2, 3) / mr,
        m_s: bc.minor(1, 3) / (ml * mr),
        u_plus: ur + ul,
        u_minus: ur - ul,
    })
}

/// Applies the four-case decision tree.
pub fn classify(bc: &BoundaryConditions, cache: &DispersionCache) -> Result<BoundaryCase> {
    if bc.kind() != DomainKind::FiniteInterval {
        return Err(UtmError::Argument("classification applies to the finite interval".into()));
    }
    let scale = bc.minor_scale();
    if scale == 0.0 {
        return Err(UtmError::BoundaryRank);
    }
    let k = boundary_constants(bc, cache)?;
    let (xl, xr) = cache.window();
    let inv = (1.0 / cache.mu(xl).norm()).max(1.0 / cache.mu(xr).norm());
    let zero = |v: C64, s: f64| v.norm() <= ZERO_TOL * s;
    let out = |case, regular| Ok(BoundaryCase { case, regular, warning: None });
    if !zero(bc.minor(2, 4), scale) {
        return out(Case::Case1, true);
    }
    if !zero(k.m_c0, scale * inv) {
        return out(Case::Case2, true);
    }
    if zero(k.m_c1, scale * inv) {
        if !zero(bc.minor(1, 3), scale) {
            let regular = zero(bc.minor(1, 2), scale) && zero(bc.minor(3, 4), scale);
            return out(Case::Case3, regular);
        }
        return out(Case::Unsupported, false);
    }
    let u_scale = k.u_plus.norm().max(1.0);
    let d = k.m_c1 * k.u_plus - k.m_s * 8.0;
    let d_scale = (k.m_c1.norm() * u_scale).max(8.0 * k.m_s.norm());
    if d.norm() <= CASE4_TOL * d_scale {
        return Ok(BoundaryCase {
            case: Case::Unsupported,
            regular: false,
            warning: Some(format!("m_c1·u+ − 8·m_s = {d:.3e} is numerically zero; case left undecided")),
        });
    }
    out(Case::Case4, false)
}

/// Endpoint data read off a series that spans the whole mesh.
struct Ends {
    omega_l: C64,
    omega_r: C64,
    sbn_l: C64,
    sbn_r: C64,
    beta_l: C64,
    beta_r: C64,
    kfac: C64,
}

fn ends(series: &AccumSeries) -> Ends {
    let s = &series.sweep;
    let last = s.last();
    Ends {
        omega_l: s.local[0].omega,
        omega_r: s.local[last].omega,
        sbn_l: s.local[0].sqrt_beta_n,
        sbn_r: s.local[last].sqrt_beta_n,
        beta_l: s.class.samples[0].beta,
        beta_r: s.class.samples[last].beta,
        kfac: s.k.value(),
    }
}

/// Δ/(2iΞ) = 𝔞 + Σ𝔠ₙ𝓒ₙ + Σ𝔰ₙ𝓢ₙ, returned as (𝔞, Σ𝔠ₙ𝒞ₙ + Σ𝔰ₙ𝒮ₙ, Ξ).
pub fn delta_fi_parts(bc: &BoundaryConditions, fwd: &AccumSeries) -> Result<(C64, C64, C64)> {
    if fwd.family != Family::CsForward {
        return Err(UtmError::Argument("Δ on the interval needs the forward C/S family".into()));
    }
    let e = ends(fwd);
    let last = fwd.sweep.last();
    let (m12, m13, m14, m23, m24, m34) =
        (bc.minor(1, 2), bc.minor(1, 3), bc.minor(1, 4), bc.minor(2, 3), bc.minor(2, 4), bc.minor(3, 4));
    let a = (e.beta_r * m12 + e.beta_l * m34) / (e.kfac * e.sbn_l * e.sbn_r);
    let mut sum = C64::new(0.0, 0.0);
    for n in 0..=fwd.order() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let cn = m14 * sign / e.omega_l - m23 / e.omega_r;
        let sn = m24 * sign + m13 / (e.omega_l * e.omega_r);
        sum += cn * fwd.script_c(n, last) + sn * fwd.script_s(n, last);
    }
    Ok((a, sum, fwd.sweep.phase[last].exp()))
}

/// Δ(k) on the finite interval from a forward series over (x_l, x_r).
pub fn delta_fi(bc: &BoundaryConditions, fwd: &AccumSeries) -> Result<C64> {
    let (a, sum, xi) = delta_fi_parts(bc, fwd)?;
    Ok(I * 2.0 * (a * xi + sum))
}

/// Δ(k) on the half line from the 𝓔 tail family.
pub fn delta_hl(bc: &BoundaryConditions, tail: &AccumSeries) -> Result<C64> {
    let BoundaryConditions::HalfLine { a0, a1 } = *bc else {
        return Err(UtmError::Argument("half-line Δ needs half-line boundary data".into()));
    };
    if tail.family != Family::ETail {
        return Err(UtmError::Argument("half-line Δ needs the E tail family".into()));
    }
    let omega_l = tail.sweep.local[0].omega;
    let mut s = C64::new(0.0, 0.0);
    for n in 0..=tail.order() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += (I * a0 * sign / omega_l - a1) * tail.e(n, 0);
    }
    Ok(s * 2.0)
}

/// Δ(k) on the whole line, Σ 𝓔_{2n}^{(−∞,∞)}, split at the flattened
/// point `split`.
pub fn delta_wl(tilde: &AccumSeries, tail: &AccumSeries, split: usize) -> Result<C64> {
    if tilde.family != Family::ETilde || tail.family != Family::ETail {
        return Err(UtmError::Argument("whole-line Δ needs the E-tilde and E tail families".into()));
    }
    let order = tilde.order().max(tail.order());
    let mut s = C64::new(0.0, 0.0);
    for n in (0..=order).step_by(2) {
        for l in 0..=n {
            s += tilde.e(n - l, split) * tail.e(l, split);
        }
    }
    Ok(s)
}

/// Leading large-k term 𝔟₀(k) of Δ.
pub fn b0_asymptotic(
    k: Wavenumber,
    case: Option<&BoundaryCase>,
    bc: &BoundaryConditions,
    cache: &DispersionCache,
) -> Result<C64> {
    match bc {
        BoundaryConditions::WholeLine => Ok(C64::new(1.0, 0.0)),
        BoundaryConditions::HalfLine { a0, a1 } => {
            let (xl, _) = cache.window();
            let omega_l = k.local(&cache.sample(xl)).omega;
            Ok((I * a0 / omega_l - a1) * 2.0)
        }
        BoundaryConditions::FiniteInterval { .. } => {
            let case = case.ok_or_else(|| UtmError::Case("finite interval needs a boundary case".into()))?;
            let c = boundary_constants(bc, cache)?;
            let kv = k.value();
            match case.case {
                Case::Case1 => Ok(-bc.minor(2, 4)),
                Case::Case2 => Ok(I * c.m_c0 / kv),
                Case::Case3 => Ok(-c.m_s / (kv * kv)),
                Case::Case4 => Ok((c.m_c1 * c.u_plus - c.m_s * 8.0) / (kv * kv * 8.0)),
                Case::Unsupported => Err(UtmError::Case("no leading term for an unsupported case".into())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accum::{Mesh, Truncation};
    use crate::c64;
    use crate::coefficients::{CoefficientProfile, Domain};
    use std::sync::Arc;

    fn unit() -> Arc<DispersionCache> {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), Domain::interval(0.0, 1.0));
        Arc::new(DispersionCache::new(&p).unwrap())
    }

    #[test]
    fn classical_cases() {
        let c = unit();
        let d = classify(&BoundaryConditions::dirichlet(), &c).unwrap();
        assert_eq!((d.case, d.regular), (Case::Case3, true));
        assert_eq!(classify(&BoundaryConditions::periodic(), &c).unwrap().case, Case::Case2);
        assert_eq!(classify(&BoundaryConditions::neumann(), &c).unwrap().case, Case::Case1);
        let m = boundary_constants(&BoundaryConditions::periodic(), &c).unwrap();
        assert!((m.m_c0 - c64(-2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_rejected() {
        assert_eq!(
            BoundaryConditions::interval_real([[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]]),
            Err(UtmError::BoundaryRank)
        );
        assert!(BoundaryConditions::half_line(c64(0.0, 0.0), c64(0.0, 0.0)).is_err());
    }

    #[test]
    fn dirichlet_closed_form() {
        let c = unit();
        let mesh = Mesh::over_window(c, &[]).unwrap();
        let k = c64(4.0, 3.0);
        let fwd = mesh.sweep(Wavenumber::Physical(k)).unwrap().series(Family::CsForward, Truncation::Adaptive);
        let d = delta_fi(&BoundaryConditions::dirichlet(), &fwd).unwrap();
        let exact = I * 2.0 * (I * k).exp() * k.sin() / (k * k);
        assert!((d - exact).norm() <= 1e-12 * exact.norm());
    }
}
