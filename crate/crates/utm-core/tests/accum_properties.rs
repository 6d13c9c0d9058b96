//! Property tests for the accumulation functions: derivative identities,
//! factorial bounds, composition identities, the eigen boundary identity,
//! agreement with the direct simplex quadrature and decay in k.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use utm_core::accum::{
    accum_cs_forward, accum_e_tail, simplex_oracle, Family, Mesh, OracleFamily, SimplexOracleSpec, Truncation,
};
use utm_core::coefficients::{DispersionCache, Domain, Preset, Wavenumber};
use utm_core::identities::{composition_identities, derivative_identities, eigen_bc_identity, factorial_bounds};
use utm_core::{c64, C64};

fn cache(preset: Preset, domain: Domain) -> Arc<DispersionCache> {
    Arc::new(DispersionCache::new(&preset.profile(domain)).unwrap())
}

fn bump(center: f64, width: f64) -> Preset {
    Preset::GaussianBump { amplitude: 0.6, center, width, gamma: c64(0.0, 0.0) }
}

/// The profiles exercised: a complex interval profile, a real interval
/// bump, a half-line bump and a whole-line bump.
fn profile(which: usize) -> Arc<DispersionCache> {
    match which {
        0 => cache(Preset::Cgl, Domain::interval(0.0, 1.0)),
        1 => cache(bump(0.4, 0.15), Domain::interval(0.0, 1.0)),
        2 => cache(bump(1.5, 0.5), Domain::half_line(0.0)),
        _ => cache(bump(0.3, 0.6), Domain::whole_line()),
    }
}

/// A point of the exterior region {|k| > r, θ₀ < arg k < π − θ₀}.
fn exterior_k(c: &DispersionCache, modulus: f64, frac: f64) -> Wavenumber {
    let (r, theta0) = c.contour_params(2.0).unwrap();
    let angle = theta0 + frac * (PI - 2.0 * theta0);
    Wavenumber::Physical(C64::from_polar(r + modulus, angle))
}

/// A point of the contour itself: the arc or one of the two rays.
fn contour_k(c: &DispersionCache, piece: usize, s: f64, frac: f64) -> Wavenumber {
    let (r, theta0) = c.contour_params(2.0).unwrap();
    let k = match piece {
        0 => C64::from_polar(r, theta0 + frac * (PI - 2.0 * theta0)),
        1 => C64::from_polar(r + s, theta0),
        _ => C64::from_polar(r + s, PI - theta0),
    };
    Wavenumber::Physical(k)
}

/// A random interior point, kept away from the window edges.
fn interior(c: &DispersionCache, frac: f64) -> f64 {
    let (a, b) = c.window();
    a + (b - a) * (0.05 + 0.9 * frac)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn derivative_identities_hold(which in 0usize..4, m in 0.0f64..30.0, frac in 0.0f64..1.0, xf in 0.0f64..1.0) {
        let c = profile(which);
        let k = exterior_k(&c, m, frac);
        let x = interior(&c, xf);
        let check = derivative_identities(c, k, x, 1e-3, Truncation::Fixed(4)).unwrap();
        prop_assert!(check.passed(), "{check:?}");
    }

    #[test]
    fn factorial_bound_on_contour(which in 0usize..4, piece in 0usize..3, s in 0.0f64..40.0, frac in 0.0f64..1.0) {
        let c = profile(which);
        let check = factorial_bounds(c.clone(), contour_k(&c, piece, s, frac), Truncation::Fixed(5)).unwrap();
        prop_assert!(check.passed(), "{check:?}");
    }

    #[test]
    fn composition_identities_hold(which in 0usize..4, m in 0.0f64..30.0, frac in 0.0f64..1.0, xf in 0.0f64..1.0, n in 0usize..=6) {
        let c = profile(which);
        let k = exterior_k(&c, m, frac);
        let x = interior(&c, xf);
        // The half-line splitting is checked to N ≤ 4.
        let n = if which == 2 { n.min(4) } else { n };
        let check = composition_identities(c, k, x, n).unwrap();
        prop_assert!(check.passed(), "{check:?}");
    }

    #[test]
    fn eigen_bc_identity_holds(which in 0usize..2, m in 0.0f64..20.0, frac in 0.0f64..1.0) {
        let c = profile(which);
        let check = eigen_bc_identity(c.clone(), exterior_k(&c, m, frac), Truncation::Adaptive).unwrap();
        prop_assert!(check.passed(), "{check:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn ode_path_matches_simplex_quadrature(a in 0.0f64..0.4, len in 0.2f64..0.6, kr in 2.0f64..8.0, ki in 1.0f64..6.0) {
        let c = profile(0);
        let b = a + len;
        let k = Wavenumber::Physical(c64(kr, ki));
        let fwd = accum_cs_forward(c.clone(), k, a, b, &[], Truncation::Fixed(3)).unwrap();
        let last = fwd.sweep.last();
        let spec = SimplexOracleSpec::default();
        for n in 0..=3 {
            for (fam, got) in [(OracleFamily::ScriptC, fwd.script_c(n, last)), (OracleFamily::ScriptS, fwd.script_s(n, last))] {
                let want = simplex_oracle(&c, k, a, b, n, fam, spec).unwrap();
                // Level n is bounded by (L/2)ⁿ/n!, which sets the scale.
                let scale = want.norm().max(1e-3 * 0.1f64.powi(n as i32));
                prop_assert!((got - want).norm() <= 1e-6 * scale, "n={n} {fam:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn e_tail_matches_simplex_quadrature() {
    let c = cache(bump(1.0, 0.3), Domain::half_line(0.0).with_truncation(3.0));
    let k = Wavenumber::Physical(c64(3.0, 4.0));
    let tail = accum_e_tail(c.clone(), k, &[], Truncation::Fixed(2)).unwrap();
    let (a, b) = c.window();
    let spec = SimplexOracleSpec::default();
    for n in 0..=2 {
        let want = simplex_oracle(&c, k, a, b, n, OracleFamily::E, spec).unwrap();
        let got = tail.e(n, 0);
        assert!((got - want).norm() <= 1e-6 * want.norm().max(1e-4), "𝓔{n}: {got} vs {want}");
    }
}

#[test]
fn levels_decay_along_a_ray() {
    let c = profile(0);
    let (_, theta0) = c.contour_params(2.0).unwrap();
    let mesh = Mesh::over_window(c, &[]).unwrap();
    for n in 1..=3 {
        let mut prev = f64::INFINITY;
        for modulus in [10.0, 20.0, 40.0] {
            let k = Wavenumber::Physical(C64::from_polar(modulus, 0.5 * PI + 0.5 * (0.5 * PI - theta0)));
            let s = mesh.sweep(k).unwrap().series(Family::CsForward, Truncation::Fixed(3));
            let last = s.sweep.last();
            let size = s.script_c(n, last).norm().max(s.script_s(n, last).norm());
            assert!(size < prev, "level {n} at |k| = {modulus}: {size} ≥ {prev}");
            prev = size;
        }
    }
}
