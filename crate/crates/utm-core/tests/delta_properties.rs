//! Property tests for Δ(k) and the boundary classification.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use utm_core::accum::{Family, Mesh, Truncation};
use utm_core::coefficients::{CoefficientProfile, DispersionCache, Domain, Preset, Wavenumber};
use utm_core::delta::{classify, delta_fi, delta_hl, delta_wl, BoundaryConditions, Case};
use utm_core::identities::asymptotic_sandwich;
use utm_core::{c64, C64, I};

fn unit(domain: Domain) -> Arc<DispersionCache> {
    let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), domain);
    Arc::new(DispersionCache::new(&p).unwrap())
}

fn bump_interval() -> Arc<DispersionCache> {
    let p = Preset::GaussianBump { amplitude: 0.6, center: 0.4, width: 0.15, gamma: c64(0.0, 0.0) };
    Arc::new(DispersionCache::new(&p.profile(Domain::interval(0.0, 1.0))).unwrap())
}

/// Uniform random points of the exterior region of the contour.
fn random_ks(c: &DispersionCache, count: usize, seed: u64) -> Vec<C64> {
    let (r, theta0) = c.contour_params(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| C64::from_polar(r + rng.random_range(0.0..30.0), rng.random_range(theta0..PI - theta0)))
        .collect()
}

/// One row set per Boundary Case. The Case 4 rows (1,0,1,0),
/// (0,1,1,−μ_l/μ_r) have (a:b)₂₄ = 0, m_𝔠₀ = 0 and m_𝔠₁, m_𝔰 non-zero.
fn case_rows(cache: &DispersionCache) -> [(Case, BoundaryConditions); 4] {
    let ratio = cache.mu(0.0) / cache.mu(1.0);
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);
    [
        (Case::Case1, BoundaryConditions::interval_real([[1.0, 2.0, 0.0, 0.0], [0.0, 0.0, 1.0, -0.5]]).unwrap()),
        (Case::Case2, BoundaryConditions::periodic()),
        (Case::Case3, BoundaryConditions::dirichlet()),
        (Case::Case4, BoundaryConditions::interval([[one, zero, one, zero], [zero, one, one, -ratio]]).unwrap()),
    ]
}

#[test]
fn constant_coefficient_closed_forms() {
    let fi = unit(Domain::interval(0.0, 1.0));
    let mesh = Mesh::over_window(fi.clone(), &[]).unwrap();
    for k in random_ks(&fi, 100, 1) {
        let fwd = mesh.sweep(Wavenumber::Physical(k)).unwrap().series(Family::CsForward, Truncation::Adaptive);
        let d = delta_fi(&BoundaryConditions::dirichlet(), &fwd).unwrap();
        let exact = I * 2.0 * (I * k).exp() * k.sin() / (k * k);
        assert!((d - exact).norm() <= 1e-12 * exact.norm(), "Dirichlet Δ({k})");
    }
    let hl = unit(Domain::half_line(0.0));
    let mesh = Mesh::over_window(hl.clone(), &[]).unwrap();
    let bcs = [
        (c64(1.0, 0.0), c64(0.0, 0.0)),
        (c64(0.0, 0.0), c64(1.0, 0.0)),
        (c64(1.0, 0.0), c64(1.0, 0.0)),
    ];
    for k in random_ks(&hl, 100, 2) {
        let tail = mesh.sweep(Wavenumber::Physical(k)).unwrap().series(Family::ETail, Truncation::Adaptive);
        for (a0, a1) in bcs {
            let d = delta_hl(&BoundaryConditions::half_line(a0, a1).unwrap(), &tail).unwrap();
            let exact = (I * a0 / k - a1) * 2.0;
            assert!((d - exact).norm() <= 1e-12 * exact.norm(), "half-line Δ({k}) for ({a0}, {a1})");
        }
    }
    let wl = unit(Domain::whole_line());
    let mesh = Mesh::over_window(wl.clone(), &[0.0]).unwrap();
    for k in random_ks(&wl, 100, 3) {
        let sweep = mesh.sweep(Wavenumber::Physical(k)).unwrap();
        let tilde = sweep.series(Family::ETilde, Truncation::Adaptive);
        let tail = sweep.series(Family::ETail, Truncation::Adaptive);
        let d = delta_wl(&tilde, &tail, sweep.index_of(0.0).unwrap()).unwrap();
        assert!((d - 1.0).norm() <= 1e-12, "whole-line Δ({k}) = {d}");
    }
}

#[test]
fn whole_line_delta_is_split_independent() {
    let p = Preset::GaussianBump { amplitude: 0.6, center: 0.3, width: 0.6, gamma: c64(0.0, 0.0) };
    let c = Arc::new(DispersionCache::new(&p.profile(Domain::whole_line())).unwrap());
    let mesh = Mesh::over_window(c.clone(), &[-0.7, 1.1]).unwrap();
    for k in random_ks(&c, 10, 4) {
        let sweep = mesh.sweep(Wavenumber::Physical(k)).unwrap();
        let tilde = sweep.series(Family::ETilde, Truncation::Adaptive);
        let tail = sweep.series(Family::ETail, Truncation::Adaptive);
        let a = delta_wl(&tilde, &tail, sweep.index_of(-0.7).unwrap()).unwrap();
        let b = delta_wl(&tilde, &tail, sweep.index_of(1.1).unwrap()).unwrap();
        assert!((a - b).norm() <= 1e-9 * a.norm(), "Δ({k}): {a} vs {b}");
    }
}

#[test]
fn sandwich_for_every_case() {
    for cache in [unit(Domain::interval(0.0, 1.0)), bump_interval()] {
        for (case, bc) in case_rows(&cache) {
            let class = classify(&bc, &cache).unwrap();
            assert_eq!(class.case, case);
            assert!(class.case != Case::Case4 || !class.regular);
            let check = asymptotic_sandwich(cache.clone(), &bc, 2.0).unwrap();
            assert!(check.passed(), "{case:?}: {check:?}");
        }
    }
    let hl = Preset::GaussianBump { amplitude: 0.6, center: 1.5, width: 0.5, gamma: c64(0.0, 0.0) };
    let hl = Arc::new(DispersionCache::new(&hl.profile(Domain::half_line(0.0))).unwrap());
    let bc = BoundaryConditions::half_line(c64(1.0, 0.0), c64(0.5, 0.0)).unwrap();
    assert!(asymptotic_sandwich(hl, &bc, 2.0).unwrap().passed());
    let wl = Preset::GaussianBump { amplitude: 0.6, center: 0.3, width: 0.6, gamma: c64(0.0, 0.0) };
    let wl = Arc::new(DispersionCache::new(&wl.profile(Domain::whole_line())).unwrap());
    assert!(asymptotic_sandwich(wl, &BoundaryConditions::WholeLine, 2.0).unwrap().passed());
}

#[test]
fn truncation_differences_decrease() {
    let c = Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap());
    let mesh = Mesh::over_window(c.clone(), &[]).unwrap();
    let bc = BoundaryConditions::periodic();
    for k in random_ks(&c, 10, 5) {
        let sweep = mesh.sweep(Wavenumber::Physical(k)).unwrap();
        let deltas: Vec<C64> =
            (0..=7).map(|n| delta_fi(&bc, &sweep.series(Family::CsForward, Truncation::Fixed(n))).unwrap()).collect();
        let floor = 1e-14 * deltas[7].norm();
        for n in 0..6 {
            let (d0, d1) = ((deltas[n] - deltas[n + 1]).norm(), (deltas[n + 1] - deltas[n + 2]).norm());
            if d0 > floor {
                assert!(d1 < d0, "Δ({k}): |Δ{n} − Δ{}| = {d0}, next {d1}", n + 1);
            }
        }
    }
}

fn row_strategy() -> impl Strategy<Value = usize> {
    0usize..4
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn classification_invariant_under_row_operations(
        which in row_strategy(),
        s1 in (0.1f64..5.0, -PI..PI),
        s2 in (0.1f64..5.0, -PI..PI),
        swap in any::<bool>(),
        bumpy in any::<bool>(),
    ) {
        let cache = if bumpy { bump_interval() } else { unit(Domain::interval(0.0, 1.0)) };
        let (_, bc) = case_rows(&cache)[which].clone();
        let base = classify(&bc, &cache).unwrap();
        let (z1, z2) = (C64::from_polar(s1.0, s1.1), C64::from_polar(s2.0, s2.1));
        let (mut r0, mut r1) = (bc.row(0).map(|v| v * z1), bc.row(1).map(|v| v * z2));
        if swap {
            std::mem::swap(&mut r0, &mut r1);
        }
        let got = classify(&BoundaryConditions::interval([r0, r1]).unwrap(), &cache).unwrap();
        prop_assert_eq!((got.case, got.regular), (base.case, base.regular));
    }
}
