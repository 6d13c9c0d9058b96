//! Eigenvalue search against the finite-difference matrix oracle, plus
//! the evenness of Δ in the reduced wavenumber.

use std::sync::Arc;

use utm_core::accum::{Family, Mesh, Truncation};
use utm_core::coefficients::{DispersionCache, Domain, Preset, Wavenumber};
use utm_core::delta::{delta_fi, BoundaryConditions};
use utm_core::eigen::{lowest_eigenvalues, paired_truncation, CharacteristicFunction, EigenOptions};
use utm_core::oracle::matrix_eigs;
use utm_core::C64;

fn cgl() -> Arc<DispersionCache> {
    Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap())
}

fn nearest(values: &[C64], z: C64) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - z).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

#[test]
fn cgl_matches_matrix_oracle_one_to_one() {
    let cache = cgl();
    let bc = BoundaryConditions::periodic();
    let pairs = lowest_eigenvalues(cache.clone(), &bc, 7, &EigenOptions::default()).unwrap();
    let oracle: Vec<C64> = matrix_eigs(cache.profile(), &bc, 1024).unwrap().iter().map(|e| e.lambda).collect();
    let mut used = Vec::new();
    for p in &pairs {
        assert!(p.passes(1e-6), "λ = {} has residual {}", p.lambda, p.residual);
        let (i, d) = nearest(&oracle, p.lambda);
        assert!(d <= 1e-3 * p.lambda.norm().max(1.0), "λ = {} is {d} from the oracle", p.lambda);
        assert!(!used.contains(&i), "two eigenvalues matched oracle entry {i}");
        used.push(i);
    }
}

#[test]
fn truncation_levels_approach_oracle() {
    let cache = cgl();
    let bc = BoundaryConditions::periodic();
    let oracle: Vec<C64> = matrix_eigs(cache.profile(), &bc, 1024).unwrap().iter().map(|e| e.lambda).collect();
    let targets: Vec<C64> = lowest_eigenvalues(cache.clone(), &bc, 5, &EigenOptions::default())
        .unwrap()
        .iter()
        .skip(1)
        .map(|p| oracle[nearest(&oracle, p.lambda).0])
        .collect();
    let mut prev = vec![f64::INFINITY; targets.len()];
    for n in 0..=2 {
        let opts = EigenOptions { truncation: paired_truncation(n), ..EigenOptions::default() };
        let found: Vec<C64> = lowest_eigenvalues(cache.clone(), &bc, 5, &opts).unwrap().iter().map(|p| p.lambda).collect();
        for (j, t) in targets.iter().enumerate() {
            let d = nearest(&found, *t).1;
            assert!(d < prev[j], "N = {n}: target {t} moved away ({d} ≥ {})", prev[j]);
            prev[j] = d;
        }
    }
}

#[test]
fn delta_is_even_in_reduced_wavenumber() {
    let cache = cgl();
    let bc = BoundaryConditions::periodic();
    let pairs = lowest_eigenvalues(cache.clone(), &bc, 5, &EigenOptions::default()).unwrap();
    let f = CharacteristicFunction::new(cache.clone(), &bc, Truncation::Adaptive).unwrap();
    let mesh = Mesh::over_window(cache, &[]).unwrap();
    let delta = |w: Wavenumber| delta_fi(&bc, &mesh.sweep(w).unwrap().series(Family::CsForward, Truncation::Adaptive)).unwrap();
    for p in pairs.iter().skip(1) {
        let Wavenumber::Reduced(k) = f.wavenumber(p.lambda) else { panic!("CGL has constant γ") };
        let (plus, minus) = (delta(Wavenumber::Reduced(k)), delta(Wavenumber::Reduced(-k)));
        let scale = delta(Wavenumber::Reduced(k * 1.01)).norm();
        assert!(minus.norm() <= 10.0 * plus.norm() + 1e-9 * scale, "Δ̃(±{k}): {plus}, {minus}");
    }
}
