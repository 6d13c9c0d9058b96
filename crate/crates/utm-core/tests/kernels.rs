//! Closed-form and self-consistency checks of Ψ, the boundary kernels and
//! the data transforms.

use std::f64::consts::PI;
use std::sync::Arc;

use utm_core::accum::{Mesh, Truncation};
use utm_core::coefficients::{constant, func, CoefficientProfile, Domain, DispersionCache, Func, Preset, Wavenumber};
use utm_core::delta::BoundaryConditions;
use utm_core::kernels::{fm, fm_frak, phi0, phi_f_deformed, KernelContext, ProblemData};
use utm_core::{c64, C64, I};

fn unit(domain: Domain) -> Arc<DispersionCache> {
    let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), domain);
    Arc::new(DispersionCache::new(&p).unwrap())
}

fn ctx(cache: Arc<DispersionCache>, grid: &[f64], k: C64, bc: &BoundaryConditions) -> KernelContext {
    let mesh = Mesh::over_window(cache, grid).unwrap();
    KernelContext::new(&mesh, Wavenumber::Physical(k), bc, Truncation::Adaptive).unwrap()
}

/// Position of breakpoint x in the per-breakpoint output of a transform.
fn break_pos(c: &KernelContext, x: f64) -> usize {
    let i = c.sweep.index_of(x).unwrap();
    c.sweep.class.break_index.iter().position(|&j| j == i).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn whole_line_psi_is_free_space_kernel() {
    let k = c64(3.0, 2.0);
    let grid = [-1.3, -0.2, 0.4, 2.5];
    let c = ctx(unit(Domain::whole_line()), &grid, k, &BoundaryConditions::WholeLine);
    for &x in &grid {
        for &y in &grid {
            let exact = (I * k * (x - y).abs()).exp();
            assert!((c.psi(x, y).unwrap() - exact).norm() < 1e-12, "Ψ({x},{y})");
        }
        assert_eq!(c.boundary_kernel(0, x).unwrap(), c64(0.0, 0.0));
    }
}

#[test]
fn half_line_dirichlet_images() {
    let k = c64(2.5, 1.5);
    let grid = [0.3, 0.8, 1.7];
    let bc = BoundaryConditions::half_line(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap();
    let c = ctx(unit(Domain::half_line(0.0)), &grid, k, &bc);
    for &x in &grid {
        for &y in &grid {
            let (lo, hi) = if y < x { (y, x) } else { (x, y) };
            let exact = (I * k * hi).exp() * (k * lo).sin() * 4.0 / k;
            let got = c.psi(x, y).unwrap();
            assert!(rel(got, exact) < 1e-11, "Ψ({x},{y}) = {got}, expected {exact}");
            assert!(rel(c.psi(y, x).unwrap(), got) < 1e-10, "symmetry at ({x},{y})");
        }
        let b0 = (I * k * x).exp() * 4.0;
        assert!(rel(c.boundary_kernel(0, x).unwrap(), b0) < 1e-12);
    }
    assert!(c.boundary_kernel(1, 0.3).is_err());
}

#[test]
fn interval_dirichlet_boundary_kernels() {
    let k = c64(4.0, 2.0);
    let grid = [0.15, 0.5, 0.85];
    let c = ctx(unit(Domain::interval(0.0, 1.0)), &grid, k, &BoundaryConditions::dirichlet());
    let xi = (I * k).exp();
    for &x in &grid {
        let b0 = xi * (k * (1.0 - x)).sin() * 4.0 / k;
        let b1 = xi * (k * x).sin() * 4.0 / k;
        assert!(rel(c.boundary_kernel(0, x).unwrap(), b0) < 1e-11, "𝓑₀({x})");
        assert!(rel(c.boundary_kernel(1, x).unwrap(), b1) < 1e-11, "𝓑₁({x})");
    }
}

#[test]
fn interval_symmetry_iff_balanced_minors() {
    let k = c64(3.0, 2.5);
    let grid = [0.2, 0.7];
    let cache = unit(Domain::interval(0.0, 1.0));
    // β ≡ 1, so symmetry holds iff (a:b)₁₂ = (a:b)₃₄.
    let sym = ctx(cache.clone(), &grid, k, &BoundaryConditions::dirichlet());
    let (a, b) = (sym.psi(0.2, 0.7).unwrap(), sym.psi(0.7, 0.2).unwrap());
    assert!(rel(a, b) < 1e-10, "Dirichlet Ψ should be symmetric: {a} vs {b}");
    let robin = BoundaryConditions::interval_real([[1.0, 0.5, 0.0, 0.0], [0.0, 0.0, 1.0, 0.5]]).unwrap();
    let c = ctx(cache.clone(), &grid, k, &robin);
    assert!(rel(c.psi(0.2, 0.7).unwrap(), c.psi(0.7, 0.2).unwrap()) < 1e-10);
    let skew = BoundaryConditions::interval_real([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]).unwrap();
    let c = ctx(cache, &grid, k, &skew);
    let (a, b) = (c.psi(0.2, 0.7).unwrap(), c.psi(0.7, 0.2).unwrap());
    assert!(rel(a, b) > 1e-3, "(a:b)₁₂ = 1, (a:b)₃₄ = 0 must break symmetry: {a} vs {b}");
}

#[test]
fn psi_continuous_across_diagonal() {
    let cache = Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap());
    let (x, e) = (0.43, 1e-9);
    let c = ctx(cache, &[x - e, x, x + e], c64(6.0, 4.0), &BoundaryConditions::periodic());
    let left = c.psi(x, x - e).unwrap();
    let right = c.psi(x, x + e).unwrap();
    assert!((left - right).norm() <= 1e-7 * left.norm(), "{left} vs {right}");
}

#[test]
fn phi0_box_on_whole_line() {
    let k = c64(2.0, 1.0);
    let xs = [-2.0, -1.0, -0.4, 0.3, 1.0, 1.8];
    let c = ctx(unit(Domain::whole_line()), &xs, k, &BoundaryConditions::WholeLine);
    let data = ProblemData::default().with_q0(func(|x| if x.abs() < 1.0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) }));
    let phi = phi0(&c, &data).unwrap();
    let ik = I * k;
    for &x in &xs {
        let exact = if x.abs() <= 1.0 {
            ((ik * (x + 1.0)).exp() - 1.0 + (ik * (1.0 - x)).exp() - 1.0) / ik
        } else {
            let d = x.abs();
            ((ik * (d + 1.0)).exp() - (ik * (d - 1.0)).exp()) / ik
        };
        let got = phi[break_pos(&c, x)];
        assert!((got - exact).norm() < 1e-10, "Φ₀({x}) = {got}, expected {exact}");
    }
    let zero = phi0(&c, &ProblemData::default()).unwrap();
    assert!(zero.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn phi0_cgl_refinement_and_linearity() {
    let cache = Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap());
    let xs = [0.25, 0.5, 0.75];
    let k = Wavenumber::Physical(c64(7.0, 5.0));
    let bc = BoundaryConditions::periodic();
    let sine: Func = func(|x| c64((2.0 * PI * x).sin(), 0.0));
    let data = ProblemData::default().with_q0(sine.clone());
    let coarse_mesh = Mesh::over_window(cache.clone(), &xs).unwrap();
    let fine_mesh = Mesh::over_window(cache.clone(), &xs).unwrap().with_step_parameter(0.5);
    let coarse = KernelContext::new(&coarse_mesh, k, &bc, Truncation::Adaptive).unwrap();
    let fine = KernelContext::new(&fine_mesh, k, &bc, Truncation::Adaptive).unwrap();
    let (pc, pf) = (phi0(&coarse, &data).unwrap(), phi0(&fine, &data).unwrap());
    for &x in &xs {
        let (a, b) = (pc[break_pos(&coarse, x)], pf[break_pos(&fine, x)]);
        assert!(rel(a, b) < 1e-8, "Φ₀({x}): {a} vs {b}");
    }
    let other: Func = func(|x| c64(x * x, -x));
    let sum = ProblemData::default().with_q0(func(move |x| sine(x) + other(x)));
    let ps = phi0(&coarse, &sum).unwrap();
    let po = phi0(&coarse, &ProblemData::default().with_q0(func(|x| c64(x * x, -x)))).unwrap();
    for i in 0..ps.len() {
        assert!((ps[i] - pc[i] - po[i]).norm() <= 1e-12 * ps[i].norm().max(1.0));
    }
}

#[test]
fn boundary_time_transforms() {
    let k = c64(3.0, 0.0) * (I * 3.0 * PI / 16.0).exp();
    let k2 = k * k;
    let t = 0.5;
    let decay = (-k2 * t).exp();
    let c = c64(1.5, -0.5);
    let got = fm_frak(k2, t, &constant(c), &constant(c64(0.0, 0.0))).unwrap();
    assert!(rel(got, -c * decay / k2) < 1e-12);
    let lin = fm_frak(k2, t, &func(|s| c64(s, 0.0)), &constant(c64(1.0, 0.0))).unwrap();
    assert!(rel(lin, -(1.0 - decay) / (k2 * k2)) < 1e-12);
    let sin: Func = func(|s| c64(s.sin(), 0.0));
    let got = fm_frak(k2, t, &sin, &func(|s| c64(s.cos(), 0.0))).unwrap();
    // 𝔉ₘ = F_m − e^{k²t}f_m(t)/k² by parts.
    let direct = fm(k2, t, &sin).unwrap() * decay - sin(t) / k2;
    assert!(rel(got, direct) < 1e-10, "{got} vs {direct}");
    let fc = fm(k2, t, &constant(c)).unwrap();
    assert!(rel(fc, c * ((k2 * t).exp() - 1.0) / k2) < 1e-10);
}

#[test]
fn phi_f_matches_undeformed_form() {
    let k = c64(4.0, 3.0);
    let k2 = k * k;
    let t = 0.3;
    let xs = [0.2, 0.5, 0.9];
    let c = ctx(unit(Domain::interval(0.0, 1.0)), &xs, k, &BoundaryConditions::dirichlet());
    let f = |y: f64, s: f64| c64((-s).exp() * (PI * y).sin(), 0.0);
    let data = ProblemData::default().with_forcing(Arc::new(f), None);
    let deformed = phi_f_deformed(&c, t, &data).unwrap();
    // f̃ = ∫₀ᵗ e^{k²s}f ds in closed form; the undeformed transform uses
    // f̃e^{−k²t}, and 𝔣 = f̃ − e^{k²t}f(·,t)/k².
    let tilde_scaled = ((-t) * c64(1.0, 0.0)).exp() - (-k2 * t).exp();
    let dens_tilde: Vec<C64> = (0..c.sweep.len())
        .map(|i| {
            let y = c.sweep.class.x(i);
            c64((PI * y).sin(), 0.0) * tilde_scaled / (k2 - 1.0)
        })
        .collect();
    let dens_now: Vec<C64> = (0..c.sweep.len()).map(|i| f(c.sweep.class.x(i), t) / k2).collect();
    let out = c.transform(&[&dens_tilde, &dens_now]);
    for &x in &xs {
        let p = break_pos(&c, x);
        let undeformed = out[0][p];
        let got = deformed[p] + out[1][p];
        assert!((got - undeformed).norm() <= 1e-9 * undeformed.norm().max(1e-3), "Φ_f({x}): {got} vs {undeformed}");
    }
    assert!(phi_f_deformed(&c, t, &ProblemData::default()).unwrap().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn time_weights_split_off_non_decaying_terms() {
    // p(s) = 1 + s: ∫₀ᵗ e^{−k²(t−s)} p(s) ds = p(t)/k² − p'(t)/k⁴ − E/k² + E/k⁴
    // with E = e^{−k²t}. The decaying part is the last two terms.
    use utm_core::kernels::TimeWeights;
    for (k2, t) in [(c64(3.0, 40.0), 0.3), (c64(-20.0, 90.0), 0.05), (c64(400.0, 10.0), 1.2)] {
        let tw = TimeWeights::new(k2, t).unwrap();
        let vals: Vec<C64> = tw.nodes.iter().map(|&s| c64(1.0 + s, 0.0)).collect();
        let e = tw.decay;
        let decaying = -e / k2 + e / (k2 * k2);
        let full = c64(1.0 + t, 0.0) / k2 - 1.0 / (k2 * k2) + decaying;
        assert!((tw.apply(&vals) - full).norm() < 1e-14 * full.norm().max(1.0), "{k2} {t}");
        assert!((tw.apply_decaying(&vals) - decaying).norm() < 1e-14, "{k2} {t}");
    }
}
