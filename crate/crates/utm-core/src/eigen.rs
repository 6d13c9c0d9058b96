//! Finite-interval eigenvalues as roots of the truncated characteristic
//! function, and the matching eigenfunctions.
//!
//! With κ a root of Δ, the eigenvalue is λ = −κ². The search runs in the
//! λ-plane on F(λ) = 𝓀·Δ/(2iΞ), which is even in 𝓀 and therefore an entire
//! function of λ. When γ is constant 𝓀 = √(γ − λ) is the reduced
//! wavenumber; otherwise 𝓀 = k = √(−λ) and the disc |λ| ≤ M_γ holding the
//! branch points is excluded from the search.

use crate::accum::{Family, Mesh, Truncation};
use crate::coefficients::{DispersionCache, DomainKind, Wavenumber};
use crate::delta::{classify, delta_fi_parts, BoundaryConditions, Case};
use crate::error::{Result, UtmError};
use crate::C64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

/// Below this modulus the reduced wavenumber is clamped. F is even in 𝓀,
/// so the clamp changes F by O(𝓀²).
const KAPPA_FLOOR: f64 = 1e-7;

/// Paper-style truncation: Δ_N keeps accumulation levels 0..=2N.
pub fn paired_truncation(n: usize) -> Truncation {
    Truncation::Fixed(2 * n)
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub truncation: Truncation,
    /// Pairs whose residual exceeds this are flagged.
    pub residual_threshold: f64,
    /// Initial phase samples per rectangle edge.
    pub edge_points: usize,
    pub max_depth: usize,
    /// Uniform intervals for the residual check.
    pub residual_grid: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            truncation: Truncation::Adaptive,
            residual_threshold: 1e-6,
            edge_points: 32,
            max_depth: 40,
            residual_grid: 800,
        }
    }
}

/// Rectangle in the λ-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub max_roots: usize,
    pub max_depth: usize,
}

impl SearchRegion {
    pub fn new(re: (f64, f64), im: (f64, f64), max_roots: usize) -> Result<Self> {
        if !(re.0 < re.1 && im.0 < im.1) || [re.0, re.1, im.0, im.1].iter().any(|v| !v.is_finite()) {
            return Err(UtmError::Argument("search rectangle must have positive, finite extent".into()));
        }
        Ok(SearchRegion { re, im, max_roots, max_depth: 40 })
    }

    /// Rectangle holding the first `count` eigenvalue estimates with margin.
    pub fn around_estimates(cache: &DispersionCache, count: usize) -> Result<Self> {
        let (a, b) = cache.window();
        let m1 = cache.mfrak(b) - cache.mfrak(a);
        let p = cache.profile();
        let gamma = (p.gamma)(0.5 * (a + b));
        let top = (count as f64 + 1.5) * PI / m1;
        let reach = (top * top).norm();
        let mut im_max: f64 = 0.0;
        for m in 0..=count + 1 {
            let k = m as f64 * PI / m1;
            im_max = im_max.max((k * k).im.abs());
        }
        let h = 0.25 * reach + im_max + 1.0;
        SearchRegion::new(
            (gamma.re - reach, gamma.re + 0.1 * reach + 1.0),
            (gamma.im - h, gamma.im + h),
            usize::MAX,
        )
    }
}

/// One eigenvalue with its eigenfunction coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    /// Root of Δ in the closed upper half plane.
    pub kappa: C64,
    pub lambda: C64,
    /// Highest accumulation level used.
    pub order: usize,
    pub c_m: C64,
    pub s_m: C64,
    pub residual: f64,
    /// 2 when a cluster could not be split.
    pub multiplicity: usize,
}

impl EigenPair {
    pub fn passes(&self, threshold: f64) -> bool {
        self.residual < threshold
    }
}

/// F(λ) = 𝓀·Δ/(2iΞ) with memoised evaluations.
pub struct CharacteristicFunction {
    cache: Arc<DispersionCache>,
    bc: BoundaryConditions,
    mesh: Mesh,
    truncation: Truncation,
    gamma: Option<C64>,
    excluded_radius: f64,
    memo: Mutex<HashMap<(u64, u64), C64>>,
}

fn key(z: C64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

impl CharacteristicFunction {
    pub fn new(cache: Arc<DispersionCache>, bc: &BoundaryConditions, truncation: Truncation) -> Result<Self> {
        if bc.kind() != DomainKind::FiniteInterval || cache.profile().domain.kind != DomainKind::FiniteInterval {
            return Err(UtmError::Argument("eigenvalues need a finite interval".into()));
        }
        let case = classify(bc, &cache)?;
        if case.case == Case::Unsupported {
            return Err(UtmError::Case(case.warning.unwrap_or_else(|| "no Boundary Case applies".into())));
        }
        let (a, b) = cache.window();
        let mesh = Mesh::new(cache.clone(), a, b, &[])?;
        let p = cache.profile();
        let gamma = p.gamma_is_constant.then(|| (p.gamma)(a));
        let m = cache.bounds().m_gamma;
        let excluded_radius = if gamma.is_some() { 0.0 } else { m * (1.0 + 1e-3) * (1.0 + 1e-3) };
        Ok(CharacteristicFunction {
            cache,
            bc: bc.clone(),
            mesh,
            truncation,
            gamma,
            excluded_radius,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn cache(&self) -> &Arc<DispersionCache> {
        &self.cache
    }

    /// Wavenumber used at λ: 𝓀 or k, taken in the closed upper half plane.
    pub fn wavenumber(&self, lambda: C64) -> Wavenumber {
        let upper = |z: C64| if z.im < 0.0 || (z.im == 0.0 && z.re < 0.0) { -z } else { z };
        match self.gamma {
            Some(g) => {
                let w = upper((g - lambda).sqrt());
                Wavenumber::Reduced(if w.norm() < KAPPA_FLOOR { C64::new(KAPPA_FLOOR, 0.0) } else { w })
            }
            None => Wavenumber::Physical(upper((-lambda).sqrt())),
        }
    }

    /// κ with λ = −κ², in the closed upper half plane; roots within
    /// rounding of the real axis are taken with Re κ ≥ 0.
    pub fn kappa(lambda: C64) -> C64 {
        let k = (-lambda).sqrt();
        if k.im.abs() <= 1e-12 * k.norm() {
            return C64::new(k.re.abs(), k.im.abs());
        }
        if k.im < 0.0 {
            -k
        } else {
            k
        }
    }

    pub fn is_excluded(&self, lambda: C64) -> bool {
        lambda.norm() <= self.excluded_radius
    }

    fn compute(&self, lambda: C64) -> Result<(C64, usize)> {
        let k = self.wavenumber(lambda);
        let sweep = self.mesh.sweep(k)?;
        let fwd = sweep.series(Family::CsForward, self.truncation);
        let (a, sum, _) = delta_fi_parts(&self.bc, &fwd)?;
        let phase = sweep.phase[sweep.last()];
        Ok((k.value() * (a + sum * (-phase).exp()), fwd.order()))
    }

    pub fn eval(&self, lambda: C64) -> Result<C64> {
        if let Some(v) = self.memo.lock().unwrap().get(&key(lambda)) {
            return Ok(*v);
        }
        let (v, _) = self.compute(lambda)?;
        self.memo.lock().unwrap().insert(key(lambda), v);
        Ok(v)
    }

    fn eval_many(&self, pts: &[C64]) -> Result<Vec<C64>> {
        pts.par_iter().map(|&z| self.eval(z)).collect()
    }

    /// Truncation order reached at λ.
    pub fn order_at(&self, lambda: C64) -> Result<usize> {
        Ok(self.compute(lambda)?.1)
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    re: (f64, f64),
    im: (f64, f64),
    depth: usize,
}

impl Rect {
    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn size(&self) -> f64 {
        (self.re.1 - self.re.0).max(self.im.1 - self.im.0)
    }

    fn contains(&self, z: C64, pad: f64) -> bool {
        let (pr, pi) = (pad * (self.re.1 - self.re.0), pad * (self.im.1 - self.im.0));
        z.re >= self.re.0 - pr && z.re <= self.re.1 + pr && z.im >= self.im.0 - pi && z.im <= self.im.1 + pi
    }

    fn meets_disc(&self, radius: f64) -> bool {
        let cx = 0.0f64.clamp(self.re.0, self.re.1);
        let cy = 0.0f64.clamp(self.im.0, self.im.1);
        cx.hypot(cy) <= radius
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.re.0 + fx * (self.re.1 - self.re.0);
        let ym = self.im.0 + fy * (self.im.1 - self.im.0);
        let d = self.depth + 1;
        [
            Rect { re: (self.re.0, xm), im: (self.im.0, ym), depth: d },
            Rect { re: (xm, self.re.1), im: (self.im.0, ym), depth: d },
            Rect { re: (xm, self.re.1), im: (ym, self.im.1), depth: d },
            Rect { re: (self.re.0, xm), im: (ym, self.im.1), depth: d },
        ]
    }
}

enum Winding {
    Count(i64),
    OnEdge,
}

/// Points on a segment, always generated from the lower-left end so that
/// shared edges reuse memoised values.
fn segment(a: C64, b: C64, n: usize) -> Vec<C64> {
    let forward = (a.re, a.im) <= (b.re, b.im);
    let (p, q) = if forward { (a, b) } else { (b, a) };
    let mut v: Vec<C64> = (0..=n).map(|j| p + (q - p) * (j as f64 / n as f64)).collect();
    if !forward {
        v.reverse();
    }
    v.pop();
    v
}

fn winding(f: &CharacteristicFunction, r: &Rect, n: usize) -> Result<Winding> {
    let c = [
        C64::new(r.re.0, r.im.0),
        C64::new(r.re.1, r.im.0),
        C64::new(r.re.1, r.im.1),
        C64::new(r.re.0, r.im.1),
    ];
    let mut pts = Vec::with_capacity(4 * n);
    for e in 0..4 {
        pts.extend(segment(c[e], c[(e + 1) % 4], n));
    }
    let mut vals = f.eval_many(&pts)?;
    let min_step = 1e-12 * r.size().max(1.0);
    for _ in 0..30 {
        let m = pts.len();
        let mut mids = Vec::new();
        let mut at = Vec::new();
        for i in 0..m {
            let j = (i + 1) % m;
            if vals[i].norm() < 1e-300 || vals[j].norm() < 1e-300 {
                return Ok(Winding::OnEdge);
            }
            let d = (vals[j] / vals[i]).arg();
            if d.abs() > PI / 4.0 {
                if (pts[j] - pts[i]).norm() < min_step {
                    return Ok(Winding::OnEdge);
                }
                let (p, q) = if (pts[i].re, pts[i].im) <= (pts[j].re, pts[j].im) { (pts[i], pts[j]) } else { (pts[j], pts[i]) };
                mids.push(p + (q - p) * 0.5);
                at.push(i);
            }
        }
        if mids.is_empty() {
            let total: f64 = (0..m).map(|i| (vals[(i + 1) % m] / vals[i]).arg()).sum();
            let w = total / (2.0 * PI);
            if (w - w.round()).abs() > 0.05 {
                return Ok(Winding::OnEdge);
            }
            return Ok(Winding::Count(w.round() as i64));
        }
        let mv = f.eval_many(&mids)?;
        let mut np = Vec::with_capacity(m + mids.len());
        let mut nv = Vec::with_capacity(m + mids.len());
        let mut k = 0;
        for i in 0..m {
            np.push(pts[i]);
            nv.push(vals[i]);
            if k < at.len() && at[k] == i {
                np.push(mids[k]);
                nv.push(mv[k]);
                k += 1;
            }
        }
        pts = np;
        vals = nv;
    }
    Ok(Winding::OnEdge)
}

/// Newton iteration on F with a central-difference derivative.
fn newton(f: &CharacteristicFunction, start: C64) -> Result<Option<C64>> {
    let mut z = start;
    for _ in 0..60 {
        let h = 1e-6 * (1.0 + z.norm());
        let fz = f.eval(z)?;
        let d = (f.eval(z + h)? - f.eval(z - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            return Ok(None);
        }
        let step = fz / d;
        z -= step;
        if !z.is_finite() {
            return Ok(None);
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Ok(Some(z));
        }
    }
    // Accept slow final convergence when F is at rounding level.
    let scale = f.eval(z + 1e-3 * (1.0 + z.norm()))?.norm();
    Ok((f.eval(z)?.norm() <= 1e-10 * scale.max(1.0)).then_some(z))
}

/// Roots of a local quadratic fit through three points around `c`.
fn quadratic_split(f: &CharacteristicFunction, c: C64, h: f64) -> Result<[C64; 2]> {
    let (f0, fp, fm) = (f.eval(c)?, f.eval(c + h)?, f.eval(c - h)?);
    let a = (fp + fm - f0 * 2.0) / (2.0 * h * h);
    let b = (fp - fm) / (2.0 * h);
    if a.norm() == 0.0 {
        return Ok([c, c]);
    }
    let disc = (b * b - a * f0 * 4.0).sqrt();
    Ok([c + (-b + disc) / (a * 2.0), c + (-b - disc) / (a * 2.0)])
}

/// Roots of F in the region as (λ, multiplicity).
pub fn find_roots(f: &CharacteristicFunction, region: &SearchRegion, opts: &EigenOptions) -> Result<Vec<(C64, usize)>> {
    let mut roots: Vec<(C64, usize)> = Vec::new();
    let mut queue = vec![Rect { re: region.re, im: region.im, depth: 0 }];
    let max_depth = region.max_depth.min(opts.max_depth);
    let mut perturb = 0usize;
    while let Some(r) = queue.pop() {
        if r.depth > max_depth {
            return Err(UtmError::RootIsolation(format!("depth limit at λ ≈ {}", r.center())));
        }
        if f.excluded_radius > 0.0 && r.meets_disc(f.excluded_radius) {
            if r.size() > 0.25 * f.excluded_radius {
                queue.extend(r.split(0.5, 0.5));
            }
            continue;
        }
        let w = match winding(f, &r, opts.edge_points)? {
            Winding::Count(w) => w,
            Winding::OnEdge => {
                // Nudge the rectangle outward and retry.
                perturb += 1;
                if perturb > 64 {
                    return Err(UtmError::RootIsolation("persistent root on a rectangle edge".into()));
                }
                let e = 1e-6 * r.size().max(1.0) * perturb as f64;
                queue.push(Rect { re: (r.re.0 - e, r.re.1 + e * 0.7), im: (r.im.0 - e * 0.3, r.im.1 + e * 0.9), ..r });
                continue;
            }
        };
        if w < 0 {
            return Err(UtmError::RootIsolation(format!("negative winding {w} near {}", r.center())));
        }
        if w == 0 {
            continue;
        }
        if w == 1 {
            if let Some(z) = newton(f, r.center())? {
                if r.contains(z, 1e-9) && !roots.iter().any(|(q, _)| (q - z).norm() <= 1e-8 * (1.0 + z.norm())) {
                    roots.push((z, 1));
                    continue;
                }
                if r.contains(z, 1e-9) {
                    continue;
                }
            }
        } else if r.size() < 1e-7 * (1.0 + r.center().norm()) {
            // Unresolved cluster: split by a local quadratic, then polish.
            let h = 0.5 * r.size();
            let guesses = quadratic_split(f, r.center(), h)?;
            let mut found = Vec::new();
            for g in guesses {
                if let Some(z) = newton(f, g)? {
                    found.push(z);
                }
            }
            if found.len() == 2 && (found[0] - found[1]).norm() > 1e-10 * (1.0 + found[0].norm()) {
                roots.push((found[0], 1));
                roots.push((found[1], 1));
            } else {
                roots.push((found.first().copied().unwrap_or(r.center()), w as usize));
            }
            continue;
        }
        // Slightly off-centre splits keep roots off shared edges.
        queue.extend(r.split(0.5 + 1.3e-3, 0.5 - 0.7e-3));
        if roots.len() > region.max_roots {
            break;
        }
    }
    roots.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()).then(a.0.im.total_cmp(&b.0.im)));
    Ok(roots)
}

/// Eigenvalues in the region, sorted by |λ|, each with eigenfunction
/// coefficients and a residual.
pub fn find_eigenvalues(
    cache: Arc<DispersionCache>,
    bc: &BoundaryConditions,
    region: &SearchRegion,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let f = CharacteristicFunction::new(cache, bc, opts.truncation)?;
    let roots = find_roots(&f, region, opts)?;
    roots
        .into_iter()
        .take(region.max_roots)
        .map(|(lambda, mult)| {
            let mut pair = make_pair(&f, lambda, mult)?;
            pair.residual = eigen_residual(&f, &pair, opts.residual_grid)?;
            Ok(pair)
        })
        .collect()
}

/// The first `count` eigenvalues by |λ|.
pub fn lowest_eigenvalues(
    cache: Arc<DispersionCache>,
    bc: &BoundaryConditions,
    count: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let mut region = SearchRegion::around_estimates(&cache, count)?;
    region.max_roots = usize::MAX;
    let mut all = find_eigenvalues(cache, bc, &region, opts)?;
    all.truncate(count);
    Ok(all)
}

/// Seeds κₘ⁽⁰⁾ = √((2mπ/𝔪(1))² − γ) for m = 0..=m_max, with γ averaged
/// over the interval when it is not constant.
pub fn initial_guesses(cache: &DispersionCache, m_max: usize) -> Vec<C64> {
    let (a, b) = cache.window();
    let m1 = cache.mfrak(b) - cache.mfrak(a);
    let p = cache.profile();
    let gamma = if p.gamma_is_constant {
        (p.gamma)(a)
    } else {
        (0..=16).map(|j| (p.gamma)(a + (b - a) * j as f64 / 16.0)).sum::<C64>() / 17.0
    };
    (0..=m_max)
        .map(|m| {
            let k = 2.0 * m as f64 * PI / m1;
            CharacteristicFunction::kappa(gamma - k * k)
        })
        .collect()
}

struct Sums {
    c: C64,
    s: C64,
    c_alt: C64,
    s_alt: C64,
}

fn row_coefficients(row: [C64; 4], l: (C64, C64), r: (C64, C64), sums: &Sums) -> (C64, C64) {
    // l, r: (ω, √β𝔫) at the two ends.
    let (a1, a2, b1, b2) = (row[0], row[1], row[2], row[3]);
    let c = -a2 * l.0 / l.1 - b1 / r.1 * sums.s - b2 * r.0 / r.1 * sums.c_alt;
    let s = a1 / l.1 + b1 / r.1 * sums.c - b2 * r.0 / r.1 * sums.s_alt;
    (c, s)
}

fn make_pair(f: &CharacteristicFunction, lambda: C64, multiplicity: usize) -> Result<EigenPair> {
    let k = f.wavenumber(lambda);
    let sweep = f.mesh.sweep(k)?;
    let fwd = sweep.series(Family::CsForward, f.truncation);
    let last = sweep.last();
    let mut sums = Sums { c: C64::new(0.0, 0.0), s: C64::new(0.0, 0.0), c_alt: C64::new(0.0, 0.0), s_alt: C64::new(0.0, 0.0) };
    for n in 0..=fwd.order() {
        let sg = if n % 2 == 0 { 1.0 } else { -1.0 };
        let (c, s) = (fwd.c(n, last), fwd.s(n, last));
        sums.c += c;
        sums.s += s;
        sums.c_alt += c * sg;
        sums.s_alt += s * sg;
    }
    let l = (sweep.local[0].omega, sweep.local[0].sqrt_beta_n);
    let r = (sweep.local[last].omega, sweep.local[last].sqrt_beta_n);
    let (mut c_m, mut s_m) = row_coefficients(f.bc.row(0), l, r, &sums);
    let scale = f.bc.row(0).iter().chain(f.bc.row(1).iter()).map(|v| v.norm()).fold(0.0, f64::max);
    if c_m.norm() + s_m.norm() <= 1e-10 * scale * (1.0 + l.0.norm()) / l.1.norm() {
        (c_m, s_m) = row_coefficients(f.bc.row(1), l, r, &sums);
    }
    Ok(EigenPair {
        kappa: CharacteristicFunction::kappa(lambda),
        lambda,
        order: fwd.order(),
        c_m,
        s_m,
        residual: f64::NAN,
        multiplicity,
    })
}

/// Xₘ at the given points, normalised so the largest sample is 1.
pub fn eigenfunction(f: &CharacteristicFunction, pair: &EigenPair, xs: &[f64]) -> Result<Vec<C64>> {
    let cache = f.cache.clone();
    let (a, b) = cache.window();
    let mesh = Mesh::new(cache, a, b, xs)?;
    let sweep = mesh.sweep(f.wavenumber(pair.lambda))?;
    let fwd = sweep.series(Family::CsForward, Truncation::Fixed(pair.order));
    let mut vals = Vec::with_capacity(xs.len());
    for &x in xs {
        let i = sweep.index_of(x).ok_or(UtmError::Coverage { x })?;
        let mut c = C64::new(0.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        for n in 0..=fwd.order() {
            c += fwd.c(n, i);
            s += fwd.s(n, i);
        }
        vals.push((pair.c_m * c + pair.s_m * s) / sweep.local[i].sqrt_beta_n);
    }
    let peak = vals.iter().copied().max_by(|u, v| u.norm().total_cmp(&v.norm())).unwrap_or(C64::new(1.0, 0.0));
    if peak.norm() > 0.0 {
        for v in vals.iter_mut() {
            *v /= peak;
        }
    }
    Ok(vals)
}

/// Normalised residual of α(βX')' + γX − λX on a uniform grid, together
/// with both boundary rows, from fourth-order differences.
pub fn eigen_residual(f: &CharacteristicFunction, pair: &EigenPair, intervals: usize) -> Result<f64> {
    let n = intervals.max(16);
    let (a, b) = f.cache.window();
    let h = (b - a) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| a + h * i as f64).collect();
    let x = eigenfunction(f, pair, &xs)?;
    let p = f.cache.profile();
    let mut ode: f64 = 0.0;
    let mut gmax: f64 = 0.0;
    for i in 2..n - 1 {
        let xi = xs[i];
        let d1 = (-x[i + 2] + x[i + 1] * 8.0 - x[i - 1] * 8.0 + x[i - 2]) / (12.0 * h);
        let d2 = (-x[i + 2] + x[i + 1] * 16.0 - x[i] * 30.0 + x[i - 1] * 16.0 - x[i - 2]) / (12.0 * h * h);
        let (al, be, ga) = ((p.alpha)(xi), (p.beta)(xi), (p.gamma)(xi));
        gmax = gmax.max(ga.norm());
        let r = al * be * d2 + al * p.d_beta(xi) * d1 + ga * x[i] - pair.lambda * x[i];
        ode = ode.max(r.norm());
    }
    let ode = ode / (pair.lambda.norm() + gmax + 1.0);
    let one_sided = |v: [C64; 5]| (v[0] * -25.0 + v[1] * 48.0 - v[2] * 36.0 + v[3] * 16.0 - v[4] * 3.0) / (12.0 * h);
    let dl = one_sided([x[0], x[1], x[2], x[3], x[4]]);
    let dr = -one_sided([x[n], x[n - 1], x[n - 2], x[n - 3], x[n - 4]]);
    let mut bcr: f64 = 0.0;
    for j in 0..2 {
        let row = f.bc.row(j);
        let v = row[0] * x[0] + row[1] * dl + row[2] * x[n] + row[3] * dr;
        let w: f64 = row.iter().map(|c| c.norm()).sum::<f64>() * (1.0 + pair.kappa.norm());
        bcr = bcr.max(v.norm() / w);
    }
    Ok(ode.max(bcr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::coefficients::{CoefficientProfile, Domain, Preset};

    fn heat() -> Arc<DispersionCache> {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), Domain::interval(0.0, 1.0));
        Arc::new(DispersionCache::new(&p).unwrap())
    }

    #[test]
    fn dirichlet_spectrum() {
        let ev = lowest_eigenvalues(heat(), &BoundaryConditions::dirichlet(), 5, &EigenOptions::default()).unwrap();
        assert_eq!(ev.len(), 5);
        for (m, e) in ev.iter().enumerate() {
            let k = (m + 1) as f64 * PI;
            assert!((e.kappa - k).norm() < 1e-10, "{m}: {:?}", e.kappa);
            assert!((e.lambda + k * k).norm() < 1e-8);
            assert!(e.residual < 1e-6, "{}", e.residual);
        }
    }

    #[test]
    fn dirichlet_eigenfunction_is_sine() {
        let f = CharacteristicFunction::new(heat(), &BoundaryConditions::dirichlet(), Truncation::Adaptive).unwrap();
        let pair = make_pair(&f, c64(-PI * PI, 0.0), 1).unwrap();
        let x = eigenfunction(&f, &pair, &[0.25, 0.5]).unwrap();
        assert!((x[0] / x[1] - (PI / 4.0).sin()).norm() < 1e-9);
    }

    #[test]
    fn perturbed_pair_has_larger_residual() {
        let f = CharacteristicFunction::new(heat(), &BoundaryConditions::dirichlet(), Truncation::Adaptive).unwrap();
        let exact = make_pair(&f, c64(-PI * PI, 0.0), 1).unwrap();
        let k = c64(PI + 1e-3, 0.0);
        let off = make_pair(&f, -k * k, 1).unwrap();
        let (r0, r1) = (eigen_residual(&f, &exact, 400).unwrap(), eigen_residual(&f, &off, 400).unwrap());
        assert!(r1 > 10.0 * r0, "{r0} {r1}");
    }

    #[test]
    fn unit_mfrak_seed() {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), Domain::interval(0.0, 1.0));
        let c = DispersionCache::new(&p).unwrap();
        let g = initial_guesses(&c, 2);
        assert!((g[0] - c64(0.0, 1.0)).norm() < 1e-14);
        assert!((g[1] - (4.0 * PI * PI - 1.0).sqrt()).norm() < 1e-12);
    }

    #[test]
    fn cgl_exact_eigenvalue() {
        let c = Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap());
        let f = CharacteristicFunction::new(c, &BoundaryConditions::periodic(), paired_truncation(2)).unwrap();
        assert!(f.eval(c64(1.0, 0.0)).unwrap().norm() < 1e-12);
    }
}
