//! Accumulation functions 𝓒ₙ, 𝓢ₙ, 𝓔ₙ, 𝓔̃ₙ.
//!
//! All four families are instances of the ordered-simplex integral
//! 𝒥ₙ[σ] with a piecewise-constant exponent pattern σ_p ∈ {0, 2}. Writing
//! ω = k𝔫 and η = (β𝔫)'/(β𝔫), each pattern obeys a triangular linear ODE
//! system in the moving endpoint, level n being driven by level n − 1:
//!
//! ```text
//! forward  (a, x):  y'ₙ =  ½η y_{n−1} + σₙ iω yₙ
//! backward (x, b):  y'ₙ = −½η ỹ_{n−1} − σ₀ iω yₙ     (ỹ: pattern shifted by one)
//! ```
//!
//! The channels stored here are the J-form ("scaled") values, which stay
//! bounded by the factorial bound on the contour:
//!
//! | family       | channels                        | script values         |
//! |--------------|---------------------------------|-----------------------|
//! | `CsForward`  | P = 𝒥[1+(−1)^p], M = 𝒥[1−(−1)^p] | 𝒞 = (P+M)/2, 𝒮 = (P−M)/2i |
//! | `CsBackward` | Q = 𝒥[1+(−1)^p], R = 𝒥[1−(−1)^p] | same on (x, b)        |
//! | `ETail`      | 𝓔ₙ^{(x,b)}                      |                       |
//! | `ETilde`     | 𝓔̃ₙ^{(a,x)}                      |                       |
//!
//! The ODEs are integrated with 8-stage Gauss–Legendre collocation on a
//! panel mesh whose width is tied to |ω|, so the step error is controlled a
//! priori and checked by refinement in the tests. The stage values double
//! as quadrature nodes for the kernels.

use crate::coefficients::{DispersionCache, DomainKind, Local, NodeSample, Wavenumber};
use crate::error::{Result, UtmError};
use crate::numerics::gauss::{collocation, gauss_legendre, Collocation};
use crate::numerics::linalg::DenseLu;
use crate::numerics::quad::{integrate_with_breaks, QuadOptions};
use crate::{C64, I};
use rayon::prelude::*;
use std::sync::{Arc, OnceLock};

/// Collocation stages per panel.
pub const STAGES: usize = 8;
/// Points per panel in the flattened layout (left boundary plus stages).
pub const STRIDE: usize = STAGES + 1;
/// Hard cap on the truncation order.
pub const MAX_ORDER: usize = 8;
const MAX_CLASS: usize = 24;
const MAX_PANELS: usize = 1 << 21;
/// Default bound on 2|ω|h per panel.
pub const DEFAULT_STEP_PARAMETER: f64 = 2.0;
/// A level whose sup-norm is below this is treated as zero by the adaptive
/// truncation.
pub const LEVEL_TOL: f64 = 1e-14;

/// How many levels of an accumulation series to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Exactly levels 0..=N.
    Fixed(usize),
    /// Levels until two consecutive ones vanish to [`LEVEL_TOL`], capped at
    /// [`MAX_ORDER`].
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// 𝓒ₙ^{(a,x)}, 𝓢ₙ^{(a,x)} from the left end of the mesh.
    CsForward,
    /// 𝓒ₙ^{(x,b)}, 𝓢ₙ^{(x,b)} to the right end of the mesh.
    CsBackward,
    /// 𝓔ₙ^{(x,b)}, b the right end (the truncated ∞).
    ETail,
    /// 𝓔̃ₙ^{(a,x)}, a the left end (the truncated −∞).
    ETilde,
}

impl Family {
    fn channels(self) -> usize {
        match self {
            Family::CsForward | Family::CsBackward => 2,
            Family::ETail | Family::ETilde => 1,
        }
    }

    fn backward(self) -> bool {
        matches!(self, Family::CsBackward | Family::ETail)
    }

    /// Whether channel `c` at level `n ≥ 1` carries the 2iω rate.
    fn oscillates(self, n: usize, c: usize) -> bool {
        let even = n % 2 == 0;
        match (self, c) {
            (Family::CsForward, 0) => even,
            (Family::CsForward, _) => !even,
            (Family::CsBackward, 0) => true,
            (Family::CsBackward, _) => false,
            (Family::ETail | Family::ETilde, _) => !even,
        }
    }

    /// Channel of level n − 1 that drives channel `c` of level n.
    fn source(self, c: usize) -> usize {
        match self {
            Family::CsBackward => 1 - c,
            _ => c,
        }
    }
}

/// Coefficient samples on one refinement class of a mesh.
#[derive(Debug)]
pub struct PanelClass {
    pub level: usize,
    /// Samples at the flattened points: panel p occupies indices
    /// `STRIDE·p ..= STRIDE·p + STAGES`, the final boundary closes the list.
    pub samples: Vec<NodeSample>,
    /// Width of each panel.
    pub widths: Vec<f64>,
    /// Flattened index of each mesh breakpoint.
    pub break_index: Vec<usize>,
}

impl PanelClass {
    pub fn panels(&self) -> usize {
        self.widths.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.samples[i].x
    }

    /// Quadrature weight of point `i` (zero on panel boundaries).
    pub fn weight(&self, i: usize) -> f64 {
        let j = i % STRIDE;
        if j == 0 || i == self.samples.len() - 1 {
            0.0
        } else {
            self.widths[i / STRIDE] * gauss_legendre(STAGES).weights[j - 1]
        }
    }

    /// Index of a stage node.
    pub fn stage(p: usize, j: usize) -> usize {
        STRIDE * p + 1 + j
    }
}

/// Breakpoints plus lazily sampled dyadic refinement classes.
#[derive(Debug)]
pub struct Mesh {
    cache: Arc<DispersionCache>,
    breaks: Vec<f64>,
    base_panels: Vec<usize>,
    classes: Vec<OnceLock<Arc<PanelClass>>>,
    step_parameter: f64,
}

impl Mesh {
    /// Mesh on `[a, b]` with the extra breakpoints `grid` (clipped to the
    /// interval; duplicates removed).
    pub fn new(cache: Arc<DispersionCache>, a: f64, b: f64, grid: &[f64]) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(UtmError::Argument(format!("mesh needs finite a < b, got [{a}, {b}]")));
        }
        let (wa, wb) = cache.window();
        let slack = 1e-12 * (wb - wa).max(1.0);
        if a < wa - slack || b > wb + slack {
            return Err(UtmError::Coverage { x: if a < wa { a } else { b } });
        }
        let mut breaks = vec![a, b];
        for &x in grid {
            if !x.is_finite() {
                return Err(UtmError::Argument("non-finite grid point".into()));
            }
            if x > a && x < b {
                breaks.push(x);
            }
        }
        breaks.sort_by(f64::total_cmp);
        let tol = 1e-13 * (b - a);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= tol);
        let len = b - a;
        let h0 = (len / 64.0).min(0.05);
        let base_panels = breaks.windows(2).map(|w| ((w[1] - w[0]) / h0).ceil().max(1.0) as usize).collect();
        Ok(Mesh {
            cache,
            breaks,
            base_panels,
            classes: (0..MAX_CLASS).map(|_| OnceLock::new()).collect(),
            step_parameter: DEFAULT_STEP_PARAMETER,
        })
    }

    /// Mesh over the full computational window of the cache.
    pub fn over_window(cache: Arc<DispersionCache>, grid: &[f64]) -> Result<Self> {
        let (a, b) = cache.window();
        Mesh::new(cache, a, b, grid)
    }

    /// Overrides the bound on 2|ω|h (smaller is finer).
    pub fn with_step_parameter(mut self, theta: f64) -> Self {
        self.step_parameter = theta;
        self
    }

    pub fn cache(&self) -> &Arc<DispersionCache> {
        &self.cache
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn left(&self) -> f64 {
        self.breaks[0]
    }

    pub fn right(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// Upper bound on |ω| over the mesh.
    pub fn omega_bound(&self, k: Wavenumber) -> f64 {
        let b = self.cache.bounds();
        match k {
            Wavenumber::Physical(k) => {
                let m = k.norm();
                m * b.mu_max * (1.0 + b.m_gamma / (m * m)).sqrt()
            }
            Wavenumber::Reduced(w) => w.norm() * b.mu_max,
        }
    }

    fn class_for(&self, k: Wavenumber) -> Result<usize> {
        let w = self.omega_bound(k).max(1e-300);
        let base = self.base_panels.iter().sum::<usize>();
        let h0 = self
            .breaks
            .windows(2)
            .zip(&self.base_panels)
            .map(|(w, &n)| (w[1] - w[0]) / n as f64)
            .fold(0.0, f64::max);
        let mut j = 0;
        while h0 / (1u64 << j) as f64 * 2.0 * w > self.step_parameter {
            j += 1;
            if j >= MAX_CLASS || base << j > MAX_PANELS {
                return Err(UtmError::Stiffness { k: format!("{:?}", k), panels: base << j });
            }
        }
        Ok(j)
    }

    /// Samples of refinement class `j` (computed once).
    pub fn class(&self, j: usize) -> Arc<PanelClass> {
        self.classes[j]
            .get_or_init(|| {
                let rule = gauss_legendre(STAGES);
                let mut xs = Vec::new();
                let mut widths = Vec::new();
                let mut break_index = Vec::with_capacity(self.breaks.len());
                for (w, &n) in self.breaks.windows(2).zip(&self.base_panels) {
                    let n = n << j;
                    let h = (w[1] - w[0]) / n as f64;
                    break_index.push(xs.len());
                    for p in 0..n {
                        let x0 = if p == 0 { w[0] } else { w[0] + h * p as f64 };
                        xs.push(x0);
                        for c in &rule.nodes {
                            xs.push(x0 + h * c);
                        }
                        widths.push(h);
                    }
                }
                break_index.push(xs.len());
                xs.push(self.right());
                let samples: Vec<NodeSample> = if xs.len() > 4096 {
                    xs.par_iter().map(|&x| self.cache.sample(x)).collect()
                } else {
                    xs.iter().map(|&x| self.cache.sample(x)).collect()
                };
                Arc::new(PanelClass { level: j, samples, widths, break_index })
            })
            .clone()
    }

    /// Local quantities and the phase for one wavenumber.
    pub fn sweep(&self, k: Wavenumber) -> Result<Arc<Sweep>> {
        if let Wavenumber::Physical(kv) = k {
            let m_gamma = self.cache.bounds().m_gamma / 1.1;
            if kv.norm_sqr() <= m_gamma {
                return Err(UtmError::ContourRadius { modulus: kv.norm(), radius: m_gamma.sqrt() });
            }
        }
        let class = self.class(self.class_for(k)?);
        let local: Vec<Local> = class.samples.iter().map(|s| k.local(s)).collect();
        let col = collocation(STAGES);
        let mut phase = vec![C64::new(0.0, 0.0); class.len()];
        let mut l1_eta = 0.0;
        for p in 0..class.panels() {
            let h = class.widths[p];
            let base = STRIDE * p;
            let start = phase[base];
            for i in 0..STAGES {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..STAGES {
                    s += local[base + 1 + j].omega * col.a[i][j];
                }
                phase[base + 1 + i] = start + I * s * h;
            }
            let mut s = C64::new(0.0, 0.0);
            for j in 0..STAGES {
                s += local[base + 1 + j].omega * col.rule.weights[j];
                l1_eta += local[base + 1 + j].eta.norm() * col.rule.weights[j] * h;
            }
            phase[base + STRIDE] = start + I * s * h;
        }
        Ok(Arc::new(Sweep {
            k,
            class,
            local,
            phase,
            l1_eta,
            lu_forward: OnceLock::new(),
            lu_backward: OnceLock::new(),
        }))
    }
}

/// Per-wavenumber data shared by all families on a mesh class.
#[derive(Debug)]
pub struct Sweep {
    pub k: Wavenumber,
    pub class: Arc<PanelClass>,
    pub local: Vec<Local>,
    /// ϕ(x) = i∫ₐˣ ω at every flattened point, a the mesh left end.
    pub phase: Vec<C64>,
    /// ∫|η| over the mesh.
    pub l1_eta: f64,
    lu_forward: OnceLock<Vec<DenseLu>>,
    lu_backward: OnceLock<Vec<DenseLu>>,
}

impl Sweep {
    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn last(&self) -> usize {
        self.phase.len() - 1
    }

    /// Flattened index of breakpoint `i`.
    pub fn break_index(&self, i: usize) -> usize {
        self.class.break_index[i]
    }

    /// Index of the breakpoint at `x`, if `x` is one.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let bi = &self.class.break_index;
        let scale = (self.class.x(self.last()) - self.class.x(0)).max(1.0);
        bi.iter().copied().find(|&i| (self.class.x(i) - x).abs() <= 1e-12 * scale)
    }

    /// Stage index `j` of panel `p` in the direction of integration.
    fn stage_index(backward: bool, p: usize, j: usize) -> usize {
        if backward {
            PanelClass::stage(p, STAGES - 1 - j)
        } else {
            PanelClass::stage(p, j)
        }
    }

    fn lus(&self, backward: bool) -> &Vec<DenseLu> {
        let cell = if backward { &self.lu_backward } else { &self.lu_forward };
        cell.get_or_init(|| {
            let col = collocation(STAGES);
            (0..self.class.panels())
                .map(|p| {
                    let hs = if backward { -self.class.widths[p] } else { self.class.widths[p] };
                    let sgn = if backward { -1.0 } else { 1.0 };
                    let mut m = vec![C64::new(0.0, 0.0); STAGES * STAGES];
                    for i in 0..STAGES {
                        for j in 0..STAGES {
                            let lam = I * self.local[Self::stage_index(backward, p, j)].omega * (2.0 * sgn);
                            m[i * STAGES + j] = -lam * (hs * col.a[i][j]);
                        }
                        m[i * STAGES + i] += 1.0;
                    }
                    DenseLu::new(m, STAGES)
                })
                .collect()
        })
    }

    fn level0(&self, family: Family, c: usize) -> Vec<C64> {
        let end = self.phase[self.last()];
        match (family, c) {
            (Family::CsForward, 0) => self.phase.iter().map(|p| (p * 2.0).exp()).collect(),
            (Family::CsBackward, 0) => self.phase.iter().map(|p| ((end - p) * 2.0).exp()).collect(),
            _ => vec![C64::new(1.0, 0.0); self.len()],
        }
    }

    fn propagate(&self, family: Family, prev: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
        let backward = family.backward();
        let sgn = if backward { -1.0 } else { 1.0 };
        let col: Arc<Collocation> = collocation(STAGES);
        let channels = family.channels();
        let np = self.class.panels();
        let mut out = vec![vec![C64::new(0.0, 0.0); self.len()]; channels];
        let lus = if (0..channels).any(|c| family.oscillates(n, c)) { Some(self.lus(backward)) } else { None };
        let mut f = [C64::new(0.0, 0.0); STAGES];
        let mut rhs = [C64::new(0.0, 0.0); STAGES];
        for step in 0..np {
            let p = if backward { np - 1 - step } else { step };
            let hs = if backward { -self.class.widths[p] } else { self.class.widths[p] };
            let (start, end) = if backward { (STRIDE * (p + 1), STRIDE * p) } else { (STRIDE * p, STRIDE * (p + 1)) };
            for (c, out_c) in out.iter_mut().enumerate() {
                let src = &prev[family.source(c)];
                for j in 0..STAGES {
                    let idx = Self::stage_index(backward, p, j);
                    f[j] = self.local[idx].eta * (0.5 * sgn) * src[idx];
                }
                let y0 = out_c[start];
                for i in 0..STAGES {
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..STAGES {
                        s += f[j] * col.a[i][j];
                    }
                    rhs[i] = y0 + s * hs;
                }
                let stages: Vec<C64> = if family.oscillates(n, c) { lus.unwrap()[p].solve(&rhs) } else { rhs.to_vec() };
                let mut incr = C64::new(0.0, 0.0);
                for j in 0..STAGES {
                    let idx = Self::stage_index(backward, p, j);
                    out_c[idx] = stages[j];
                    let mut d = f[j];
                    if family.oscillates(n, c) {
                        d += I * self.local[idx].omega * (2.0 * sgn) * stages[j];
                    }
                    incr += d * col.rule.weights[j];
                }
                out_c[end] = y0 + incr * hs;
            }
        }
        out
    }

    /// Tabulates `family` at every flattened point.
    pub fn series(self: &Arc<Self>, family: Family, truncation: Truncation) -> AccumSeries {
        let channels = family.channels();
        let mut levels = vec![(0..channels).map(|c| self.level0(family, c)).collect::<Vec<_>>()];
        let cap = match truncation {
            Truncation::Fixed(n) => n,
            Truncation::Adaptive => MAX_ORDER,
        };
        let mut quiet = 0;
        for n in 1..=cap {
            let next = self.propagate(family, &levels[n - 1], n);
            if truncation == Truncation::Adaptive {
                let sup = next.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
                if sup < LEVEL_TOL {
                    quiet += 1;
                    if quiet == 2 {
                        levels.pop();
                        break;
                    }
                } else {
                    quiet = 0;
                }
            }
            levels.push(next);
        }
        AccumSeries { family, sweep: Arc::clone(self), levels }
    }
}

/// Tabulated accumulation family for one wavenumber. Levels above
/// [`AccumSeries::order`] read as zero.
#[derive(Debug, Clone)]
pub struct AccumSeries {
    pub family: Family,
    pub sweep: Arc<Sweep>,
    levels: Vec<Vec<Vec<C64>>>,
}

impl AccumSeries {
    /// Highest computed level N.
    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    /// J-form channel value.
    pub fn raw(&self, n: usize, c: usize, i: usize) -> C64 {
        self.levels.get(n).map_or(C64::new(0.0, 0.0), |l| l[c][i])
    }

    fn require_cs(&self) {
        assert!(matches!(self.family, Family::CsForward | Family::CsBackward), "not a C/S family");
    }

    /// Script 𝒞ₙ over the covered interval ((a, x) forward, (x, b) backward).
    pub fn script_c(&self, n: usize, i: usize) -> C64 {
        self.require_cs();
        (self.raw(n, 0, i) + self.raw(n, 1, i)) * 0.5
    }

    /// Script 𝒮ₙ over the covered interval.
    pub fn script_s(&self, n: usize, i: usize) -> C64 {
        self.require_cs();
        (self.raw(n, 0, i) - self.raw(n, 1, i)) / (I * 2.0)
    }

    /// i∫ω over the covered interval.
    pub fn covered_phase(&self, i: usize) -> C64 {
        match self.family {
            Family::CsForward | Family::ETilde => self.sweep.phase[i],
            Family::CsBackward | Family::ETail => self.sweep.phase[self.sweep.last()] - self.sweep.phase[i],
        }
    }

    /// Unscaled 𝓒ₙ.
    pub fn c(&self, n: usize, i: usize) -> C64 {
        self.script_c(n, i) * (-self.covered_phase(i)).exp()
    }

    /// Unscaled 𝓢ₙ.
    pub fn s(&self, n: usize, i: usize) -> C64 {
        self.script_s(n, i) * (-self.covered_phase(i)).exp()
    }

    /// 𝓔ₙ or 𝓔̃ₙ.
    pub fn e(&self, n: usize, i: usize) -> C64 {
        assert!(matches!(self.family, Family::ETail | Family::ETilde), "not an E family");
        self.raw(n, 0, i)
    }

    /// Values of a per-point accessor at every mesh breakpoint.
    pub fn at_breaks<F: Fn(&Self, usize) -> C64>(&self, f: F) -> Vec<C64> {
        self.sweep.class.break_index.iter().map(|&i| f(self, i)).collect()
    }
}

/// L¹ mass of the coefficient log-derivatives beyond the window edges, on
/// a stretch as long as the window. Zero for the finite interval.
pub fn tail_mass(cache: &DispersionCache) -> f64 {
    let p = cache.profile();
    let (a, b) = cache.window();
    let len = b - a;
    let density = |x: f64| (p.d_beta(x) / (p.beta)(x) - p.d_alpha(x) / (p.alpha)(x)).norm() + p.d_gamma(x).norm();
    let trap = |lo: f64, hi: f64| {
        let n = 512;
        let h = (hi - lo) / n as f64;
        (0..=n).map(|i| density(lo + h * i as f64) * if i == 0 || i == n { 0.5 * h } else { h }).sum::<f64>()
    };
    match p.domain.kind {
        DomainKind::FiniteInterval => 0.0,
        DomainKind::HalfLine => trap(b, b + len),
        DomainKind::WholeLine => trap(b, b + len) + trap(a - len, a),
    }
}

const TAIL_LIMIT: f64 = 1e-10;

fn check_tail(cache: &DispersionCache) -> Result<()> {
    let m = tail_mass(cache);
    if m > TAIL_LIMIT {
        return Err(UtmError::Truncation(format!("coefficient tail mass {m:.2e} beyond the window")));
    }
    Ok(())
}

/// 𝓒ₙ^{(a,x)}, 𝓢ₙ^{(a,x)} on `[a, b]` with the grid points as breakpoints.
pub fn accum_cs_forward(
    cache: Arc<DispersionCache>,
    k: Wavenumber,
    a: f64,
    b: f64,
    grid: &[f64],
    truncation: Truncation,
) -> Result<AccumSeries> {
    Ok(Mesh::new(cache, a, b, grid)?.sweep(k)?.series(Family::CsForward, truncation))
}

/// 𝓒ₙ^{(x,b)}, 𝓢ₙ^{(x,b)} on `[a, b]`.
pub fn accum_cs_backward(
    cache: Arc<DispersionCache>,
    k: Wavenumber,
    a: f64,
    b: f64,
    grid: &[f64],
    truncation: Truncation,
) -> Result<AccumSeries> {
    Ok(Mesh::new(cache, a, b, grid)?.sweep(k)?.series(Family::CsBackward, truncation))
}

/// 𝓔ₙ^{(x,∞)} over the window of an unbounded domain.
pub fn accum_e_tail(cache: Arc<DispersionCache>, k: Wavenumber, grid: &[f64], truncation: Truncation) -> Result<AccumSeries> {
    check_tail(&cache)?;
    Ok(Mesh::over_window(cache, grid)?.sweep(k)?.series(Family::ETail, truncation))
}

/// 𝓔̃ₙ^{(−∞,x)} over the window of the whole line.
pub fn accum_e_tilde_tail(
    cache: Arc<DispersionCache>,
    k: Wavenumber,
    grid: &[f64],
    truncation: Truncation,
) -> Result<AccumSeries> {
    check_tail(&cache)?;
    Ok(Mesh::over_window(cache, grid)?.sweep(k)?.series(Family::ETilde, truncation))
}

/// Quantity evaluated by [`simplex_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleFamily {
    ScriptC,
    ScriptS,
    E,
    ETilde,
}

/// Parameters for [`simplex_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOracleSpec {
    pub max_n: usize,
    pub rel_tol: f64,
    /// Intervals of the auxiliary phase table.
    pub phase_intervals: usize,
}

impl Default for SimplexOracleSpec {
    fn default() -> Self {
        SimplexOracleSpec { max_n: 3, rel_tol: 1e-10, phase_intervals: 2048 }
    }
}

/// Φ(x) = i∫ₐˣω on a uniform table, refined per query by Gauss quadrature.
struct PhaseTable<'a> {
    cache: &'a DispersionCache,
    k: Wavenumber,
    a: f64,
    h: f64,
    values: Vec<C64>,
}

impl<'a> PhaseTable<'a> {
    fn new(cache: &'a DispersionCache, k: Wavenumber, a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / n as f64;
        let mut t = PhaseTable { cache, k, a, h, values: vec![C64::new(0.0, 0.0); n + 1] };
        for i in 0..n {
            let x0 = a + h * i as f64;
            t.values[i + 1] = t.values[i] + t.piece(x0, x0 + h);
        }
        t
    }

    fn piece(&self, x0: f64, x1: f64) -> C64 {
        let rule = gauss_legendre(12);
        let mut s = C64::new(0.0, 0.0);
        for (c, w) in rule.nodes.iter().zip(&rule.weights) {
            s += self.k.local(&self.cache.sample(x0 + (x1 - x0) * c)).omega * *w;
        }
        I * s * (x1 - x0)
    }

    fn at(&self, x: f64) -> C64 {
        let i = (((x - self.a) / self.h).floor().max(0.0) as usize).min(self.values.len() - 2);
        let x0 = self.a + self.h * i as f64;
        self.values[i] + self.piece(x0, x)
    }
}

/// 𝒥ₙ[σ] on (a, b) by nested adaptive quadrature over the ordered simplex.
fn simplex_j(
    table: &PhaseTable,
    eta: &dyn Fn(f64) -> C64,
    sigma: &dyn Fn(usize) -> f64,
    b: f64,
    n: usize,
    opts: QuadOptions,
) -> Result<C64> {
    let phi_b = table.at(b);
    // inner(p, y, phi_y): integral over y < y_p < … < y_n < b.
    fn inner(
        table: &PhaseTable,
        eta: &dyn Fn(f64) -> C64,
        sigma: &dyn Fn(usize) -> f64,
        b: f64,
        phi_b: C64,
        n: usize,
        p: usize,
        y: f64,
        phi_y: C64,
        opts: QuadOptions,
    ) -> Result<C64> {
        if p > n {
            return Ok(((phi_b - phi_y) * sigma(n)).exp());
        }
        if b - y <= 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let err = std::cell::RefCell::new(None);
        let v = integrate_with_breaks(
            |z| {
                let phi_z = table.at(z);
                match inner(table, eta, sigma, b, phi_b, n, p + 1, z, phi_z, opts) {
                    Ok(r) => eta(z) * 0.5 * ((phi_z - phi_y) * sigma(p - 1)).exp() * r,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        C64::new(0.0, 0.0)
                    }
                }
            },
            y,
            b,
            &[],
            opts,
        )?
        .0;
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
    inner(table, eta, sigma, b, phi_b, n, 1, table.a, C64::new(0.0, 0.0), opts)
}

/// Direct evaluation of 𝒞ₙ, 𝒮ₙ, 𝓔ₙ or 𝓔̃ₙ over (a, b), independent of the
/// ODE path. Intended for n ≤ 3.
pub fn simplex_oracle(
    cache: &DispersionCache,
    k: Wavenumber,
    a: f64,
    b: f64,
    n: usize,
    family: OracleFamily,
    spec: SimplexOracleSpec,
) -> Result<C64> {
    if n > spec.max_n {
        return Err(UtmError::Argument(format!("simplex oracle supports n ≤ {}", spec.max_n)));
    }
    if !(a < b) {
        return Err(UtmError::Argument("simplex oracle needs a < b".into()));
    }
    let table = PhaseTable::new(cache, k, a, b, spec.phase_intervals);
    let eta = |x: f64| k.local(&cache.sample(x)).eta;
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: spec.rel_tol, max_intervals: 2000 };
    let plus = |p: usize| if p % 2 == 0 { 2.0 } else { 0.0 };
    let minus = |p: usize| if p % 2 == 0 { 0.0 } else { 2.0 };
    let e_pat = move |p: usize| if (n - p) % 2 == 0 { 0.0 } else { 2.0 };
    let j = |sigma: &dyn Fn(usize) -> f64| -> Result<C64> {
        if n == 0 {
            Ok((table.at(b) * sigma(0)).exp())
        } else {
            simplex_j(&table, &eta, sigma, b, n, opts)
        }
    };
    match family {
        OracleFamily::ScriptC => Ok((j(&plus)? + j(&minus)?) * 0.5),
        OracleFamily::ScriptS => Ok((j(&plus)? - j(&minus)?) / (I * 2.0)),
        OracleFamily::E => j(&e_pat),
        OracleFamily::ETilde => j(&minus),
    }
}

/// Script values 𝒞ₙ, 𝒮ₙ = e^{i∫ω}·(𝓒ₙ, 𝓢ₙ) from unscaled ones over an
/// interval with i∫ω = `phase`.
pub fn script_cs(c: C64, s: C64, phase: C64) -> (C64, C64) {
    let e = phase.exp();
    (c * e, s * e)
}

/// Smallest N for which the factorial bound (L/2)^{N+1}/(N+1)! of the
/// first omitted level is below `tol`, capped at [`MAX_ORDER`].
pub fn factorial_order(l1_eta: f64, tol: f64) -> usize {
    let mut term = 1.0;
    for n in 0..MAX_ORDER {
        term *= 0.5 * l1_eta / (n + 1) as f64;
        if term < tol {
            return n;
        }
    }
    MAX_ORDER
}

/// Factorial bound (L/2)ⁿ/n! on level n.
pub fn factorial_bound(l1_eta: f64, n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * 0.5 * l1_eta / j as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::coefficients::{CoefficientProfile, Domain, Preset};

    fn cgl() -> Arc<DispersionCache> {
        Arc::new(DispersionCache::new(&Preset::Cgl.profile(Domain::interval(0.0, 1.0))).unwrap())
    }

    fn constant() -> Arc<DispersionCache> {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), Domain::interval(0.0, 1.0));
        Arc::new(DispersionCache::new(&p).unwrap())
    }

    #[test]
    fn constant_coefficients_have_only_level_zero() {
        let k = c64(3.0, 1.0);
        let s = accum_cs_forward(constant(), Wavenumber::Physical(k), 0.0, 1.0, &[0.3], Truncation::Fixed(3)).unwrap();
        let i = s.sweep.index_of(0.3).unwrap();
        assert!((s.c(0, i) - (k * 0.3).cos()).norm() < 1e-12);
        assert!((s.s(0, i) - (k * 0.3).sin()).norm() < 1e-12);
        for n in 1..=3 {
            assert!(s.c(n, i).norm() < 1e-15 && s.s(n, i).norm() < 1e-15);
        }
        let b = accum_cs_backward(constant(), Wavenumber::Physical(k), 0.0, 1.0, &[0.3], Truncation::Fixed(2)).unwrap();
        assert!((b.c(0, i) - (k * 0.7).cos()).norm() < 1e-12);
        let last = b.sweep.last();
        assert_eq!(b.script_c(0, last), c64(1.0, 0.0));
        assert_eq!(b.script_s(1, last), c64(0.0, 0.0));
    }

    #[test]
    fn adaptive_truncation_stops_at_zero_for_constant() {
        let s = accum_cs_forward(constant(), Wavenumber::Physical(c64(2.0, 2.0)), 0.0, 1.0, &[], Truncation::Adaptive)
            .unwrap();
        assert_eq!(s.order(), 0);
    }

    #[test]
    fn cgl_matches_simplex_oracle() {
        let cache = cgl();
        let k = Wavenumber::Physical(c64(5.0, 5.0));
        let fwd = accum_cs_forward(cache.clone(), k, 0.0, 1.0, &[], Truncation::Fixed(3)).unwrap();
        let last = fwd.sweep.last();
        let spec = SimplexOracleSpec::default();
        for n in 0..=2 {
            let oc = simplex_oracle(&cache, k, 0.0, 1.0, n, OracleFamily::ScriptC, spec).unwrap();
            let os = simplex_oracle(&cache, k, 0.0, 1.0, n, OracleFamily::ScriptS, spec).unwrap();
            let (c, s) = (fwd.script_c(n, last), fwd.script_s(n, last));
            assert!((c - oc).norm() <= 1e-6 * oc.norm().max(1e-3), "C{n}: {c} vs {oc}");
            assert!((s - os).norm() <= 1e-6 * os.norm().max(1e-3), "S{n}: {s} vs {os}");
        }
    }

    #[test]
    fn factorial_order_examples() {
        assert_eq!(factorial_order(0.0, 1e-11), 0);
        assert!(factorial_order(1.0, 1e-11) >= 6);
        assert_eq!(factorial_order(100.0, 1e-11), MAX_ORDER);
    }
}
