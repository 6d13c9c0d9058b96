//! k-space numerator pieces: Ψ(k,x,y), the boundary kernels 𝓑ₘ(k,x), the
//! data transforms Φ₀ and Φ_𝔣, and the time transforms F_m and 𝔉ₘ.
//!
//! Away from y = x every Ψ is separable after the J-form scaling:
//!
//! ```text
//! y < x:  Ψ = e^{ϕ(x)−ϕ(y)} Σ_q a_q(x) b_q(y)   (+ interior term)
//! y > x:  Ψ = e^{ϕ(y)−ϕ(x)} Σ_q c_q(x) d_q(y)   (+ interior term)
//! ```
//!
//! with ϕ = i∫ω measured from the left end of the mesh and every factor
//! bounded on the contour. The y-integrals therefore reduce to two
//! cumulative sweeps with decaying transfer factors. The interior terms
//! (only present when (a:b)₁₂ or (a:b)₃₄ is non-zero) are summed pairwise.

use crate::accum::{AccumSeries, Family, Mesh, Sweep, Truncation, STAGES, STRIDE};
use crate::coefficients::{CoefficientProfile, DomainKind, Func, Wavenumber};
use crate::delta::{delta_fi, delta_hl, delta_wl, BoundaryConditions};
use crate::error::{Result, UtmError};
use crate::numerics::gauss::gauss_legendre;
use crate::numerics::interp::ChebyshevBasis;
use crate::numerics::quad::{integrate, QuadOptions};
use crate::C64;
use std::sync::Arc;

/// A complex function of (x, t).
pub type Func2 = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// Initial, forcing and boundary data. Absent entries are zero.
#[derive(Clone, Default)]
pub struct ProblemData {
    pub q0: Option<Func>,
    pub f: Option<Func2>,
    /// ∂f/∂t; differenced from `f` when absent.
    pub f_t: Option<Func2>,
    pub f0: Option<Func>,
    pub f0_prime: Option<Func>,
    pub f1: Option<Func>,
    pub f1_prime: Option<Func>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("q0", &self.q0.is_some())
            .field("f", &self.f.is_some())
            .field("f0", &self.f0.is_some())
            .field("f1", &self.f1.is_some())
            .finish()
    }
}

impl ProblemData {
    pub fn with_q0(mut self, q0: Func) -> Self {
        self.q0 = Some(q0);
        self
    }

    pub fn with_forcing(mut self, f: Func2, f_t: Option<Func2>) -> Self {
        self.f = Some(f);
        self.f_t = f_t;
        self
    }

    pub fn with_boundary(mut self, m: usize, fm: Func, fm_prime: Option<Func>) -> Self {
        if m == 0 {
            self.f0 = Some(fm);
            self.f0_prime = fm_prime;
        } else {
            self.f1 = Some(fm);
            self.f1_prime = fm_prime;
        }
        self
    }

    /// f_m and f_m' (differenced when not supplied).
    pub fn boundary(&self, m: usize) -> Option<(Func, Func)> {
        let (f, fp) = if m == 0 { (&self.f0, &self.f0_prime) } else { (&self.f1, &self.f1_prime) };
        let f = f.clone()?;
        let fp = fp.clone().unwrap_or_else(|| {
            let g = f.clone();
            Arc::new(move |t: f64| crate::numerics::diff::derivative(g.as_ref(), t, step_at(t)))
        });
        Some((f, fp))
    }

    /// ∂f/∂t at (x, s).
    pub fn forcing_rate(&self, x: f64, s: f64) -> C64 {
        match (&self.f_t, &self.f) {
            (Some(ft), _) => ft(x, s),
            (None, Some(f)) => crate::numerics::diff::derivative(&|t: f64| f(x, t), s, step_at(s)),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.q0.is_none() && self.f.is_none() && self.f0.is_none() && self.f1.is_none()
    }
}

/// Differencing step that stays inside s > 0 for small s.
fn step_at(s: f64) -> f64 {
    if s > 0.0 {
        crate::numerics::diff::DEFAULT_STEP.min(0.5 * s)
    } else {
        crate::numerics::diff::DEFAULT_STEP
    }
}

/// Everything needed to evaluate Ψ, 𝓑ₘ and the transforms at one k.
#[derive(Debug)]
pub struct KernelContext {
    pub k: Wavenumber,
    pub bc: BoundaryConditions,
    pub sweep: Arc<Sweep>,
    pub kind: DomainKind,
    /// Forward C/S family (interval and half line).
    pub fwd: Option<AccumSeries>,
    /// Backward C/S family (interval).
    pub bwd: Option<AccumSeries>,
    /// 𝓔 tail (half and whole line).
    pub tail: Option<AccumSeries>,
    /// 𝓔̃ (whole line).
    pub tilde: Option<AccumSeries>,
    pub order: usize,
    pub delta: C64,
    pub profile: CoefficientProfile,
    consts: Consts,
}

#[derive(Debug, Clone, Copy, Default)]
struct Consts {
    m12: C64,
    m13: C64,
    m14: C64,
    m23: C64,
    m24: C64,
    m34: C64,
    omega_l: C64,
    omega_r: C64,
    sbn_l: C64,
    sbn_r: C64,
    beta_l: C64,
    beta_r: C64,
    kfac: C64,
    a0: C64,
    a1: C64,
}

/// Pairs whose interior-term magnitude falls below e^{PRUNE} are skipped.
const PRUNE: f64 = -41.5;

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl KernelContext {
    pub fn new(mesh: &Mesh, k: Wavenumber, bc: &BoundaryConditions, truncation: Truncation) -> Result<Self> {
        let kind = bc.kind();
        if kind != mesh.cache().profile().domain.kind {
            return Err(UtmError::Argument("boundary data do not match the domain".into()));
        }
        let sweep = mesh.sweep(k)?;
        let (mut fwd, mut bwd, mut tail, mut tilde) = (None, None, None, None);
        match kind {
            DomainKind::FiniteInterval => {
                fwd = Some(sweep.series(Family::CsForward, truncation));
                bwd = Some(sweep.series(Family::CsBackward, truncation));
            }
            DomainKind::HalfLine => {
                fwd = Some(sweep.series(Family::CsForward, truncation));
                tail = Some(sweep.series(Family::ETail, truncation));
            }
            DomainKind::WholeLine => {
                tilde = Some(sweep.series(Family::ETilde, truncation));
                tail = Some(sweep.series(Family::ETail, truncation));
            }
        }
        let order = [&fwd, &bwd, &tail, &tilde].iter().filter_map(|s| s.as_ref().map(|s| s.order())).max().unwrap();
        let last = sweep.last();
        let mut c = Consts {
            m12: bc.minor(1, 2),
            m13: bc.minor(1, 3),
            m14: bc.minor(1, 4),
            m23: bc.minor(2, 3),
            m24: bc.minor(2, 4),
            m34: bc.minor(3, 4),
            omega_l: sweep.local[0].omega,
            omega_r: sweep.local[last].omega,
            sbn_l: sweep.local[0].sqrt_beta_n,
            sbn_r: sweep.local[last].sqrt_beta_n,
            beta_l: sweep.class.samples[0].beta,
            beta_r: sweep.class.samples[last].beta,
            kfac: k.value(),
            ..Consts::default()
        };
        let delta = match kind {
            DomainKind::FiniteInterval => delta_fi(bc, fwd.as_ref().unwrap())?,
            DomainKind::HalfLine => {
                if let BoundaryConditions::HalfLine { a0, a1 } = *bc {
                    c.a0 = a0;
                    c.a1 = a1;
                }
                delta_hl(bc, tail.as_ref().unwrap())?
            }
            DomainKind::WholeLine => {
                let split = nearest_break(&sweep, 0.0);
                delta_wl(tilde.as_ref().unwrap(), tail.as_ref().unwrap(), split)?
            }
        };
        let profile = mesh.cache().profile().clone();
        Ok(KernelContext { k, bc: bc.clone(), sweep, kind, fwd, bwd, tail, tilde, order, delta, profile, consts: c })
    }

    /// Number of separable terms on each side.
    fn terms(&self) -> usize {
        match self.kind {
            DomainKind::FiniteInterval => 2 * (self.order + 1),
            _ => self.order + 1,
        }
    }

    fn fc(&self, n: usize, i: usize) -> C64 {
        self.fwd.as_ref().unwrap().script_c(n, i)
    }

    fn fs(&self, n: usize, i: usize) -> C64 {
        self.fwd.as_ref().unwrap().script_s(n, i)
    }

    fn bcv(&self, n: usize, i: usize) -> C64 {
        self.bwd.as_ref().unwrap().script_c(n, i)
    }

    fn bsv(&self, n: usize, i: usize) -> C64 {
        self.bwd.as_ref().unwrap().script_s(n, i)
    }

    fn e(&self, n: usize, i: usize) -> C64 {
        self.tail.as_ref().unwrap().e(n, i)
    }

    fn et(&self, n: usize, i: usize) -> C64 {
        self.tilde.as_ref().unwrap().e(n, i)
    }

    /// Running sums Σ_{j≤m} v_j for m = 0..=N.
    fn prefix<F: Fn(usize) -> C64>(&self, f: F, out: &mut [C64]) {
        let mut s = C64::new(0.0, 0.0);
        for (m, o) in out.iter_mut().enumerate().take(self.order + 1) {
            s += f(m);
            *o = s;
        }
    }

    fn h(&self, n: usize, i: usize) -> C64 {
        self.consts.a0 / self.consts.omega_l * self.fs(n, i) - self.consts.a1 * self.fc(n, i)
    }

    /// y-side factors b_q(y) of the lower branch.
    fn lower_b(&self, i: usize, out: &mut [C64]) {
        let n1 = self.order + 1;
        match self.kind {
            DomainKind::FiniteInterval => {
                let (cs, ss) = out.split_at_mut(n1);
                self.prefix(|m| self.fc(m, i), cs);
                self.prefix(|m| self.fs(m, i), ss);
            }
            DomainKind::HalfLine => self.prefix(|m| self.h(m, i), out),
            DomainKind::WholeLine => self.prefix(|m| self.et(m, i), out),
        }
    }

    /// x-side factors a_q(x) of the lower branch.
    fn lower_a(&self, i: usize, out: &mut [C64]) {
        let n = self.order;
        let c = &self.consts;
        match self.kind {
            DomainKind::FiniteInterval => {
                for m in 0..=n {
                    let l = n - m;
                    let (cb, sb) = (self.bcv(l, i), self.bsv(l, i));
                    out[m] = (-c.m24 * sign(l) * cb - c.m23 / c.omega_r * sb) * 4.0;
                    out[n + 1 + m] = (c.m13 / (c.omega_l * c.omega_r) * sb + c.m14 / c.omega_l * sign(l) * cb) * 4.0;
                }
            }
            DomainKind::HalfLine => {
                for m in 0..=n {
                    out[m] = self.e(n - m, i) * (4.0 * sign(n - m));
                }
            }
            DomainKind::WholeLine => {
                for m in 0..=n {
                    out[m] = self.e(n - m, i) * sign(n - m);
                }
            }
        }
    }

    /// y-side factors d_q(y) of the upper branch.
    fn upper_d(&self, i: usize, out: &mut [C64]) {
        let n = self.order;
        match self.kind {
            DomainKind::FiniteInterval => {
                for l in 0..=n {
                    out[l] = self.bcv(l, i);
                    out[n + 1 + l] = self.bsv(l, i);
                }
            }
            _ => {
                for l in 0..=n {
                    out[l] = self.e(l, i) * sign(l);
                }
            }
        }
    }

    /// x-side factors c_q(x) of the upper branch.
    fn upper_c(&self, i: usize, out: &mut [C64]) {
        let n = self.order;
        let n1 = n + 1;
        let c = &self.consts;
        let mut tmp = vec![C64::new(0.0, 0.0); 2 * n1];
        match self.kind {
            DomainKind::FiniteInterval => {
                let (cs, ss) = tmp.split_at_mut(n1);
                self.prefix(|m| self.fc(m, i), cs);
                self.prefix(|m| self.fs(m, i), ss);
                for l in 0..=n {
                    let (csum, ssum) = (tmp[n - l], tmp[n1 + n - l]);
                    out[l] = (-c.m24 * csum + c.m14 / c.omega_l * ssum) * (4.0 * sign(l));
                    out[n1 + l] = (c.m13 / (c.omega_l * c.omega_r) * ssum - c.m23 / c.omega_r * csum) * 4.0;
                }
            }
            DomainKind::HalfLine => {
                self.prefix(|m| self.h(m, i), &mut tmp[..n1]);
                for l in 0..=n {
                    out[l] = tmp[n - l] * 4.0;
                }
            }
            DomainKind::WholeLine => {
                self.prefix(|m| self.et(m, i), &mut tmp[..n1]);
                for l in 0..=n {
                    out[l] = tmp[n - l];
                }
            }
        }
    }

    /// Ξ·Σₙ𝓢ₙ^{(lo,hi)} for point indices lo ≤ hi, through whichever
    /// factorisation carries the bounded exponential.
    pub fn interior(&self, lo: usize, hi: usize) -> C64 {
        let ph = &self.sweep.phase;
        let pr = ph[self.sweep.last()];
        let true_mag = (ph[lo] + pr - ph[hi]).re;
        if true_mag < PRUNE {
            return C64::new(0.0, 0.0);
        }
        let n = self.order;
        let fwd_exp = pr - ph[hi] - ph[lo];
        let mut s = C64::new(0.0, 0.0);
        if fwd_exp.re <= 0.0 {
            let (mut cs, mut ss) = (vec![C64::new(0.0, 0.0); n + 1], vec![C64::new(0.0, 0.0); n + 1]);
            self.prefix(|m| self.fc(m, lo), &mut cs);
            self.prefix(|m| self.fs(m, lo), &mut ss);
            for l in 0..=n {
                s += self.fs(l, hi) * cs[n - l] - self.fc(l, hi) * ss[n - l];
            }
            s * fwd_exp.exp()
        } else {
            let (mut ss, mut ca) = (vec![C64::new(0.0, 0.0); n + 1], vec![C64::new(0.0, 0.0); n + 1]);
            self.prefix(|m| self.bsv(m, lo), &mut ss);
            self.prefix(|m| self.bcv(m, lo) * sign(m), &mut ca);
            for l in 0..=n {
                s += self.bcv(l, hi) * sign(l) * ss[n - l] - self.bsv(l, hi) * ca[n - l];
            }
            s * (-fwd_exp).exp()
        }
    }

    fn interior_weights(&self) -> (C64, C64) {
        let c = &self.consts;
        if self.kind != DomainKind::FiniteInterval {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let den = c.kfac * c.sbn_l * c.sbn_r;
        (-(c.beta_r * c.m12) * 4.0 / den, -(c.beta_l * c.m34) * 4.0 / den)
    }

    /// Ψ(k, x, y) at flattened point indices.
    pub fn psi_idx(&self, ix: usize, iy: usize) -> C64 {
        let q = self.terms();
        let mut u = vec![C64::new(0.0, 0.0); q];
        let mut v = vec![C64::new(0.0, 0.0); q];
        let ph = &self.sweep.phase;
        let (w12, w34) = self.interior_weights();
        if iy <= ix {
            self.lower_a(ix, &mut u);
            self.lower_b(iy, &mut v);
            let s: C64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            let mut r = s * (ph[ix] - ph[iy]).exp();
            if w12 != C64::new(0.0, 0.0) {
                r += w12 * self.interior(iy, ix);
            }
            r
        } else {
            self.upper_c(ix, &mut u);
            self.upper_d(iy, &mut v);
            let s: C64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            let mut r = s * (ph[iy] - ph[ix]).exp();
            if w34 != C64::new(0.0, 0.0) {
                r += w34 * self.interior(ix, iy);
            }
            r
        }
    }

    /// Ψ(k, x, y) for mesh breakpoints x, y.
    pub fn psi(&self, x: f64, y: f64) -> Result<C64> {
        let ix = self.sweep.index_of(x).ok_or(UtmError::Coverage { x })?;
        let iy = self.sweep.index_of(y).ok_or(UtmError::Coverage { x: y })?;
        Ok(self.psi_idx(ix, iy))
    }

    /// 𝓑ₘ(k, x) at a flattened point index.
    pub fn boundary_kernel_idx(&self, m: usize, i: usize) -> Result<C64> {
        let c = &self.consts;
        let sbn_x = self.sweep.local[i].sqrt_beta_n;
        let ph = &self.sweep.phase;
        match self.kind {
            DomainKind::WholeLine => Ok(C64::new(0.0, 0.0)),
            DomainKind::HalfLine => {
                if m != 0 {
                    return Err(UtmError::Argument("the half line has only 𝓑₀".into()));
                }
                let s: C64 = (0..=self.order).map(|n| self.e(n, i) * sign(n)).sum();
                Ok(c.beta_l * 4.0 * ph[i].exp() / (c.sbn_l * sbn_x) * s)
            }
            DomainKind::FiniteInterval => {
                if m > 1 {
                    return Err(UtmError::Argument("boundary kernel index must be 0 or 1".into()));
                }
                let j = 2 - m;
                let row = self.bc.row(j - 1);
                let pr = ph[self.sweep.last()];
                let (mut sl, mut cl, mut sr, mut cr) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for n in 0..=self.order {
                    sl += self.fs(n, i);
                    cl += self.fc(n, i);
                    sr += self.bsv(n, i);
                    cr += self.bcv(n, i) * sign(n);
                }
                // Ξ𝓢^{(l,x)} = e^{ϕr−ϕx}𝒮^{(l,x)}, Ξ𝓢^{(x,r)} = e^{ϕx}𝒮^{(x,r)}.
                let left = c.beta_r / c.sbn_r * (-row[0] / c.omega_l * sl + row[1] * cl) * (pr - ph[i]).exp();
                let right = c.beta_l / c.sbn_l * (row[2] / c.omega_r * sr + row[3] * cr) * ph[i].exp();
                Ok((left + right) * (4.0 * sign(j)) / sbn_x)
            }
        }
    }

    pub fn boundary_kernel(&self, m: usize, x: f64) -> Result<C64> {
        let i = self.sweep.index_of(x).ok_or(UtmError::Coverage { x })?;
        self.boundary_kernel_idx(m, i)
    }

    /// ∫Ψ(k,x,y) g(y) / (√β𝔫(x)√β𝔫(y)) dy at every mesh breakpoint, for
    /// each density g given at all flattened points (only stage values are
    /// read).
    pub fn transform(&self, densities: &[&[C64]]) -> Vec<Vec<C64>> {
        let nd = densities.len();
        let q = self.terms();
        let sw = &self.sweep;
        let np = sw.class.panels();
        let ph = &sw.phase;
        let rule = gauss_legendre(STAGES);
        let breaks = &sw.class.break_index;
        let nb = breaks.len();
        let mut g: Vec<Vec<C64>> = Vec::with_capacity(nd);
        for d in densities {
            g.push(
                (0..sw.len())
                    .map(|i| if i % STRIDE == 0 { C64::new(0.0, 0.0) } else { d[i] / sw.local[i].sqrt_beta_n })
                    .collect(),
            );
        }
        let mut fac = vec![C64::new(0.0, 0.0); q];
        // Lower sweep.
        let mut lower = vec![vec![vec![C64::new(0.0, 0.0); q]; nd]; nb];
        let mut acc = vec![vec![C64::new(0.0, 0.0); q]; nd];
        let mut bi = 0;
        for p in 0..np {
            let start = STRIDE * p;
            if bi < nb && breaks[bi] == start {
                lower[bi].clone_from(&acc);
                bi += 1;
            }
            let end = start + STRIDE;
            let t = (ph[end] - ph[start]).exp();
            for a in acc.iter_mut().flatten() {
                *a *= t;
            }
            let h = sw.class.widths[p];
            for j in 0..STAGES {
                let i = start + 1 + j;
                self.lower_b(i, &mut fac);
                let e = (ph[end] - ph[i]).exp() * (h * rule.weights[j]);
                for (d, gd) in g.iter().enumerate() {
                    let w = e * gd[i];
                    for (a, f) in acc[d].iter_mut().zip(&fac) {
                        *a += w * f;
                    }
                }
            }
        }
        lower[nb - 1].clone_from(&acc);
        // Upper sweep.
        let mut upper = vec![vec![vec![C64::new(0.0, 0.0); q]; nd]; nb];
        let mut acc = vec![vec![C64::new(0.0, 0.0); q]; nd];
        let mut bi = nb - 1;
        for p in (0..np).rev() {
            let end = STRIDE * (p + 1);
            if breaks[bi] == end {
                upper[bi].clone_from(&acc);
                bi = bi.saturating_sub(1);
            }
            let start = STRIDE * p;
            let t = (ph[end] - ph[start]).exp();
            for a in acc.iter_mut().flatten() {
                *a *= t;
            }
            let h = sw.class.widths[p];
            for j in 0..STAGES {
                let i = start + 1 + j;
                self.upper_d(i, &mut fac);
                let e = (ph[i] - ph[start]).exp() * (h * rule.weights[j]);
                for (d, gd) in g.iter().enumerate() {
                    let w = e * gd[i];
                    for (a, f) in acc[d].iter_mut().zip(&fac) {
                        *a += w * f;
                    }
                }
            }
        }
        upper[0].clone_from(&acc);
        // Combine.
        let (w12, w34) = self.interior_weights();
        let zero = C64::new(0.0, 0.0);
        let mut out = vec![vec![zero; nb]; nd];
        let mut a = vec![zero; q];
        let mut c = vec![zero; q];
        for (b, &ix) in breaks.iter().enumerate() {
            self.lower_a(ix, &mut a);
            self.upper_c(ix, &mut c);
            let mut inner = vec![zero; nd];
            if w12 != zero || w34 != zero {
                for iy in 0..sw.len() {
                    if iy % STRIDE == 0 {
                        continue;
                    }
                    let (w, v) = if iy < ix { (w12, self.interior(iy, ix)) } else { (w34, self.interior(ix, iy)) };
                    if w == zero || v == zero {
                        continue;
                    }
                    let wt = sw.class.weight(iy);
                    for d in 0..nd {
                        inner[d] += w * v * g[d][iy] * wt;
                    }
                }
            }
            for d in 0..nd {
                let lo: C64 = a.iter().zip(&lower[b][d]).map(|(x, y)| x * y).sum();
                let up: C64 = c.iter().zip(&upper[b][d]).map(|(x, y)| x * y).sum();
                out[d][b] = (lo + up + inner[d]) / sw.local[ix].sqrt_beta_n;
            }
        }
        out
    }
}

fn nearest_break(sweep: &Sweep, x: f64) -> usize {
    let c = &sweep.class;
    *c.break_index.iter().min_by(|&&i, &&j| (c.x(i) - x).abs().total_cmp(&(c.x(j) - x).abs())).unwrap()
}

/// Nodes and weights for ∫₀ᵗ e^{−k²(t−s)} p(s) ds with p a polynomial
/// interpolant on Chebyshev points of [0, t]: the result is Σⱼ Wⱼ p(sⱼ).
#[derive(Debug, Clone)]
pub struct TimeWeights {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<C64>,
    /// e^{−k²t}.
    pub decay: C64,
    pub k2: C64,
    /// Row j maps node values to the j-th derivative of the interpolant at t.
    end_derivatives: Vec<Vec<f64>>,
}

/// Leading terms p⁽ʲ⁾(t)/k^{2j+2} removed by [`TimeWeights::apply_decaying`].
pub const NON_DECAYING_TERMS: usize = 2;

/// Derivatives of the Chebyshev interpolant on [0, t] at s = t, as rows
/// acting on the node values.
fn end_derivatives(d: usize, t: f64, orders: usize) -> Vec<Vec<f64>> {
    (0..orders)
        .map(|j| {
            // T_n^{(j)}(1) = Π_{m<j} (n² − m²)/(2m + 1).
            let tn: Vec<f64> = (0..d)
                .map(|n| (0..j).map(|m| ((n * n) as f64 - (m * m) as f64) / (2 * m + 1) as f64).product())
                .collect();
            let scale = (2.0 / t).powi(j as i32);
            (0..d)
                .map(|i| {
                    let th = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * d) as f64;
                    let sum: f64 = (0..d)
                        .map(|n| {
                            let c = if n == 0 { 1.0 / d as f64 } else { 2.0 / d as f64 };
                            c * (n as f64 * th).cos() * tn[n]
                        })
                        .sum();
                    sum * scale
                })
                .collect()
        })
        .collect()
}

/// Chebyshev degree used for time interpolation on [0, t].
pub fn time_degree(t: f64) -> usize {
    24 + (4.0 * t).ceil() as usize
}

impl TimeWeights {
    pub fn new(k2: C64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(UtmError::Argument("time weights need t > 0".into()));
        }
        if -k2.re * t > 700.0 {
            return Err(UtmError::Stability(format!("Re(k²)t = {:.1}", k2.re * t)));
        }
        let d = time_degree(t);
        let basis = ChebyshevBasis::new(d, 0.0, t);
        let tau_max = if k2.re > 0.0 { t.min(45.0 / k2.re) } else { t };
        let h = (1.0 / k2.norm()).min(t / 4.0);
        let panels = (tau_max / h).ceil().max(1.0) as usize;
        let h = tau_max / panels as f64;
        let rule = gauss_legendre(16);
        let mut weights = vec![C64::new(0.0, 0.0); d];
        let mut ell = vec![0.0; d];
        for p in 0..panels {
            for (c, w) in rule.nodes.iter().zip(&rule.weights) {
                let tau = h * (p as f64 + c);
                let e = (-k2 * tau).exp() * (w * h);
                basis.basis_at(t - tau, &mut ell);
                for (wj, lj) in weights.iter_mut().zip(&ell) {
                    *wj += e * lj;
                }
            }
        }
        Ok(TimeWeights {
            t,
            nodes: basis.points.clone(),
            weights,
            decay: (-k2 * t).exp(),
            k2,
            end_derivatives: end_derivatives(d, t, NON_DECAYING_TERMS),
        })
    }

    /// Σⱼ Wⱼ v(sⱼ).
    pub fn apply(&self, values: &[C64]) -> C64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// [`apply`](Self::apply) minus Σⱼ (−1)ʲ p⁽ʲ⁾(t)/k^{2j+2}. The removed
    /// terms carry no e^{−k²t} and are analytic and decaying in the exterior
    /// region, so their contour integral vanishes; keeping them would leave
    /// an O(1/K_max) truncation error at the boundary.
    pub fn apply_decaying(&self, values: &[C64]) -> C64 {
        let mut out = self.apply(values);
        let mut power = self.k2;
        for (j, row) in self.end_derivatives.iter().enumerate() {
            let dj: C64 = row.iter().zip(values).map(|(r, v)| v * *r).sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out -= dj * sign / power;
            power *= self.k2;
        }
        out
    }
}

/// 𝔉ₘ(k², t)e^{−k²t} = −f_m(0)e^{−k²t}/k² − (1/k²)∫₀ᵗ e^{−k²(t−s)} f_m'(s) ds.
pub fn fm_frak_scaled(k2: C64, tw: &TimeWeights, fm0: C64, fm_prime_at_nodes: &[C64]) -> C64 {
    -(fm0 * tw.decay + tw.apply(fm_prime_at_nodes)) / k2
}

/// [`fm_frak_scaled`] without the terms that do not decay in time.
pub fn fm_frak_decaying(k2: C64, tw: &TimeWeights, fm0: C64, fm_prime_at_nodes: &[C64]) -> C64 {
    -(fm0 * tw.decay + tw.apply_decaying(fm_prime_at_nodes)) / k2
}

/// 𝔉ₘ(k², t)e^{−k²t} for a boundary function and its derivative.
pub fn fm_frak(k2: C64, t: f64, fm: &Func, fm_prime: &Func) -> Result<C64> {
    let tw = TimeWeights::new(k2, t)?;
    let vals: Vec<C64> = tw.nodes.iter().map(|&s| fm_prime(s)).collect();
    Ok(fm_frak_scaled(k2, &tw, fm(0.0), &vals))
}

/// F_m(k², t) = ∫₀ᵗ e^{k²s} f_m(s) ds by adaptive quadrature.
pub fn fm(k2: C64, t: f64, f: &Func) -> Result<C64> {
    if k2.re * t > 700.0 {
        return Err(UtmError::Stability(format!("Re(k²)t = {:.1}", k2.re * t)));
    }
    integrate(|s| (k2 * s).exp() * f(s), 0.0, t, QuadOptions::default())
}

/// 𝔣_α(k², y, t)e^{−k²t} from f_α(y, 0) and f_{α,s}(y, ·) at the time nodes.
pub fn f_frak_scaled(k2: C64, tw: &TimeWeights, f_alpha0: C64, f_alpha_s_at_nodes: &[C64]) -> C64 {
    fm_frak_scaled(k2, tw, f_alpha0, f_alpha_s_at_nodes)
}

/// Φ₀(k, x) at every breakpoint of the context's mesh.
pub fn phi0(ctx: &KernelContext, data: &ProblemData) -> Result<Vec<C64>> {
    let nb = ctx.sweep.class.break_index.len();
    let Some(q0) = &data.q0 else {
        return Ok(vec![C64::new(0.0, 0.0); nb]);
    };
    let alpha = &ctx_profile(ctx).alpha;
    let dens: Vec<C64> = (0..ctx.sweep.len())
        .map(|i| {
            let x = ctx.sweep.class.x(i);
            q0(x) / alpha(x)
        })
        .collect();
    Ok(ctx.transform(&[&dens]).remove(0))
}

/// Φ_𝔣(k, x, t)e^{−k²t} at every breakpoint.
pub fn phi_f_deformed(ctx: &KernelContext, t: f64, data: &ProblemData) -> Result<Vec<C64>> {
    let nb = ctx.sweep.class.break_index.len();
    let Some(f) = &data.f else {
        return Ok(vec![C64::new(0.0, 0.0); nb]);
    };
    let k = match ctx.k {
        Wavenumber::Physical(k) => k,
        Wavenumber::Reduced(_) => return Err(UtmError::Argument("data transforms need the physical k".into())),
    };
    let k2 = k * k;
    let tw = TimeWeights::new(k2, t)?;
    let alpha = &ctx_profile(ctx).alpha;
    let mut vals = vec![C64::new(0.0, 0.0); tw.nodes.len()];
    let dens: Vec<C64> = (0..ctx.sweep.len())
        .map(|i| {
            if i % STRIDE == 0 {
                return C64::new(0.0, 0.0);
            }
            let y = ctx.sweep.class.x(i);
            let a = alpha(y);
            for (v, &s) in vals.iter_mut().zip(&tw.nodes) {
                *v = data.forcing_rate(y, s) / a;
            }
            f_frak_scaled(k2, &tw, f(y, 0.0) / a, &vals)
        })
        .collect();
    Ok(ctx.transform(&[&dens]).remove(0))
}

fn ctx_profile(ctx: &KernelContext) -> &CoefficientProfile {
    &ctx.profile
}
