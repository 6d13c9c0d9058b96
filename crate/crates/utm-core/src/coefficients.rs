//! Coefficient triple (α, β, γ), dispersion functions and contour geometry.
//!
//! The dispersion quantities follow the continuous-branch conventions
//!
//! ```text
//! μ    = |αβ|^{-1/2} e^{-i(θα+θβ)/2}
//! 𝔤    = (1 + γ/k²)^{1/2}            (principal branch)
//! 𝔫    = μ 𝔤
//! √βμ  = |β/α|^{1/4} e^{i(θβ-θα)/4}
//! √β𝔫  = √βμ · √𝔤
//! ```
//!
//! where θα, θβ are arguments of α, β made continuous in x by unwrapping on a
//! fine grid anchored at the left edge of the (truncated) domain, or at
//! x = 0 for the whole line.

use crate::error::{Result, UtmError};
use crate::numerics::diff;
use crate::numerics::gauss::gauss_legendre;
use crate::{c64, C64, I};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

/// A complex-valued function of one real variable.
pub type Func = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Wraps a closure as a [`Func`].
pub fn func<F: Fn(f64) -> C64 + Send + Sync + 'static>(f: F) -> Func {
    Arc::new(f)
}

/// Constant function.
pub fn constant(v: C64) -> Func {
    Arc::new(move |_| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    WholeLine,
    HalfLine,
    FiniteInterval,
}

/// Spatial domain. Unbounded kinds carry a truncation extent: the half-width
/// of the window about 0 for the whole line, the length beyond `x_l` for the
/// half line. `None` selects the extent automatically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    pub x_l: Option<f64>,
    pub x_r: Option<f64>,
    pub truncation_extent: Option<f64>,
}

impl Domain {
    pub fn whole_line() -> Self {
        Domain { kind: DomainKind::WholeLine, x_l: None, x_r: None, truncation_extent: None }
    }

    pub fn half_line(x_l: f64) -> Self {
        Domain { kind: DomainKind::HalfLine, x_l: Some(x_l), x_r: None, truncation_extent: None }
    }

    pub fn interval(x_l: f64, x_r: f64) -> Self {
        Domain { kind: DomainKind::FiniteInterval, x_l: Some(x_l), x_r: Some(x_r), truncation_extent: None }
    }

    pub fn with_truncation(mut self, extent: f64) -> Self {
        self.truncation_extent = Some(extent);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::WholeLine => {}
            DomainKind::HalfLine => {
                if !self.x_l.is_some_and(f64::is_finite) {
                    return Err(UtmError::Argument("half line needs a finite x_l".into()));
                }
            }
            DomainKind::FiniteInterval => match (self.x_l, self.x_r) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() && a < b => {}
                _ => return Err(UtmError::Argument("interval needs finite x_l < x_r".into())),
            },
        }
        if let Some(e) = self.truncation_extent {
            if !(e > 0.0 && e.is_finite()) {
                return Err(UtmError::Argument("truncation extent must be positive".into()));
            }
        }
        Ok(())
    }

    /// Window `[a, b]` for a given truncation extent.
    fn window(&self, extent: f64) -> (f64, f64) {
        match self.kind {
            DomainKind::WholeLine => (-extent, extent),
            DomainKind::HalfLine => {
                let a = self.x_l.unwrap();
                (a, a + extent)
            }
            DomainKind::FiniteInterval => (self.x_l.unwrap(), self.x_r.unwrap()),
        }
    }
}

/// α, β, γ with optional analytic derivatives.
#[derive(Clone)]
pub struct CoefficientProfile {
    pub alpha: Func,
    pub beta: Func,
    pub gamma: Func,
    pub alpha_prime: Option<Func>,
    pub beta_prime: Option<Func>,
    pub gamma_prime: Option<Func>,
    pub domain: Domain,
    /// Set when γ is known to be constant; enables the reduced wavenumber
    /// 𝓀 = k𝔤(k) in the eigenvalue search.
    pub gamma_is_constant: bool,
}

impl fmt::Debug for CoefficientProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientProfile")
            .field("domain", &self.domain)
            .field("gamma_is_constant", &self.gamma_is_constant)
            .finish_non_exhaustive()
    }
}

impl CoefficientProfile {
    pub fn new(alpha: Func, beta: Func, gamma: Func, domain: Domain) -> Self {
        CoefficientProfile {
            alpha,
            beta,
            gamma,
            alpha_prime: None,
            beta_prime: None,
            gamma_prime: None,
            domain,
            gamma_is_constant: false,
        }
    }

    /// Constant coefficients.
    pub fn constant(alpha: C64, beta: C64, gamma: C64, domain: Domain) -> Self {
        let zero = constant(C64::new(0.0, 0.0));
        CoefficientProfile {
            alpha: constant(alpha),
            beta: constant(beta),
            gamma: constant(gamma),
            alpha_prime: Some(zero.clone()),
            beta_prime: Some(zero.clone()),
            gamma_prime: Some(zero),
            domain,
            gamma_is_constant: true,
        }
    }

    pub fn with_derivatives(mut self, alpha_prime: Func, beta_prime: Func, gamma_prime: Func) -> Self {
        self.alpha_prime = Some(alpha_prime);
        self.beta_prime = Some(beta_prime);
        self.gamma_prime = Some(gamma_prime);
        self
    }

    pub fn with_constant_gamma(mut self) -> Self {
        self.gamma_is_constant = true;
        self
    }

    pub fn d_alpha(&self, x: f64) -> C64 {
        match &self.alpha_prime {
            Some(f) => f(x),
            None => diff::derivative(self.alpha.as_ref(), x, diff::DEFAULT_STEP),
        }
    }

    pub fn d_beta(&self, x: f64) -> C64 {
        match &self.beta_prime {
            Some(f) => f(x),
            None => diff::derivative(self.beta.as_ref(), x, diff::DEFAULT_STEP),
        }
    }

    pub fn d_gamma(&self, x: f64) -> C64 {
        if self.gamma_is_constant {
            return C64::new(0.0, 0.0);
        }
        match &self.gamma_prime {
            Some(f) => f(x),
            None => diff::derivative(self.gamma.as_ref(), x, diff::DEFAULT_STEP),
        }
    }
}

/// Preset coefficient families. All presets use α = 1 except `Cgl`, and a
/// constant γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Constant { alpha: C64, beta: C64, gamma: C64 },
    /// β = b0 + b1·x.
    Linear { b0: f64, b1: f64, gamma: C64 },
    /// β = 1 + A·exp(-((x - c)/w)²).
    GaussianBump { amplitude: f64, center: f64, width: f64, gamma: C64 },
    /// β = 1 + A·tanh((x - c)/w).
    TanhStep { amplitude: f64, center: f64, width: f64, gamma: C64 },
    /// α = 1 + i·x·sin(2πx), β = 1, γ = 1.
    Cgl,
}

impl Preset {
    pub fn profile(&self, domain: Domain) -> CoefficientProfile {
        let zero = constant(C64::new(0.0, 0.0));
        let one = constant(C64::new(1.0, 0.0));
        match *self {
            Preset::Constant { alpha, beta, gamma } => CoefficientProfile::constant(alpha, beta, gamma, domain),
            Preset::Linear { b0, b1, gamma } => CoefficientProfile::new(
                one.clone(),
                func(move |x| c64(b0 + b1 * x, 0.0)),
                constant(gamma),
                domain,
            )
            .with_derivatives(zero.clone(), constant(c64(b1, 0.0)), zero)
            .with_constant_gamma(),
            Preset::GaussianBump { amplitude, center, width, gamma } => CoefficientProfile::new(
                one.clone(),
                func(move |x| {
                    let s = (x - center) / width;
                    c64(1.0 + amplitude * (-s * s).exp(), 0.0)
                }),
                constant(gamma),
                domain,
            )
            .with_derivatives(
                zero.clone(),
                func(move |x| {
                    let s = (x - center) / width;
                    c64(-2.0 * s / width * amplitude * (-s * s).exp(), 0.0)
                }),
                zero,
            )
            .with_constant_gamma(),
            Preset::TanhStep { amplitude, center, width, gamma } => CoefficientProfile::new(
                one.clone(),
                func(move |x| c64(1.0 + amplitude * ((x - center) / width).tanh(), 0.0)),
                constant(gamma),
                domain,
            )
            .with_derivatives(
                zero.clone(),
                func(move |x| {
                    let c = ((x - center) / width).cosh();
                    c64(amplitude / (width * c * c), 0.0)
                }),
                zero,
            )
            .with_constant_gamma(),
            Preset::Cgl => CoefficientProfile::new(
                func(|x| c64(1.0, x * (2.0 * PI * x).sin())),
                one.clone(),
                one,
                domain,
            )
            .with_derivatives(
                func(|x| c64(0.0, (2.0 * PI * x).sin() + 2.0 * PI * x * (2.0 * PI * x).cos())),
                zero.clone(),
                zero,
            )
            .with_constant_gamma(),
        }
    }
}

/// Coefficient data at one point, independent of k.
#[derive(Debug, Clone, Copy)]
pub struct NodeSample {
    pub x: f64,
    pub beta: C64,
    pub gamma: C64,
    pub gamma_prime: C64,
    pub mu: C64,
    pub sqrt_beta_mu: C64,
    /// ½(β'/β − α'/α).
    pub eta0: C64,
}

/// The five dispersion quantities at one (k, x).
#[derive(Debug, Clone, Copy)]
pub struct Dispersion {
    pub mu: C64,
    pub g: C64,
    pub n: C64,
    pub beta_n: C64,
    pub sqrt_beta_n: C64,
}

/// Spectral parameter. `Physical(k)` is the transform variable; `Reduced(w)`
/// is 𝓀 = k𝔤(k), available when γ is constant, in which every accumulation
/// function depends on k only through 𝓀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wavenumber {
    Physical(C64),
    Reduced(C64),
}

/// Local quantities driving the accumulation ODEs at one node.
#[derive(Debug, Clone, Copy)]
pub struct Local {
    /// k𝔫(k, x).
    pub omega: C64,
    /// (β𝔫)'/(β𝔫).
    pub eta: C64,
    /// √(β𝔫)(k, x).
    pub sqrt_beta_n: C64,
}

impl Wavenumber {
    pub fn value(&self) -> C64 {
        match *self {
            Wavenumber::Physical(k) | Wavenumber::Reduced(k) => k,
        }
    }

    pub fn local(&self, s: &NodeSample) -> Local {
        match *self {
            Wavenumber::Physical(k) => {
                let k2 = k * k;
                let g = (C64::new(1.0, 0.0) + s.gamma / k2).sqrt();
                Local {
                    omega: k * s.mu * g,
                    eta: s.eta0 + s.gamma_prime / ((k2 + s.gamma) * 2.0),
                    sqrt_beta_n: s.sqrt_beta_mu * g.sqrt(),
                }
            }
            Wavenumber::Reduced(w) => Local { omega: w * s.mu, eta: s.eta0, sqrt_beta_n: s.sqrt_beta_mu },
        }
    }
}

/// Sampled sup/inf bounds (with the 10% safety margin applied).
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub m_gamma: f64,
    pub m_ab_min: f64,
    pub m_ab_max: f64,
    /// sup |arg(αβ)| as measured (no margin).
    pub theta_raw: f64,
    /// Θ with the safety margin, kept below π/2 when the raw value is.
    pub theta: f64,
    pub mu_max: f64,
    /// ∫|β'/β − α'/α| over the window.
    pub l1_log_derivative: f64,
    /// ∫|γ'| over the window.
    pub l1_gamma_prime: f64,
}

impl Bounds {
    /// Lower and upper bounds on |𝔫(k, x)| for |k| ≥ r.
    pub fn n_bounds(&self, r: f64) -> (f64, f64) {
        let lo = (1.0 / self.m_ab_max.sqrt()) * (1.0 - self.m_gamma / (r * r)).max(0.0).sqrt();
        let hi = (1.0 / self.m_ab_min.sqrt()) * (1.0 + self.m_gamma / (r * r)).sqrt();
        (lo, hi)
    }

    /// The decay constant m_{i𝔫} for a given contour.
    pub fn m_in(&self, r: f64, theta0: f64) -> f64 {
        let theta1 = (self.theta + FRAC_PI_2) / 4.0;
        self.n_bounds(r).0 * (theta0 - theta1) / 4.0
    }
}

/// One line of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    pub theta: f64,
    pub m_ab: f64,
    pub m_gamma: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Minimum number of unwrapping samples.
const MIN_SAMPLES: usize = 2048;
const MAX_SAMPLES: usize = 1 << 18;

/// Sampled branch data and bounds for a profile. Immutable after
/// construction.
#[derive(Clone)]
pub struct DispersionCache {
    profile: CoefficientProfile,
    a: f64,
    b: f64,
    xs: Vec<f64>,
    theta_alpha: Vec<f64>,
    theta_beta: Vec<f64>,
    mfrak: Vec<C64>,
    bounds: Bounds,
    non_finite: Option<(f64, &'static str)>,
}

impl fmt::Debug for DispersionCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersionCache")
            .field("window", &(self.a, self.b))
            .field("samples", &self.xs.len())
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

fn unwrap_from(anchor: usize, principal: &[f64]) -> (Vec<f64>, f64) {
    let n = principal.len();
    let mut out = vec![0.0; n];
    out[anchor] = principal[anchor];
    let mut max_jump: f64 = 0.0;
    for i in (anchor + 1)..n {
        let mut d = principal[i] - principal[i - 1];
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        max_jump = max_jump.max(d.abs());
        out[i] = out[i - 1] + d;
    }
    for i in (0..anchor).rev() {
        let mut d = principal[i] - principal[i + 1];
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        max_jump = max_jump.max(d.abs());
        out[i] = out[i + 1] + d;
    }
    (out, max_jump)
}

impl DispersionCache {
    /// Samples the profile, unwraps the arguments and measures the bounds.
    /// Unbounded domains without an explicit extent are truncated where
    /// the L¹ tail of the logarithmic derivatives drops below 1e-12.
    pub fn new(profile: &CoefficientProfile) -> Result<Self> {
        profile.domain.validate()?;
        let extent = match (profile.domain.kind, profile.domain.truncation_extent) {
            (DomainKind::FiniteInterval, _) => 0.0,
            (_, Some(e)) => e,
            (_, None) => auto_extent(profile),
        };
        let (a, b) = profile.domain.window(extent);
        let anchor_x = match profile.domain.kind {
            DomainKind::WholeLine => 0.0,
            _ => a,
        };
        let mut n = MIN_SAMPLES;
        loop {
            let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
            let mut pa = Vec::with_capacity(n + 1);
            let mut pb = Vec::with_capacity(n + 1);
            let mut non_finite = None;
            for &x in &xs {
                let (al, be) = ((profile.alpha)(x), (profile.beta)(x));
                if !(al.re.is_finite() && al.im.is_finite()) {
                    non_finite.get_or_insert((x, "alpha"));
                }
                if !(be.re.is_finite() && be.im.is_finite()) {
                    non_finite.get_or_insert((x, "beta"));
                }
                pa.push(al.arg());
                pb.push(be.arg());
            }
            let anchor = (((anchor_x - a) / (b - a)) * n as f64).round().clamp(0.0, n as f64) as usize;
            let (ta, ja) = unwrap_from(anchor, &pa);
            let (tb, jb) = unwrap_from(anchor, &pb);
            if (ja.max(jb) < FRAC_PI_2) || n >= MAX_SAMPLES {
                let mut cache = DispersionCache {
                    profile: profile.clone(),
                    a,
                    b,
                    xs,
                    theta_alpha: ta,
                    theta_beta: tb,
                    mfrak: Vec::new(),
                    bounds: Bounds {
                        m_gamma: 0.0,
                        m_ab_min: 0.0,
                        m_ab_max: 0.0,
                        theta_raw: 0.0,
                        theta: 0.0,
                        mu_max: 0.0,
                        l1_log_derivative: 0.0,
                        l1_gamma_prime: 0.0,
                    },
                    non_finite,
                };
                cache.finish()?;
                return Ok(cache);
            }
            n *= 2;
        }
    }

    fn finish(&mut self) -> Result<()> {
        let p = &self.profile;
        let mut m_gamma: f64 = 0.0;
        let mut ab_min = f64::INFINITY;
        let mut ab_max: f64 = 0.0;
        let mut theta: f64 = 0.0;
        let mut l1_ld = 0.0;
        let mut l1_gp = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (i, &x) in self.xs.iter().enumerate() {
            let (al, be, ga) = ((p.alpha)(x), (p.beta)(x), (p.gamma)(x));
            if !(ga.re.is_finite() && ga.im.is_finite()) {
                self.non_finite.get_or_insert((x, "gamma"));
            }
            m_gamma = m_gamma.max(ga.norm());
            let ab = (al * be).norm();
            ab_min = ab_min.min(ab);
            ab_max = ab_max.max(ab);
            theta = theta.max((self.theta_alpha[i] + self.theta_beta[i]).abs());
            let ld = (p.d_beta(x) / be - p.d_alpha(x) / al).norm();
            let gp = p.d_gamma(x).norm();
            if let Some((lp, gpp)) = prev {
                let h = x - self.xs[i - 1];
                l1_ld += 0.5 * h * (ld + lp);
                l1_gp += 0.5 * h * (gp + gpp);
            }
            prev = Some((ld, gp));
        }
        let theta_safe = (theta * 1.1).min(0.5 * (theta + FRAC_PI_2));
        self.bounds = Bounds {
            m_gamma: m_gamma * 1.1,
            m_ab_min: ab_min / 1.1,
            m_ab_max: ab_max * 1.1,
            theta_raw: theta,
            theta: theta_safe,
            mu_max: 1.1 / ab_min.sqrt(),
            l1_log_derivative: l1_ld * 1.1,
            l1_gamma_prime: l1_gp * 1.1,
        };
        // Cumulative 𝔪 on the sample grid, 8-point Gauss per interval.
        let rule = gauss_legendre(8);
        let mut m = Vec::with_capacity(self.xs.len());
        m.push(C64::new(0.0, 0.0));
        for w in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[w], self.xs[w + 1]);
            let mut s = C64::new(0.0, 0.0);
            for (c, wt) in rule.nodes.iter().zip(&rule.weights) {
                s += self.mu(x0 + (x1 - x0) * c) * *wt;
            }
            m.push(m[w] + s * (x1 - x0));
        }
        self.mfrak = m;
        Ok(())
    }

    pub fn profile(&self) -> &CoefficientProfile {
        &self.profile
    }

    /// Computational window `[a, b]` (the truncated domain).
    pub fn window(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn sample_count(&self) -> usize {
        self.xs.len()
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.xs.len() - 1;
        let u = ((x - self.a) / (self.b - self.a) * n as f64).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        (i, u - i as f64)
    }

    fn branch(principal: f64, guess: f64) -> f64 {
        principal + 2.0 * PI * ((guess - principal) / (2.0 * PI)).round()
    }

    /// Continuous arguments (θα(x), θβ(x)).
    pub fn thetas(&self, x: f64) -> (f64, f64) {
        let (i, f) = self.locate(x);
        let ga = self.theta_alpha[i] * (1.0 - f) + self.theta_alpha[i + 1] * f;
        let gb = self.theta_beta[i] * (1.0 - f) + self.theta_beta[i + 1] * f;
        let p = &self.profile;
        (Self::branch((p.alpha)(x).arg(), ga), Self::branch((p.beta)(x).arg(), gb))
    }

    pub fn mu(&self, x: f64) -> C64 {
        let p = &self.profile;
        let (ta, tb) = self.thetas(x);
        let m = ((p.alpha)(x) * (p.beta)(x)).norm().powf(-0.5);
        C64::from_polar(m, -0.5 * (ta + tb))
    }

    pub fn sqrt_beta_mu(&self, x: f64) -> C64 {
        let p = &self.profile;
        let (ta, tb) = self.thetas(x);
        let m = ((p.beta)(x).norm() / (p.alpha)(x).norm()).powf(0.25);
        C64::from_polar(m, 0.25 * (tb - ta))
    }

    /// 𝔲(x) = (β'/β − α'/α)/μ.
    pub fn ufrak(&self, x: f64) -> C64 {
        let p = &self.profile;
        (p.d_beta(x) / (p.beta)(x) - p.d_alpha(x) / (p.alpha)(x)) / self.mu(x)
    }

    /// 𝔪(x) = ∫_{a}^{x} μ, with `a` the left edge of the window.
    pub fn mfrak(&self, x: f64) -> C64 {
        let (i, _) = self.locate(x);
        let x0 = self.xs[i];
        let rule = gauss_legendre(8);
        let mut s = C64::new(0.0, 0.0);
        for (c, wt) in rule.nodes.iter().zip(&rule.weights) {
            s += self.mu(x0 + (x - x0) * c) * *wt;
        }
        self.mfrak[i] + s * (x - x0)
    }

    pub fn sample(&self, x: f64) -> NodeSample {
        let p = &self.profile;
        let (al, be) = ((p.alpha)(x), (p.beta)(x));
        let (ta, tb) = self.thetas(x);
        let mu = C64::from_polar((al * be).norm().powf(-0.5), -0.5 * (ta + tb));
        let sbm = C64::from_polar((be.norm() / al.norm()).powf(0.25), 0.25 * (tb - ta));
        NodeSample {
            x,
            beta: be,
            gamma: (p.gamma)(x),
            gamma_prime: p.d_gamma(x),
            mu,
            sqrt_beta_mu: sbm,
            eta0: (p.d_beta(x) / be - p.d_alpha(x) / al) * 0.5,
        }
    }

    /// (μ, 𝔤, 𝔫, β𝔫, √β𝔫) at (k, x).
    pub fn dispersion(&self, k: C64, x: f64) -> Result<Dispersion> {
        let radius = self.bounds.m_gamma.sqrt() / 1.1f64.sqrt();
        if k.norm() <= radius {
            return Err(UtmError::ContourRadius { modulus: k.norm(), radius });
        }
        let s = self.sample(x);
        let g = (C64::new(1.0, 0.0) + s.gamma / (k * k)).sqrt();
        let n = s.mu * g;
        Ok(Dispersion { mu: s.mu, g, n, beta_n: s.beta * n, sqrt_beta_n: s.sqrt_beta_mu * g.sqrt() })
    }

    /// Checks the standing assumptions on the sample grid.
    pub fn validate_assumptions(&self) -> Result<ValidationReport> {
        if let Some((x, what)) = self.non_finite {
            return Err(UtmError::Evaluation { x, what: what.to_string() });
        }
        let b = &self.bounds;
        let checks = vec![
            AssumptionCheck { name: "dissipative", passed: b.theta_raw < FRAC_PI_2 - 1e-12, measured: b.theta_raw },
            AssumptionCheck { name: "inf|alpha*beta| > 0", passed: b.m_ab_min > 0.0, measured: b.m_ab_min * 1.1 },
            AssumptionCheck { name: "sup|gamma| finite", passed: b.m_gamma.is_finite(), measured: b.m_gamma / 1.1 },
            AssumptionCheck {
                name: "L1(beta'/beta - alpha'/alpha) finite",
                passed: b.l1_log_derivative.is_finite(),
                measured: b.l1_log_derivative / 1.1,
            },
            AssumptionCheck {
                name: "L1(gamma') finite",
                passed: b.l1_gamma_prime.is_finite(),
                measured: b.l1_gamma_prime / 1.1,
            },
        ];
        Ok(ValidationReport { checks, theta: b.theta_raw, m_ab: b.m_ab_min * 1.1, m_gamma: b.m_gamma / 1.1 })
    }

    /// Largest relative jump of the finite-difference 𝔲' between adjacent
    /// samples; a proxy for the absolute continuity of 𝔲 needed by Case 4.
    pub fn ufrak_smoothness(&self) -> f64 {
        let n = 512;
        let h = (self.b - self.a) / n as f64;
        let up: Vec<C64> = (1..n)
            .map(|i| {
                let x = self.a + h * i as f64;
                diff::derivative(&|y| self.ufrak(y), x, 1e-4 * h.min(1.0))
            })
            .collect();
        let scale = up.iter().map(|v| v.norm()).fold(1.0, f64::max);
        up.windows(2).map(|w| (w[1] - w[0]).norm() / scale).fold(0.0, f64::max)
    }

    /// Contour radius and ray angle: θ₁ = (Θ + π/2)/4, θ₀ the midpoint of
    /// (θ₁, π/4), r = safety·√(M_γ + 1).
    pub fn contour_params(&self, safety: f64) -> Result<(f64, f64)> {
        if self.bounds.theta_raw >= FRAC_PI_2 {
            return Err(UtmError::Dissipativity { theta: self.bounds.theta_raw });
        }
        if safety < 2.0 {
            return Err(UtmError::Argument("contour safety factor must be at least 2".into()));
        }
        Ok(contour_geometry(self.bounds.theta, self.bounds.m_gamma / 1.1, safety))
    }
}

/// (r, θ₀) from Θ and M_γ.
pub fn contour_geometry(theta: f64, m_gamma: f64, safety: f64) -> (f64, f64) {
    let theta1 = (theta + FRAC_PI_2) / 4.0;
    let theta0 = 0.5 * (theta1 + FRAC_PI_4);
    (safety * (m_gamma + 1.0).sqrt(), theta0)
}

/// Picks a whole/half-line truncation from the decay of the coefficient
/// log-derivatives, never below 8.
fn auto_extent(p: &CoefficientProfile) -> f64 {
    let density = |x: f64| {
        let ld = (p.d_beta(x) / (p.beta)(x) - p.d_alpha(x) / (p.alpha)(x)).norm();
        ld + p.d_gamma(x).norm()
    };
    let origin = match p.domain.kind {
        DomainKind::HalfLine => p.domain.x_l.unwrap(),
        _ => 0.0,
    };
    let mut extent = 8.0;
    while extent < 512.0 {
        // Trapezoid estimate of the tail mass on [extent, 4·extent].
        let n = 400;
        let h = 3.0 * extent / n as f64;
        let mut tail = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let off = extent + h * i as f64;
            tail += w * h * density(origin + off);
            if p.domain.kind == DomainKind::WholeLine {
                tail += w * h * density(-off);
            }
        }
        if tail < 1e-12 {
            return extent;
        }
        extent *= 2.0;
    }
    extent
}

/// `i` as a convenience for callers composing expressions.
pub const IMAG: C64 = I;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_dispersion_is_trivial() {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), Domain::interval(0.0, 1.0));
        let c = DispersionCache::new(&p).unwrap();
        let d = c.dispersion(c64(3.0, 2.0), 0.4).unwrap();
        for v in [d.mu, d.g, d.n, d.beta_n, d.sqrt_beta_n] {
            assert!((v - 1.0).norm() < 1e-15);
        }
        let r = c.validate_assumptions().unwrap();
        assert!(r.all_passed());
        assert_eq!(r.theta, 0.0);
        assert!((r.m_ab - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_one_at_k_two() {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), Domain::interval(0.0, 1.0));
        let c = DispersionCache::new(&p).unwrap();
        let d = c.dispersion(c64(2.0, 0.0), 0.5).unwrap();
        assert!((d.g - 1.25f64.sqrt()).norm() < 1e-15);
        assert!(matches!(c.dispersion(c64(0.5, 0.0), 0.5), Err(UtmError::ContourRadius { .. })));
    }

    #[test]
    fn cgl_profile_passes() {
        let p = Preset::Cgl.profile(Domain::interval(0.0, 1.0));
        let c = DispersionCache::new(&p).unwrap();
        let r = c.validate_assumptions().unwrap();
        assert!(r.all_passed());
        assert!(r.theta > 0.5 && r.theta < FRAC_PI_2);
        assert!((c.mu(0.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn rotated_alpha_fails_dissipativity() {
        let p = CoefficientProfile::constant(I, c64(1.0, 0.0), c64(0.0, 0.0), Domain::interval(0.0, 1.0));
        let c = DispersionCache::new(&p).unwrap();
        let r = c.validate_assumptions().unwrap();
        assert!(!r.all_passed());
        assert_eq!(r.first_failure().unwrap().name, "dissipative");
        assert!(matches!(c.contour_params(2.0), Err(UtmError::Dissipativity { .. })));
    }

    #[test]
    fn exponential_alpha_ufrak() {
        let p = CoefficientProfile::new(
            func(|x| c64(x.exp(), 0.0)),
            constant(c64(1.0, 0.0)),
            constant(c64(0.0, 0.0)),
            Domain::interval(0.0, 1.0),
        );
        let c = DispersionCache::new(&p).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((c.ufrak(x) - c64(-(x / 2.0).exp(), 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn contour_geometry_examples() {
        let (r, t0) = contour_geometry(0.0, 0.0, 2.0);
        assert_eq!(r, 2.0);
        assert!((t0 - 3.0 * PI / 16.0).abs() < 1e-15);
        let (_, t0) = contour_geometry(FRAC_PI_4, 0.0, 2.0);
        assert!((t0 - 7.0 * PI / 32.0).abs() < 1e-15);
    }
}
