//! Contour construction, k-space quadrature of the solution formula and
//! residual diagnostics.
//!
//! The solution is assembled on the deformed contour ∂Ω_ext(r): a ray from
//! ∞e^{i(π−θ₀)} in to re^{i(π−θ₀)}, the arc |k| = r traversed clockwise to
//! re^{iθ₀}, and a ray out to ∞e^{iθ₀}, truncated at K_max.

use crate::accum::{Mesh, Truncation, DEFAULT_STEP_PARAMETER, STRIDE};
use crate::coefficients::{DispersionCache, DomainKind, Wavenumber};
use crate::delta::{classify, BoundaryCase, BoundaryConditions, Case};
use crate::error::{Result, UtmError};
use crate::kernels::{fm_frak_decaying, time_degree, KernelContext, ProblemData, TimeWeights};
use crate::numerics::gauss::gauss_legendre;
use crate::numerics::interp::ChebyshevBasis;
use crate::{C64, I};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    LeftRay,
    Arc,
    RightRay,
}

/// Quadrature on the truncated contour. Weights include dk.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub r: f64,
    pub theta0: f64,
    pub k_max: f64,
    pub nodes: Vec<C64>,
    pub weights: Vec<C64>,
    pub segments: Vec<Segment>,
}

impl ContourSpec {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Smallest admissible output time.
    pub t_min: f64,
    /// Target size of the neglected contour tail.
    pub tol: f64,
    /// r = safety·√(M_γ + 1).
    pub safety: f64,
    /// Overrides θ₀ (must lie strictly between θ₁ and π/4).
    pub theta0: Option<f64>,
    pub truncation: Truncation,
    /// Multiplies the ray node density.
    pub refine: f64,
    /// Nodes on the arc.
    pub arc_nodes: usize,
    /// Irregular problems refuse points closer than this fraction of the
    /// interval length to an endpoint.
    pub irregular_margin: f64,
    /// Ceiling on contour nodes.
    pub max_nodes: usize,
    /// Mesh step parameter: panels satisfy 2h·max|ω| ≤ this.
    pub step_parameter: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            t_min: 1e-3,
            tol: 1e-12,
            safety: 2.0,
            theta0: None,
            truncation: Truncation::Adaptive,
            refine: 1.0,
            arc_nodes: 64,
            irregular_margin: 0.02,
            max_nodes: 40_000,
            step_parameter: DEFAULT_STEP_PARAMETER,
        }
    }
}

/// Phase advance allowed across one 16-point ray panel.
const RAY_PHASE_PER_PANEL: f64 = 6.0;

/// Solves e^{−K² cos(2θ₀) t}K² = tol for K.
pub fn k_max(theta0: f64, t_min: f64, tol: f64) -> f64 {
    let c = (2.0 * theta0).cos() * t_min;
    let mut k2: f64 = (-tol.ln() / c).max(1.0);
    for _ in 0..200 {
        let next = (k2.ln() - tol.ln()) / c;
        if (next - k2).abs() <= 1e-14 * k2 {
            break;
        }
        k2 = next;
    }
    k2.sqrt()
}

/// Builds the truncated contour for output times in [t_min, t_max] on a
/// window of length `length`.
pub fn build_contour(
    cache: &DispersionCache,
    t_min: f64,
    t_max: f64,
    length: f64,
    opts: &SolverOptions,
) -> Result<ContourSpec> {
    if !(t_min > 0.0) {
        return Err(UtmError::Argument("t_min must be positive".into()));
    }
    let (r, mut theta0) = cache.contour_params(opts.safety)?;
    if let Some(t0) = opts.theta0 {
        let theta1 = (cache.bounds().theta + PI / 2.0) / 4.0;
        if !(t0 > theta1 && t0 < PI / 4.0) {
            return Err(UtmError::Argument(format!("θ₀ = {t0} outside ({theta1}, π/4)")));
        }
        theta0 = t0;
    }
    let kmax = k_max(theta0, t_min, opts.tol).max(2.0 * r);
    let (c2, s2) = ((2.0 * theta0).cos(), (2.0 * theta0).sin());
    let s0 = theta0.sin();
    // Local oscillation rate along a ray: the time factor while it is not
    // negligible, plus the spatial phase over distances that still matter.
    let rate = |s: f64| {
        let time = (2.0 * s * t_max * s2).min(80.0 * s2 / (s * c2));
        let space = length.min(40.0 / (s * s0));
        time + space + 1.0
    };
    let mut edges = vec![r];
    while *edges.last().unwrap() < kmax {
        let s = *edges.last().unwrap();
        let w = (RAY_PHASE_PER_PANEL / rate(s)).min(2.0) / opts.refine;
        edges.push((s + w).min(kmax));
        if 2 * 16 * edges.len() + opts.arc_nodes > opts.max_nodes {
            let suggested = (-(opts.tol.ln()) + 2.0 * s.ln()) / (c2 * s * s);
            return Err(UtmError::Budget { suggested_t_min: suggested.max(t_min) });
        }
    }
    let panels = edges.len() - 1;
    let total = 2 * panels * 16 + opts.arc_nodes;
    let g = gauss_legendre(16);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut segments = Vec::with_capacity(total);
    let left_dir = C64::from_polar(1.0, PI - theta0);
    let right_dir = C64::from_polar(1.0, theta0);
    // Left ray, traversed inward: s from K_max down to r.
    for p in (0..panels).rev() {
        for j in (0..16).rev() {
            let h = edges[p + 1] - edges[p];
            let s = edges[p] + h * g.nodes[j];
            nodes.push(left_dir * s);
            weights.push(-left_dir * (h * g.weights[j]));
            segments.push(Segment::LeftRay);
        }
    }
    // Arc, clockwise from π − θ₀ to θ₀.
    let ga = gauss_legendre(opts.arc_nodes);
    let span = PI - 2.0 * theta0;
    for j in 0..opts.arc_nodes {
        let phi = PI - theta0 - span * ga.nodes[j];
        let k = C64::from_polar(r, phi);
        nodes.push(k);
        weights.push(-I * k * (span * ga.weights[j]));
        segments.push(Segment::Arc);
    }
    for p in 0..panels {
        for j in 0..16 {
            let h = edges[p + 1] - edges[p];
            let s = edges[p] + h * g.nodes[j];
            nodes.push(right_dir * s);
            weights.push(right_dir * (h * g.weights[j]));
            segments.push(Segment::RightRay);
        }
    }
    Ok(ContourSpec { r, theta0, k_max: kmax, nodes, weights, segments })
}

/// A posed problem: coefficients, boundary data and source data.
#[derive(Clone, Debug)]
pub struct Problem {
    pub cache: Arc<DispersionCache>,
    pub bc: BoundaryConditions,
    pub case: Option<BoundaryCase>,
    pub data: ProblemData,
}

impl Problem {
    /// Validates the coefficients and classifies the boundary conditions.
    pub fn new(cache: Arc<DispersionCache>, bc: BoundaryConditions, data: ProblemData) -> Result<Self> {
        let report = cache.validate_assumptions()?;
        if let Some(f) = report.first_failure() {
            if f.name == "dissipative" {
                return Err(UtmError::Dissipativity { theta: f.measured });
            }
            return Err(UtmError::Assumption(format!("{} (measured {})", f.name, f.measured)));
        }
        if bc.kind() != cache.profile().domain.kind {
            return Err(UtmError::Argument("boundary conditions do not match the domain".into()));
        }
        let case = match bc.kind() {
            DomainKind::FiniteInterval => Some(classify(&bc, &cache)?),
            _ => None,
        };
        if let Some(c) = &case {
            if c.case == Case::Unsupported {
                return Err(UtmError::Case(c.warning.clone().unwrap_or_else(|| "no Boundary Case applies".into())));
            }
        }
        Ok(Problem { cache, bc, case, data })
    }

    pub fn is_irregular(&self) -> bool {
        self.case.as_ref().is_some_and(|c| !c.regular)
    }
}

/// Solution on an output grid, by component.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// q[t][x].
    pub q: Vec<Vec<C64>>,
    /// Split by source term; absent for fields produced by the oracles.
    pub components: Option<Components>,
    /// Contour size, zero for oracle fields.
    pub contour_nodes: usize,
    pub k_max: f64,
}

/// q = initial + forcing + b0 + b1, each indexed [t][x].
#[derive(Debug, Clone)]
pub struct Components {
    pub initial: Vec<Vec<C64>>,
    pub forcing: Vec<Vec<C64>>,
    pub b0: Vec<Vec<C64>>,
    pub b1: Vec<Vec<C64>>,
}

impl SolutionField {
    pub fn at(&self, it: usize, ix: usize) -> C64 {
        self.q[it][ix]
    }
}

/// Samples of the data on one mesh class, independent of k.
struct ClassData {
    q_alpha: Vec<C64>,
    /// Per output time: f_α(y, 0) and f_{α,s}(y, s_j) at stage points.
    forcing: Vec<(Vec<C64>, Vec<Vec<C64>>)>,
}

struct DataCache {
    slots: Vec<OnceLock<Arc<ClassData>>>,
}

impl DataCache {
    fn new() -> Self {
        DataCache { slots: (0..32).map(|_| OnceLock::new()).collect() }
    }

    fn get(&self, mesh: &Mesh, level: usize, problem: &Problem, ts: &[f64]) -> Arc<ClassData> {
        self.slots[level]
            .get_or_init(|| {
                let class = mesh.class(level);
                let p = problem.cache.profile();
                let data = &problem.data;
                let n = class.len();
                let q_alpha = match &data.q0 {
                    Some(q0) => (0..n).map(|i| q0(class.x(i)) / (p.alpha)(class.x(i))).collect(),
                    None => Vec::new(),
                };
                let forcing = match &data.f {
                    Some(f) => ts
                        .iter()
                        .map(|&t| {
                            let basis = ChebyshevBasis::new(time_degree(t), 0.0, t);
                            let rows: Vec<(C64, Vec<C64>)> = (0..n)
                                .into_par_iter()
                                .map(|i| {
                                    if i % STRIDE == 0 {
                                        return (C64::new(0.0, 0.0), Vec::new());
                                    }
                                    let y = class.x(i);
                                    let a = (p.alpha)(y);
                                    let v = basis.points.iter().map(|&s| data.forcing_rate(y, s) / a).collect();
                                    (f(y, 0.0) / a, v)
                                })
                                .collect();
                            rows.into_iter().unzip()
                        })
                        .collect(),
                    None => Vec::new(),
                };
                Arc::new(ClassData { q_alpha, forcing })
            })
            .clone()
    }
}

/// Per-node contributions [component][t][x], before the 1/2π factor.
type NodeTerms = [Vec<Vec<C64>>; 4];

/// Evaluates q on the grid xs × ts.
pub fn solve_q(problem: &Problem, xs: &[f64], ts: &[f64], opts: &SolverOptions) -> Result<SolutionField> {
    if xs.is_empty() || ts.is_empty() {
        return Err(UtmError::Argument("empty output grid".into()));
    }
    let t_lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hi = ts.iter().copied().fold(0.0, f64::max);
    if t_lo < opts.t_min {
        return Err(UtmError::Argument(format!("t = {t_lo} is below t_min = {}", opts.t_min)));
    }
    let cache = &problem.cache;
    let (a, b) = cache.window();
    for &x in xs {
        if x < a - 1e-12 || x > b + 1e-12 {
            return Err(UtmError::Coverage { x });
        }
    }
    if problem.is_irregular() {
        let margin = opts.irregular_margin * (b - a);
        if let Some(&x) = xs.iter().find(|&&x| x - a < margin || b - x < margin) {
            return Err(UtmError::IrregularBoundary { x });
        }
    }
    let contour = build_contour(cache, t_lo, t_hi, b - a, opts)?;
    let mesh = Mesh::over_window(cache.clone(), xs)?.with_step_parameter(opts.step_parameter);
    let data_cache = DataCache::new();
    let nx = xs.len();
    let nt = ts.len();
    let zero = C64::new(0.0, 0.0);
    let boundary: Vec<Option<(crate::coefficients::Func, crate::coefficients::Func)>> =
        (0..2).map(|m| problem.data.boundary(m)).collect();
    let terms: Vec<Result<NodeTerms>> = (0..contour.len())
        .into_par_iter()
        .map(|j| -> Result<NodeTerms> {
            let k = contour.nodes[j];
            let k2 = k * k;
            let ctx = KernelContext::new(&mesh, Wavenumber::Physical(k), &problem.bc, opts.truncation)?;
            let cd = data_cache.get(&mesh, ctx.sweep.class.level, problem, ts);
            let breaks = &ctx.sweep.class.break_index;
            // Output x's map to breakpoints in sorted order.
            let bpos: Vec<usize> = xs
                .iter()
                .map(|&x| {
                    let i = ctx.sweep.index_of(x).expect("output point is a breakpoint");
                    breaks.iter().position(|&bi| bi == i).unwrap()
                })
                .collect();
            let w = contour.weights[j] / ctx.delta;
            let mut out: NodeTerms = std::array::from_fn(|_| vec![vec![zero; nx]; nt]);
            let mut densities: Vec<Vec<C64>> = Vec::new();
            if !cd.q_alpha.is_empty() {
                densities.push(cd.q_alpha.clone());
            }
            let mut tws = Vec::new();
            for (it, &t) in ts.iter().enumerate() {
                let tw = TimeWeights::new(k2, t)?;
                if !cd.forcing.is_empty() {
                    let (f0s, fss) = &cd.forcing[it];
                    let dens: Vec<C64> = (0..f0s.len())
                        .map(|i| if fss[i].is_empty() { zero } else { fm_frak_decaying(k2, &tw, f0s[i], &fss[i]) })
                        .collect();
                    densities.push(dens);
                }
                tws.push(tw);
            }
            if !densities.is_empty() {
                let refs: Vec<&[C64]> = densities.iter().map(|d| d.as_slice()).collect();
                let tr = ctx.transform(&refs);
                let mut d = 0;
                if !cd.q_alpha.is_empty() {
                    for (it, tw) in tws.iter().enumerate() {
                        for (ix, &bp) in bpos.iter().enumerate() {
                            out[0][it][ix] = tr[0][bp] * tw.decay * w;
                        }
                    }
                    d = 1;
                }
                if !cd.forcing.is_empty() {
                    for it in 0..nt {
                        for (ix, &bp) in bpos.iter().enumerate() {
                            out[1][it][ix] = tr[d + it][bp] * w;
                        }
                    }
                }
            }
            for (m, bd) in boundary.iter().enumerate() {
                let Some((fm, fmp)) = bd else { continue };
                if problem.bc.kind() == DomainKind::WholeLine || (m == 1 && problem.bc.kind() == DomainKind::HalfLine) {
                    continue;
                }
                let kern: Vec<C64> =
                    bpos.iter().map(|&bp| ctx.boundary_kernel_idx(m, breaks[bp])).collect::<Result<_>>()?;
                for (it, tw) in tws.iter().enumerate() {
                    let vals: Vec<C64> = tw.nodes.iter().map(|&s| fmp(s)).collect();
                    let ff = fm_frak_decaying(k2, tw, fm(0.0), &vals);
                    for ix in 0..nx {
                        out[2 + m][it][ix] = kern[ix] * ff * w;
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut comps: NodeTerms = std::array::from_fn(|_| vec![vec![zero; nx]; nt]);
    for t in terms {
        let t = t?;
        for c in 0..4 {
            for it in 0..nt {
                for ix in 0..nx {
                    comps[c][it][ix] += t[c][it][ix];
                }
            }
        }
    }
    let scale = 1.0 / (2.0 * PI);
    for c in comps.iter_mut() {
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
    let q = (0..nt)
        .map(|it| (0..nx).map(|ix| comps[0][it][ix] + comps[1][it][ix] + comps[2][it][ix] + comps[3][it][ix]).collect())
        .collect();
    let [initial, forcing, b0, b1] = comps;
    Ok(SolutionField {
        xs: xs.to_vec(),
        ts: ts.to_vec(),
        q,
        components: Some(Components { initial, forcing, b0, b1 }),
        contour_nodes: contour.len(),
        k_max: contour.k_max,
    })
}

/// Max-norm residual summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub max_abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.max_abs / self.scale.max(1.0)
    }
}

fn uniform_step(v: &[f64]) -> Result<f64> {
    if v.len() < 5 {
        return Err(UtmError::Argument("residuals need at least 5 grid points per axis".into()));
    }
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if v.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300)) {
        return Err(UtmError::Argument("residuals need a uniform grid".into()));
    }
    Ok(h)
}

/// max |q_t − α(βq_x)_x − γq − f| over interior points, from fourth-order
/// central differences.
pub fn pde_residual(field: &SolutionField, problem: &Problem) -> Result<Residual> {
    let hx = uniform_step(&field.xs)?;
    let ht = uniform_step(&field.ts)?;
    let p = problem.cache.profile();
    let q = &field.q;
    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for row in q {
        for v in row {
            scale = scale.max(v.norm());
        }
    }
    for it in 2..field.ts.len() - 2 {
        let t = field.ts[it];
        for ix in 2..field.xs.len() - 2 {
            let x = field.xs[ix];
            let qt = (-q[it + 2][ix] + q[it + 1][ix] * 8.0 - q[it - 1][ix] * 8.0 + q[it - 2][ix]) / (12.0 * ht);
            let qx = (-q[it][ix + 2] + q[it][ix + 1] * 8.0 - q[it][ix - 1] * 8.0 + q[it][ix - 2]) / (12.0 * hx);
            let qxx = (-q[it][ix + 2] + q[it][ix + 1] * 16.0 - q[it][ix] * 30.0 + q[it][ix - 1] * 16.0 - q[it][ix - 2])
                / (12.0 * hx * hx);
            let (al, be) = ((p.alpha)(x), (p.beta)(x));
            let f = problem.data.f.as_ref().map_or(C64::new(0.0, 0.0), |f| f(x, t));
            let r = qt - al * be * qxx - al * p.d_beta(x) * qx - (p.gamma)(x) * q[it][ix] - f;
            max_abs = max_abs.max(r.norm());
        }
    }
    Ok(Residual { max_abs, scale })
}

/// One-sided fourth-order derivative at the first point of `v`, step h.
fn one_sided(v: [C64; 5], h: f64) -> C64 {
    (v[0] * -25.0 + v[1] * 48.0 - v[2] * 36.0 + v[3] * 16.0 - v[4] * 3.0) / (12.0 * h)
}

/// Boundary-condition residuals per row and output time. On the whole line
/// the entries are |q| at the two window edges.
pub fn bc_residual(field: &SolutionField, problem: &Problem) -> Result<Vec<Vec<f64>>> {
    let hx = uniform_step(&field.xs)?;
    let n = field.xs.len();
    let data = &problem.data;
    let eval = |f: &Option<crate::coefficients::Func>, t: f64| f.as_ref().map_or(C64::new(0.0, 0.0), |f| f(t));
    let mut out = Vec::new();
    for (it, &t) in field.ts.iter().enumerate() {
        let q = &field.q[it];
        let left = [q[0], q[1], q[2], q[3], q[4]];
        let right = [q[n - 1], q[n - 2], q[n - 3], q[n - 4], q[n - 5]];
        let (ql, qxl) = (q[0], one_sided(left, hx));
        let (qr, qxr) = (q[n - 1], -one_sided(right, hx));
        let row = match &problem.bc {
            BoundaryConditions::WholeLine => vec![q[0].norm(), q[n - 1].norm()],
            BoundaryConditions::HalfLine { a0, a1 } => vec![(a0 * ql + a1 * qxl - eval(&data.f0, t)).norm()],
            BoundaryConditions::FiniteInterval { rows } => (0..2)
                .map(|j| {
                    let r = rows[j];
                    let fm = if j == 0 { eval(&data.f0, t) } else { eval(&data.f1, t) };
                    (r[0] * ql + r[1] * qxl + r[2] * qr + r[3] * qxr - fm).norm()
                })
                .collect(),
        };
        out.push(row);
    }
    Ok(out)
}

/// max_x |q(x, t) − q₀(x)| at output time index `it`, over points at least
/// `margin` inside the window.
pub fn ic_residual(field: &SolutionField, problem: &Problem, it: usize, margin: f64) -> f64 {
    let (a, b) = problem.cache.window();
    let q0 = problem.data.q0.clone();
    field
        .xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| x - a >= margin && b - x >= margin)
        .map(|(ix, &x)| (field.q[it][ix] - q0.as_ref().map_or(C64::new(0.0, 0.0), |f| f(x))).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::coefficients::{constant, CoefficientProfile, Domain};

    fn heat(domain: Domain) -> Arc<DispersionCache> {
        let p = CoefficientProfile::constant(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), domain);
        Arc::new(DispersionCache::new(&p).unwrap())
    }

    #[test]
    fn contour_geometry_respected() {
        let c = heat(Domain::interval(0.0, 1.0));
        let spec = build_contour(&c, 0.1, 1.0, 1.0, &SolverOptions::default()).unwrap();
        let min = spec.nodes.iter().map(|k| k.norm()).fold(f64::INFINITY, f64::min);
        assert!(min >= spec.r * (1.0 - 1e-12));
        for k in &spec.nodes {
            let a = k.arg();
            assert!(a >= spec.theta0 - 1e-12 && a <= PI - spec.theta0 + 1e-12);
        }
    }

    #[test]
    fn dirichlet_heat_sine_mode() {
        let c = heat(Domain::interval(0.0, 1.0));
        let data = ProblemData::default().with_q0(Arc::new(|x: f64| c64((PI * x).sin(), 0.0)));
        let p = Problem::new(c, BoundaryConditions::dirichlet(), data).unwrap();
        let f = solve_q(&p, &[0.25, 0.5], &[0.1], &SolverOptions::default()).unwrap();
        let exact = (-PI * PI * 0.1).exp();
        assert!((f.at(0, 1) - exact).norm() < 1e-8, "{} vs {exact}", f.at(0, 1));
        assert!((f.at(0, 0) - exact * (PI * 0.25).sin()).norm() < 1e-8);
        let _ = constant;
    }
}
