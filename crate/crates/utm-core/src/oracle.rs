//! Independent reference solvers: Crank–Nicolson finite differences, dense
//! eigenvalues of the discretised operator, eigenfunction series for
//! constant coefficients and heat-kernel convolution on the line.

use crate::coefficients::{CoefficientProfile, DomainKind, Func};
use crate::delta::BoundaryConditions;
use crate::error::{Result, UtmError};
use crate::kernels::ProblemData;
use crate::numerics::linalg::BorderedTridiag;
use crate::numerics::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::solver::SolutionField;
use crate::C64;
use nalgebra::DMatrix;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Extent used for unbounded domains without an explicit truncation.
pub const DEFAULT_EXTENT: f64 = 10.0;

/// Uniform finite-difference grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub intervals: usize,
    pub dt: f64,
}

impl FdGrid {
    pub fn new(intervals: usize, dt: f64) -> Result<Self> {
        if intervals < 4 || !(dt > 0.0) {
            return Err(UtmError::Argument("grid needs at least 4 intervals and dt > 0".into()));
        }
        Ok(FdGrid { intervals, dt })
    }

    fn refined(&self) -> Self {
        FdGrid { intervals: 2 * self.intervals, dt: 0.5 * self.dt }
    }
}

/// Computational window of a profile's domain.
pub fn fd_window(profile: &CoefficientProfile) -> (f64, f64) {
    let d = &profile.domain;
    let e = d.truncation_extent.unwrap_or(DEFAULT_EXTENT);
    match d.kind {
        DomainKind::FiniteInterval => (d.x_l.unwrap(), d.x_r.unwrap()),
        DomainKind::HalfLine => (d.x_l.unwrap(), d.x_l.unwrap() + e),
        DomainKind::WholeLine => (-e, e),
    }
}

/// Boundary rows as [q(a), q_x(a), q(b), q_x(b)] and the index of the data
/// function for each row (None for homogeneous far-field rows).
fn closure_rows(bc: &BoundaryConditions) -> ([[C64; 4]; 2], [Option<usize>; 2]) {
    match bc {
        BoundaryConditions::FiniteInterval { rows } => (*rows, [Some(0), Some(1)]),
        BoundaryConditions::HalfLine { a0, a1 } => ([[*a0, *a1, ZERO, ZERO], [ZERO, ZERO, ONE, ZERO]], [Some(0), None]),
        BoundaryConditions::WholeLine => ([[ONE, ZERO, ZERO, ZERO], [ZERO, ZERO, ONE, ZERO]], [None, None]),
    }
}

/// Second-order one-sided stencils turn a row into weights on
/// q₀, q₁, q₂ and q_{n−2}, q_{n−1}, q_n.
fn row_stencil(r: [C64; 4], n: usize, h: f64) -> Vec<(usize, C64)> {
    let d = 1.0 / (2.0 * h);
    vec![
        (0, r[0] - r[1] * (3.0 * d)),
        (1, r[1] * (4.0 * d)),
        (2, r[1] * -d),
        (n - 2, r[3] * d),
        (n - 1, r[3] * (-4.0 * d)),
        (n, r[2] + r[3] * (3.0 * d)),
    ]
}

/// Conservative three-point discretisation of α(βq_x)_x + γq:
/// (lower, diagonal, upper) at nodes i = 1..=n (node n is used only by the
/// cyclic closure).
fn operator(profile: &CoefficientProfile, a: f64, h: f64, n: usize) -> Vec<(C64, C64, C64)> {
    (1..=n)
        .map(|i| {
            let x = a + h * i as f64;
            let al = (profile.alpha)(x) / (h * h);
            let bm = (profile.beta)(x - 0.5 * h);
            let bp = (profile.beta)(x + 0.5 * h);
            (al * bm, -al * (bm + bp) + (profile.gamma)(x), al * bp)
        })
        .collect()
}

struct CnSystem {
    n: usize,
    a: f64,
    h: f64,
    op: Vec<(C64, C64, C64)>,
    rows: [[C64; 4]; 2],
    which: [Option<usize>; 2],
    periodic: bool,
}

impl CnSystem {
    fn factor(&self, tau: f64, theta: f64) -> Result<BorderedTridiag> {
        let n = self.n;
        let mut sub = vec![ZERO; n];
        let mut diag = vec![ONE; n + 1];
        let mut sup = vec![ZERO; n];
        for i in 1..n {
            let (l, d, u) = self.op[i - 1];
            sub[i - 1] = -l * (theta * tau);
            diag[i] = ONE - d * (theta * tau);
            sup[i] = -u * (theta * tau);
        }
        let mut corr = Vec::new();
        if self.periodic {
            // q₀ = q_n, and node n carries the equation with neighbours
            // q_{n−1} and q₁.
            let (l, d, u) = self.op[n - 1];
            sub[n - 1] = -l * (theta * tau);
            diag[n] = ONE - d * (theta * tau);
            corr.push((0, vec![(n, -ONE)]));
            corr.push((n, vec![(1, -u * (theta * tau))]));
        } else {
            for (pos, row) in [(0, self.rows[0]), (n, self.rows[1])] {
                let mut v = row_stencil(row, n, self.h);
                v.push((pos, -ONE));
                corr.push((pos, v));
            }
        }
        let m = BorderedTridiag::new(&sub, &diag, &sup, corr);
        if m.is_singular() {
            return Err(UtmError::Oracle("singular boundary closure".into()));
        }
        Ok(m)
    }

    fn apply(&self, q: &[C64], i: usize) -> C64 {
        let (l, d, u) = self.op[i - 1];
        l * q[i - 1] + d * q[i] + u * q[i + 1]
    }

    fn step(&self, m: &BorderedTridiag, q: &[C64], t: f64, tau: f64, theta: f64, data: &ProblemData) -> Vec<C64> {
        let n = self.n;
        let mut rhs = vec![ZERO; n + 1];
        for i in 1..n {
            let x = self.a + self.h * i as f64;
            let mut r = q[i] + self.apply(q, i) * ((1.0 - theta) * tau);
            if let Some(f) = &data.f {
                r += (f(x, t + tau) * theta + f(x, t) * (1.0 - theta)) * tau;
            }
            rhs[i] = r;
        }
        if self.periodic {
            let (l, d, u) = self.op[n - 1];
            let mut r = q[n] + (l * q[n - 1] + d * q[n] + u * q[1]) * ((1.0 - theta) * tau);
            if let Some(f) = &data.f {
                let x = self.a + self.h * n as f64;
                r += (f(x, t + tau) * theta + f(x, t) * (1.0 - theta)) * tau;
            }
            rhs[n] = r;
            return m.solve(&rhs);
        }
        for (pos, w) in [(0, self.which[0]), (n, self.which[1])] {
            rhs[pos] = match w {
                Some(0) => data.f0.as_ref().map_or(ZERO, |f| f(t + tau)),
                Some(_) => data.f1.as_ref().map_or(ZERO, |f| f(t + tau)),
                None => ZERO,
            };
        }
        m.solve(&rhs)
    }
}

/// Four-point Lagrange interpolation on a uniform grid.
fn interp(q: &[C64], a: f64, h: f64, x: f64) -> C64 {
    let n = q.len() - 1;
    let s = (x - a) / h;
    let i0 = (s.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
    let mut out = ZERO;
    for j in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (s - (i0 + m) as f64) / ((i0 + j) as f64 - (i0 + m) as f64);
            }
        }
        out += q[i0 + j] * l;
    }
    out
}

fn cn_single(
    profile: &CoefficientProfile,
    bc: &BoundaryConditions,
    data: &ProblemData,
    xs: &[f64],
    ts: &[f64],
    grid: FdGrid,
) -> Result<Vec<Vec<C64>>> {
    let (a, b) = fd_window(profile);
    let n = grid.intervals;
    let h = (b - a) / n as f64;
    let (rows, which) = closure_rows(bc);
    let periodic = *bc == BoundaryConditions::periodic();
    if periodic && (data.f0.is_some() || data.f1.is_some()) {
        return Err(UtmError::Oracle("cyclic closure takes homogeneous boundary data only".into()));
    }
    let sys = CnSystem { n, a, h, op: operator(profile, a, h, n), rows, which, periodic };
    let mut q: Vec<C64> = (0..=n)
        .map(|i| data.q0.as_ref().map_or(ZERO, |f| f(a + h * i as f64)))
        .collect();
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&i, &j| ts[i].total_cmp(&ts[j]));
    let mut out = vec![Vec::new(); ts.len()];
    let mut t = 0.0;
    // Two backward-Euler half steps damp the start-up transient.
    let first = grid.dt.min(ts[order[0]]);
    let be = sys.factor(0.5 * first, 1.0)?;
    for _ in 0..2 {
        q = sys.step(&be, &q, t, 0.5 * first, 1.0, data);
        t += 0.5 * first;
    }
    let mut cached: Option<(f64, BorderedTridiag)> = None;
    for &it in &order {
        let target = ts[it];
        if target < t - 1e-12 {
            return Err(UtmError::Argument(format!("output time {target} precedes the first step")));
        }
        let steps = ((target - t) / grid.dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let tau = (target - t) / steps as f64;
            if cached.as_ref().is_none_or(|(c, _)| (c - tau).abs() > 1e-15 * tau) {
                cached = Some((tau, sys.factor(tau, 0.5)?));
            }
            let m = &cached.as_ref().unwrap().1;
            for _ in 0..steps {
                q = sys.step(m, &q, t, tau, 0.5, data);
                t += tau;
            }
        }
        t = target;
        out[it] = xs.iter().map(|&x| interp(&q, a, h, x)).collect();
    }
    Ok(out)
}

/// Crank–Nicolson with second-order boundary closures, started by two
/// backward-Euler half steps. With `richardson` the result combines grids
/// (h, Δt) and (h/2, Δt/2) as (4u_fine − u_coarse)/3.
pub fn crank_nicolson(
    profile: &CoefficientProfile,
    bc: &BoundaryConditions,
    data: &ProblemData,
    xs: &[f64],
    ts: &[f64],
    grid: FdGrid,
    richardson: bool,
) -> Result<SolutionField> {
    if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(UtmError::Argument("oracle output times must be positive".into()));
    }
    let (a, b) = fd_window(profile);
    if let Some(&x) = xs.iter().find(|&&x| x < a - 1e-12 || x > b + 1e-12) {
        return Err(UtmError::Coverage { x });
    }
    let coarse = cn_single(profile, bc, data, xs, ts, grid)?;
    let q = if richardson {
        let fine = cn_single(profile, bc, data, xs, ts, grid.refined())?;
        fine.iter()
            .zip(&coarse)
            .map(|(f, c)| f.iter().zip(c).map(|(f, c)| (f * 4.0 - c) / 3.0).collect())
            .collect()
    } else {
        coarse
    };
    Ok(SolutionField { xs: xs.to_vec(), ts: ts.to_vec(), q, components: None, contour_nodes: 0, k_max: 0.0 })
}

/// Eigenvalue of the discretised operator with its two-grid history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEigenvalue {
    /// Richardson combination (4λ_fine − λ_coarse)/3.
    pub lambda: C64,
    pub fine: C64,
    pub coarse: C64,
}

fn fd_eigenvalues(profile: &CoefficientProfile, bc: &BoundaryConditions, n: usize) -> Result<Vec<C64>> {
    let (a, b) = fd_window(profile);
    let h = (b - a) / n as f64;
    let op = operator(profile, a, h, n);
    if *bc == BoundaryConditions::periodic() {
        let mut mat = DMatrix::<C64>::zeros(n, n);
        for i in 1..=n {
            let (l, d, u) = op[i - 1];
            let r = i % n;
            mat[(r, r)] += d;
            mat[(r, (i - 1) % n)] += l;
            mat[(r, (i + 1) % n)] += u;
        }
        return sorted_eigenvalues(mat);
    }
    let (rows, _) = closure_rows(bc);
    // Solve the two boundary rows for q₀ and q_n in terms of interior values.
    let s: Vec<Vec<(usize, C64)>> = rows.iter().map(|&r| row_stencil(r, n, h)).collect();
    let coef = |j: usize, idx: usize| -> C64 { s[j].iter().filter(|(i, _)| *i == idx).map(|(_, v)| v).sum() };
    let m = [[coef(0, 0), coef(0, n)], [coef(1, 0), coef(1, n)]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if det.norm() <= 1e-13 * scale * scale {
        return Err(UtmError::Oracle("boundary rows do not determine the end values".into()));
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let interior = [1, 2, n - 2, n - 1];
    // end[e][k]: weight of interior node `interior[k]` in q_end.
    let mut end = [[ZERO; 4]; 2];
    for (e, inv_row) in inv.iter().enumerate() {
        for (k, &idx) in interior.iter().enumerate() {
            end[e][k] = -(inv_row[0] * coef(0, idx) + inv_row[1] * coef(1, idx));
        }
    }
    let dim = n - 1;
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    for i in 1..n {
        let (l, d, u) = op[i - 1];
        mat[(i - 1, i - 1)] += d;
        if i > 1 {
            mat[(i - 1, i - 2)] += l;
        } else {
            for (k, &idx) in interior.iter().enumerate() {
                mat[(0, idx - 1)] += l * end[0][k];
            }
        }
        if i < n - 1 {
            mat[(i - 1, i)] += u;
        } else {
            for (k, &idx) in interior.iter().enumerate() {
                mat[(dim - 1, idx - 1)] += u * end[1][k];
            }
        }
    }
    sorted_eigenvalues(mat)
}

fn sorted_eigenvalues(mat: DMatrix<C64>) -> Result<Vec<C64>> {
    let ev = mat
        .schur()
        .eigenvalues()
        .ok_or_else(|| UtmError::Oracle("Schur iteration did not converge".into()))?;
    let mut v: Vec<C64> = ev.iter().copied().collect();
    v.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    Ok(v)
}

/// Eigenvalues of the three-point discretisation of α(βy')' + γy with the
/// boundary rows imposed, on n_grid and n_grid/2 intervals, combined by
/// Richardson extrapolation. Only the lowest quarter of the coarse spectrum
/// is returned, sorted by |λ|.
pub fn matrix_eigs(profile: &CoefficientProfile, bc: &BoundaryConditions, n_grid: usize) -> Result<Vec<OracleEigenvalue>> {
    if profile.domain.kind != DomainKind::FiniteInterval || bc.kind() != DomainKind::FiniteInterval {
        return Err(UtmError::Argument("matrix eigenvalues need a finite interval".into()));
    }
    if n_grid < 16 {
        return Err(UtmError::Argument("n_grid must be at least 16".into()));
    }
    let fine = fd_eigenvalues(profile, bc, n_grid)?;
    let coarse = fd_eigenvalues(profile, bc, n_grid / 2)?;
    let keep = (n_grid / 2) / 4;
    Ok(fine
        .iter()
        .take(keep)
        .map(|&f| {
            let c = *coarse.iter().min_by(|a, b| (*a - f).norm().total_cmp(&(*b - f).norm())).unwrap();
            OracleEigenvalue { lambda: (f * 4.0 - c) / 3.0, fine: f, coarse: c }
        })
        .collect())
}

fn constant_value(f: &Func, a: f64, b: f64) -> Result<C64> {
    let v0 = f(a);
    for j in 1..=16 {
        let x = a + (b - a) * j as f64 / 16.0;
        if (f(x) - v0).norm() > 1e-13 * (1.0 + v0.norm()) {
            return Err(UtmError::Oracle("coefficients are not constant".into()));
        }
    }
    Ok(v0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SeriesKind {
    Dirichlet,
    Neumann,
    Periodic,
}

/// Eigenfunction series for constant coefficients with homogeneous
/// Dirichlet, Neumann or periodic conditions.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    kind: SeriesKind,
    a: f64,
    len: f64,
    ab: C64,
    gamma: C64,
    /// (wavenumber index m, coefficient); periodic uses signed m.
    modes: Vec<(i64, C64)>,
}

impl FourierSeries {
    /// Coefficients are computed for modes that are not below 1e−16 of the
    /// data at t ≥ t_min.
    pub fn new(profile: &CoefficientProfile, bc: &BoundaryConditions, q0: &Func, t_min: f64) -> Result<Self> {
        if profile.domain.kind != DomainKind::FiniteInterval {
            return Err(UtmError::Oracle("series oracle needs a finite interval".into()));
        }
        let (a, b) = fd_window(profile);
        let len = b - a;
        let kind = if *bc == BoundaryConditions::dirichlet() {
            SeriesKind::Dirichlet
        } else if *bc == BoundaryConditions::neumann() {
            SeriesKind::Neumann
        } else if *bc == BoundaryConditions::periodic() {
            SeriesKind::Periodic
        } else {
            return Err(UtmError::Oracle("series oracle supports Dirichlet, Neumann and periodic rows".into()));
        };
        let ab = constant_value(&profile.alpha, a, b)? * constant_value(&profile.beta, a, b)?;
        let gamma = constant_value(&profile.gamma, a, b)?;
        if !(ab.re > 0.0) || !(t_min > 0.0) {
            return Err(UtmError::Oracle("series oracle needs Re(αβ) > 0 and t_min > 0".into()));
        }
        let m_max = (len / PI * (40.0 / (ab.re * t_min)).sqrt()).ceil() as i64 + 2;
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, ..QuadOptions::default() };
        let mut modes = Vec::new();
        let range: Vec<i64> = match kind {
            SeriesKind::Dirichlet => (1..=m_max).collect(),
            SeriesKind::Neumann => (0..=m_max).collect(),
            SeriesKind::Periodic => (-m_max / 2 - 1..=m_max / 2 + 1).collect(),
        };
        for m in range {
            let c = match kind {
                SeriesKind::Dirichlet => {
                    integrate(|x| q0(x) * (m as f64 * PI * (x - a) / len).sin(), a, b, opts)? * (2.0 / len)
                }
                SeriesKind::Neumann => {
                    let w = if m == 0 { 1.0 } else { 2.0 } / len;
                    integrate(|x| q0(x) * (m as f64 * PI * (x - a) / len).cos(), a, b, opts)? * w
                }
                SeriesKind::Periodic => {
                    integrate(|x| q0(x) * C64::from_polar(1.0, -2.0 * PI * m as f64 * (x - a) / len), a, b, opts)?
                        / len
                }
            };
            modes.push((m, c));
        }
        Ok(FourierSeries { kind, a, len, ab, gamma, modes })
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        let s = (x - self.a) / self.len;
        self.modes
            .iter()
            .map(|&(m, c)| {
                let mf = m as f64;
                let (kw, phi) = match self.kind {
                    SeriesKind::Dirichlet => (mf * PI / self.len, C64::new((mf * PI * s).sin(), 0.0)),
                    SeriesKind::Neumann => (mf * PI / self.len, C64::new((mf * PI * s).cos(), 0.0)),
                    SeriesKind::Periodic => (2.0 * PI * mf / self.len, C64::from_polar(1.0, 2.0 * PI * mf * s)),
                };
                c * phi * ((self.gamma - self.ab * kw * kw) * t).exp()
            })
            .sum()
    }
}

/// Series solution at (x, t) for constant coefficients.
pub fn fourier_exact(profile: &CoefficientProfile, bc: &BoundaryConditions, q0: &Func, x: f64, t: f64) -> Result<C64> {
    Ok(FourierSeries::new(profile, bc, q0, t)?.eval(x, t))
}

/// e^{γt}∫G(x − y, t)q₀(y)dy with G the heat kernel for diffusivity αβ,
/// on the whole line with constant coefficients.
pub fn heat_kernel_convolution(profile: &CoefficientProfile, q0: &Func, x: f64, t: f64) -> Result<C64> {
    if profile.domain.kind != DomainKind::WholeLine {
        return Err(UtmError::Oracle("heat-kernel oracle needs the whole line".into()));
    }
    let ab = constant_value(&profile.alpha, -5.0, 5.0)? * constant_value(&profile.beta, -5.0, 5.0)?;
    let gamma = constant_value(&profile.gamma, -5.0, 5.0)?;
    let inv = 1.0 / (ab * (4.0 * t));
    if !(inv.re > 0.0) {
        return Err(UtmError::Oracle("kernel does not decay".into()));
    }
    let reach = (45.0 / inv.re).sqrt();
    let norm = (ab * (4.0 * PI * t)).sqrt();
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 4000 };
    let (v, _) = integrate_with_breaks(
        |y| {
            let d = x - y;
            (-(inv * d * d)).exp() * q0(y)
        },
        x - reach,
        x + reach,
        &[x],
        opts,
    )?;
    Ok(v / norm * (gamma * t).exp())
}
