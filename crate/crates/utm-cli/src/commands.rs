//! Command implementations. Each returns its output files as text so that
//! the caller decides whether they go to a directory or to stdout.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use utm_core::accum::Truncation;
use utm_core::coefficients::{DomainKind, Wavenumber};
use utm_core::delta::classify;
use utm_core::eigen::{lowest_eigenvalues, paired_truncation, EigenOptions};
use utm_core::identities::{
    asymptotic_sandwich, composition_identities, derivative_identities, eigen_bc_identity, factorial_bounds, Check,
};
use utm_core::oracle::{crank_nicolson, heat_kernel_convolution, FdGrid, FourierSeries};
use utm_core::solver::{solve_q, Problem, SolutionField, SolverOptions};
use utm_core::{UtmError, C64};

use crate::config::{Grid, Numerics, ProblemConfig, Setup};
use crate::emit::{checks_json, compare_csv, eigen_json, solution_csv, EigenRecord};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Check the configuration and the coefficient assumptions.
    Validate,
    /// Evaluate q on the output grid.
    Solve,
    /// Lowest eigenvalues of a finite-interval problem.
    Eigs,
    /// Run the structural identity checks.
    Identities,
    /// Compare the solution with an independent reference solver.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleKind {
    /// Richardson-extrapolated Crank–Nicolson.
    Cn,
    /// Eigenfunction series (constant coefficients, classical rows).
    Fourier,
    /// Heat-kernel convolution (whole line, constant coefficients).
    Kernel,
}

/// Command-line overrides of the configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<Grid>,
    pub count: Option<usize>,
    pub nmax: Option<usize>,
    pub oracle: Option<OracleKind>,
    pub seed: u64,
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: &'static str,
    pub contents: String,
}

/// Output files, plus a failure to report after they are written.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<CliError>,
}

pub const DEFAULT_COUNT: usize = 5;
pub const DEFAULT_SEED: u64 = 0;

pub fn run(cmd: Command, cfg: &ProblemConfig, ov: &Overrides) -> CliResult<Outcome> {
    let setup = cfg.setup()?;
    match cmd {
        Command::Validate => validate(cfg, &setup),
        Command::Solve => {
            let field = solve(cfg, &setup, &grid(cfg, ov)?, ov.nmax)?;
            Ok(Outcome { artifacts: vec![Artifact { name: "solution.csv", contents: solution_csv(&field) }], failure: None })
        }
        Command::Eigs => {
            let count = ov.count.or(cfg.output.count).unwrap_or(DEFAULT_COUNT);
            let records = eigs(cfg, &setup, count, ov.nmax)?;
            Ok(Outcome { artifacts: vec![Artifact { name: "eigenvalues.json", contents: eigen_json(&records) }], failure: None })
        }
        Command::Identities => {
            let checks = identity_suite(&setup, ov.seed)?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            let failure = (failed > 0).then_some(CliError::Checks { failed, total: checks.len() });
            Ok(Outcome { artifacts: vec![Artifact { name: "identities.json", contents: checks_json(&checks) }], failure })
        }
        Command::Compare => {
            let oracle = ov.oracle.ok_or_else(|| CliError::Usage("compare needs --oracle cn|fourier|kernel".into()))?;
            let g = grid(cfg, ov)?;
            let field = solve(cfg, &setup, &g, ov.nmax)?;
            let reference = oracle_field(cfg, &setup, &field, oracle)?;
            let (abs, scale) = max_error(&field.q, &reference);
            let summary = json!({
                "oracle": format!("{oracle:?}").to_lowercase(),
                "points": field.xs.len() * field.ts.len(),
                "max_abs_err": abs,
                "max_rel_err": if scale > 0.0 { abs / scale } else { abs },
                "ref_scale": scale,
            });
            Ok(Outcome {
                artifacts: vec![
                    Artifact { name: "compare.csv", contents: compare_csv(&field, &reference) },
                    Artifact { name: "compare.json", contents: format!("{:#}\n", summary) },
                ],
                failure: None,
            })
        }
    }
}

fn grid(cfg: &ProblemConfig, ov: &Overrides) -> CliResult<Grid> {
    ov.grid.or(cfg.output.grid).ok_or_else(|| CliError::Usage("no output grid: pass --grid or set output.grid".into()))
}

/// Fixed Δ_N truncation when requested, otherwise adaptive.
pub fn truncation(numerics: &Numerics, nmax: Option<usize>) -> Truncation {
    nmax.or(numerics.n).map_or(Truncation::Adaptive, paired_truncation)
}

/// Solver settings; t_min defaults to the earliest output time.
pub fn solver_options(numerics: &Numerics, nmax: Option<usize>, ts: &[f64]) -> SolverOptions {
    let d = SolverOptions::default();
    let earliest = ts.iter().copied().fold(f64::INFINITY, f64::min);
    SolverOptions {
        t_min: numerics.t_min.unwrap_or(if earliest.is_finite() { earliest } else { d.t_min }),
        tol: numerics.tol.unwrap_or(d.tol),
        safety: numerics.safety.unwrap_or(d.safety),
        theta0: numerics.theta0.or(d.theta0),
        truncation: truncation(numerics, nmax),
        refine: numerics.refine.unwrap_or(d.refine),
        step_parameter: numerics.step_parameter.unwrap_or(d.step_parameter),
        ..d
    }
}

pub fn solve(cfg: &ProblemConfig, setup: &Setup, g: &Grid, nmax: Option<usize>) -> CliResult<SolutionField> {
    let (xs, ts) = (g.xs(), g.ts());
    if xs.is_empty() || ts.is_empty() {
        let q = ts.iter().map(|_| Vec::new()).collect();
        return Ok(SolutionField { xs, ts, q, components: None, contour_nodes: 0, k_max: 0.0 });
    }
    let problem = Problem::new(setup.cache.clone(), setup.bc.clone(), setup.data.clone())?;
    Ok(solve_q(&problem, &xs, &ts, &solver_options(&cfg.numerics, nmax, &ts))?)
}

pub fn eigs(cfg: &ProblemConfig, setup: &Setup, count: usize, nmax: Option<usize>) -> CliResult<Vec<EigenRecord>> {
    if cfg.domain.kind != DomainKind::FiniteInterval {
        return Err(CliError::Usage("eigenvalues need a finite interval".into()));
    }
    let d = EigenOptions::default();
    let opts = EigenOptions {
        truncation: truncation(&cfg.numerics, nmax),
        residual_threshold: cfg.numerics.residual_threshold.unwrap_or(d.residual_threshold),
        ..d
    };
    let fixed = nmax.or(cfg.numerics.n);
    let pairs = lowest_eigenvalues(setup.cache.clone(), &setup.bc, count, &opts)?;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(m, p)| EigenRecord {
            m,
            kappa_re: p.kappa.re,
            kappa_im: p.kappa.im,
            lambda_re: p.lambda.re,
            lambda_im: p.lambda.im,
            residual: p.residual,
            n_truncation: fixed.unwrap_or(p.order.div_ceil(2)),
        })
        .collect())
}

fn validate(cfg: &ProblemConfig, setup: &Setup) -> CliResult<Outcome> {
    let report = setup.cache.validate_assumptions()?;
    let (r, theta0) = setup.cache.contour_params(SolverOptions::default().safety)?;
    let mut body = json!({
        "domain": format!("{:?}", cfg.domain.kind),
        "theta": report.theta,
        "m_ab": report.m_ab,
        "m_gamma": report.m_gamma,
        "contour": { "r": r, "theta0": theta0 },
        "assumptions": report.checks.iter().map(|c| json!({
            "name": c.name, "passed": c.passed, "measured": c.measured,
        })).collect::<Vec<_>>(),
    });
    if cfg.domain.kind == DomainKind::FiniteInterval {
        let class = classify(&setup.bc, &setup.cache)?;
        body["case"] = json!(format!("{:?}", class.case));
        body["regular"] = json!(class.regular);
        body["warning"] = json!(class.warning);
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    let failure = (failed > 0).then_some(CliError::Checks { failed, total: report.checks.len() });
    Ok(Outcome { artifacts: vec![Artifact { name: "validate.json", contents: format!("{body:#}\n") }], failure })
}

/// Highest level checked by the composition identities.
fn composition_order(kind: DomainKind) -> usize {
    if kind == DomainKind::HalfLine {
        4
    } else {
        6
    }
}

/// Identity checks at seeded random wavenumbers: derivative, composition
/// and (on intervals) eigen boundary identities in the exterior region,
/// factorial bounds on the three contour pieces, and the large-k
/// asymptotics of Δ for the configured boundary conditions.
pub fn identity_suite(setup: &Setup, seed: u64) -> CliResult<Vec<Check>> {
    let cache = &setup.cache;
    let kind = cache.profile().domain.kind;
    let (r, theta0) = cache.contour_params(SolverOptions::default().safety)?;
    let (a, b) = cache.window();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let label = |c: Check, at: String| Check { name: format!("{} at {at}", c.name), ..c };
    for _ in 0..4 {
        let k = C64::from_polar(r + rng.random_range(0.0..30.0), rng.random_range(theta0..PI - theta0));
        let w = Wavenumber::Physical(k);
        let x = a + (b - a) * rng.random_range(0.05..0.95);
        let at = format!("k = {:.6}{:+.6}i, x = {x:.6}", k.re, k.im);
        checks.push(label(derivative_identities(cache.clone(), w, x, 1e-3, Truncation::Fixed(4))?, at.clone()));
        let n = composition_order(kind);
        checks.push(label(composition_identities(cache.clone(), w, x, n)?, format!("{at}, N = {n}")));
        if kind == DomainKind::FiniteInterval {
            let k_only = format!("k = {:.6}{:+.6}i", k.re, k.im);
            checks.push(label(eigen_bc_identity(cache.clone(), w, Truncation::Adaptive)?, k_only));
        }
    }
    for piece in ["arc", "left ray", "right ray"] {
        let k = match piece {
            "arc" => C64::from_polar(r, rng.random_range(theta0..PI - theta0)),
            "left ray" => C64::from_polar(r + rng.random_range(0.0..40.0), PI - theta0),
            _ => C64::from_polar(r + rng.random_range(0.0..40.0), theta0),
        };
        let at = format!("{piece} k = {:.6}{:+.6}i", k.re, k.im);
        checks.push(label(factorial_bounds(cache.clone(), Wavenumber::Physical(k), Truncation::Fixed(5))?, at));
    }
    checks.push(asymptotic_sandwich(cache.clone(), &setup.bc, SolverOptions::default().safety)?);
    Ok(checks)
}

/// Reference values on the field's grid.
pub fn oracle_field(cfg: &ProblemConfig, setup: &Setup, field: &SolutionField, oracle: OracleKind) -> CliResult<Vec<Vec<C64>>> {
    let q0_only = |what: &str| -> CliResult<()> {
        let d = &cfg.data;
        if d.f.is_some() || d.f0.is_some() || d.f1.is_some() {
            return Err(CliError::Usage(format!("the {what} oracle supports initial data only")));
        }
        Ok(())
    };
    let zero = utm_core::coefficients::constant(C64::new(0.0, 0.0));
    let q0 = setup.data.q0.clone().unwrap_or(zero);
    match oracle {
        OracleKind::Cn => {
            let intervals = cfg.numerics.oracle_intervals.unwrap_or(200);
            let dt = cfg.numerics.oracle_dt.unwrap_or(1.0 / 800.0);
            let grid = FdGrid::new(intervals, dt)?;
            Ok(crank_nicolson(&setup.profile, &setup.bc, &setup.data, &field.xs, &field.ts, grid, true)?.q)
        }
        OracleKind::Fourier => {
            q0_only("fourier")?;
            let t_min = field.ts.iter().copied().fold(f64::INFINITY, f64::min);
            if !t_min.is_finite() {
                return Ok(Vec::new());
            }
            let series = FourierSeries::new(&setup.profile, &setup.bc, &q0, t_min)?;
            Ok(field.ts.iter().map(|&t| field.xs.iter().map(|&x| series.eval(x, t)).collect()).collect())
        }
        OracleKind::Kernel => {
            q0_only("kernel")?;
            field
                .ts
                .iter()
                .map(|&t| field.xs.iter().map(|&x| heat_kernel_convolution(&setup.profile, &q0, x, t)).collect())
                .collect::<Result<Vec<Vec<C64>>, UtmError>>()
                .map_err(CliError::from)
        }
    }
}

/// Largest pointwise difference and the largest reference modulus.
pub fn max_error(q: &[Vec<C64>], reference: &[Vec<C64>]) -> (f64, f64) {
    let mut abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (row, rrow) in q.iter().zip(reference) {
        for (v, r) in row.iter().zip(rrow) {
            abs = abs.max((v - r).norm());
            scale = scale.max(r.norm());
        }
    }
    (abs, scale)
}
