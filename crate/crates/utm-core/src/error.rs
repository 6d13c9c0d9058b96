use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UtmError {
    #[error("non-finite coefficient or data value at x = {x}: {what}")]
    Evaluation { x: f64, what: String },
    #[error("|k| = {modulus} does not exceed the branch radius {radius}")]
    ContourRadius { modulus: f64, radius: f64 },
    #[error("problem is not fully dissipative: sup|arg(αβ)| = {theta} ≥ π/2")]
    Dissipativity { theta: f64 },
    #[error("assumption failed: {0}")]
    Assumption(String),
    #[error("mesh too fine at k = {k}: {panels} panels exceed the budget")]
    Stiffness { k: String, panels: usize },
    #[error("truncation extent too small: {0}")]
    Truncation(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("boundary matrix has rank < 2")]
    BoundaryRank,
    #[error("unsupported boundary case: {0}")]
    Case(String),
    #[error("point x = {x} is not covered by the tabulation")]
    Coverage { x: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("e^(k²s) factor would overflow: {0}")]
    Stability(String),
    #[error("contour budget exceeded; smallest usable t is about {suggested_t_min:.3e}")]
    Budget { suggested_t_min: f64 },
    #[error("root isolation failed: {0}")]
    RootIsolation(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("evaluation too close to the boundary for an irregular problem: x = {x}")]
    IrregularBoundary { x: f64 },
}

pub type Result<T> = std::result::Result<T, UtmError>;
