//! Contour-integral solution representations for linear dissipative
//! second-order evolution problems with spatially varying coefficients,
//!
//! ```text
//! q_t = α(x) (β(x) q_x)_x + γ(x) q + f(x, t),
//! ```
//!
//! posed on the whole line, a half line or a finite interval.
//!
//! The crate is organised bottom-up:
//!
//! * [`coefficients`] holds the coefficient triple, the dispersion functions
//!   μ, 𝔤, 𝔫 and the contour geometry.
//! * [`accum`] tabulates the accumulation functions by propagating their
//!   derivative identities across a panel mesh.
//! * [`delta`] builds the characteristic function Δ(k) and classifies
//!   two-point boundary conditions.
//! * [`kernels`] evaluates Ψ, the boundary kernels and the data transforms.
//! * [`solver`] integrates everything along the deformed contour.
//! * [`eigen`] finds eigenvalues of the finite-interval operator.
//! * [`identities`] measures the structural identities used as checks.
//! * [`oracle`] contains independent reference solvers used for validation.

pub mod accum;
pub mod coefficients;
pub mod delta;
pub mod eigen;
pub mod error;
pub mod identities;
pub mod kernels;
pub mod numerics;
pub mod oracle;
pub mod solver;

pub use error::{Result, UtmError};
pub use num_complex::Complex64 as C64;

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

/// Shorthand for a complex literal.
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
