//! Numerical building blocks: Gauss rules, adaptive quadrature, banded
//! linear algebra, finite differences and polynomial interpolation.

pub mod diff;
pub mod gauss;
pub mod interp;
pub mod linalg;
pub mod quad;
