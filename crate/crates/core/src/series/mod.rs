//! Scalar layer: truncated Laurent series, fiber jets over them, jet-valued
//! matrices, coordinate changes and path quadrature.

mod change;
mod jet;
mod laurent;
mod matrix;
mod quadrature;
mod space;

pub use change::CoordinateChange;
pub use change::relabel_one;
pub use jet::Jet;
pub use laurent::LaurentSeries;
pub use matrix::{invert_unit, mat_mul, BaseInverse, JetMatrix};
pub use quadrature::{
    arclength_integral, gauss_legendre_16, path_integral, PathKind, PathSpec, Quadrature, MAX_POINTS,
    TOL_QUAD,
};
pub use space::{JetSpace, ThetaSpec};

pub type C64 = num_complex::Complex64;

/// Shorthand for a real number as a complex scalar.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}
