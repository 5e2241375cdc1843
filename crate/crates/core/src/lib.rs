//! Holomorphic contact geometry on truncated jets.

pub mod error;
pub mod forms;
pub mod frame;
pub mod legendrian;
pub mod moser;
pub mod normalize;
pub mod random;
pub mod series;
pub mod spray;
pub mod surfaces;
pub mod symplectic;

pub use error::{Error, Result};
pub use series::{CoordinateChange, Jet, JetMatrix, JetSpace, LaurentSeries, PathSpec, ThetaSpec, C64};
