//! Holomorphic functional calculus: `f(a)` for symbols and `f(A)` for their
//! quantizations, via the Dunford integral over the sector boundary.

mod calc;
mod contour;
mod hfun;
mod probe;

pub use calc::*;
pub use contour::*;
pub use hfun::*;
pub use probe::*;
