//! Functional calculus for sectorially hypoelliptic symbols on the discrete torus.

pub mod compose;
pub mod dsl;
pub mod error;
pub mod fft;
pub mod fit;
pub mod funcalc;
pub mod hypo;
pub mod linalg;
pub mod oracle;
pub mod parametrix;
pub mod scalar;
pub mod symbol;

pub use error::{Error, Result};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;

pub type GridSymbol64 = symbol::GridSymbol<f64>;
pub type GridSymbol32 = symbol::GridSymbol<f32>;
pub type QuantOp64 = compose::QuantOp<f64>;
pub type QuantOp32 = compose::QuantOp<f32>;
pub type CMat64 = linalg::CMat<f64>;
pub type CMat32 = linalg::CMat<f32>;
pub type Parametrix64 = parametrix::Parametrix<f64>;
pub type Parametrix32 = parametrix::Parametrix<f32>;
