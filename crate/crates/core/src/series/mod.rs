//! Truncated series: Puiseux series in `s`, matrix power series in `z`, polynomials.

pub mod matrix;
pub mod poly;
pub mod puiseux;

pub use matrix::MatrixSeriesZ;
pub use poly::{ComplexPolynomial, Roots};
pub use puiseux::{PuiseuxSeries, EXACT};
