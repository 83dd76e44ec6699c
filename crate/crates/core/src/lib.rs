//! Higher-genus ancestor correlators of A_n singularities.
//!
//! The crate computes the Frobenius structure of the miniversal deformation
//! `F(t,x) = x^{n+1}/(n+1) + t^1 x^{n-1} + ... + t^n`, the R-matrix of the
//! associated flat connection, and the ancestor correlators produced by the
//! local Eynard-Orantin recursion. Independent checks are provided by a
//! direct quantization of the R-matrix acting on Witten-Kontsevich tau
//! functions, and by the extended contour kernel which stays finite at
//! A_2 caustic points.

pub mod caustic;
pub mod error;
pub mod frobenius;
pub mod local;
pub mod quantization;
pub mod recursion;
pub mod rmatrix;
pub mod series;
pub mod wick;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use frobenius::{AnModel, CanonicalFrame, ModelOptions};
pub use recursion::{CorrelatorKey, CorrelatorTable, Insertion, Provenance};
pub use rmatrix::RMatrix;
pub use series::{ComplexPolynomial, MatrixSeriesZ, PuiseuxSeries};

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector used throughout.
pub type CVector = nalgebra::DVector<C64>;

/// Double factorial `(2k-1)!!` style helper, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}
