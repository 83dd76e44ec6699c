use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Truncated power series `M_0 + M_1 z + ... + M_K z^K` of square matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSeriesZ {
    coeffs: Vec<CMatrix>,
}

impl MatrixSeriesZ {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Invalid("empty matrix series".into()))?;
        let n = first.nrows();
        if coeffs.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Invalid("matrix series needs square blocks of equal size".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn identity(n: usize, order: usize) -> Self {
        let mut coeffs = vec![CMatrix::zeros(n, n); order + 1];
        coeffs[0] = CMatrix::identity(n, n);
        Self { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &CMatrix {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [CMatrix] {
        &mut self.coeffs
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let n = self.dim();
        let coeffs = (0..=k)
            .map(|m| {
                let mut acc = CMatrix::zeros(n, n);
                for a in 0..=m {
                    acc += &self.coeffs[a] * &other.coeffs[m - a];
                }
                acc
            })
            .collect();
        Self { coeffs }
    }

    /// `M(-z)`.
    pub fn reflect(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, m)| if k % 2 == 1 { -m } else { m.clone() })
            .collect();
        Self { coeffs }
    }

    pub fn transpose(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|m| m.transpose()).collect(),
        }
    }

    /// Conjugation `A M(z) B` coefficientwise.
    pub fn sandwich(&self, left: &CMatrix, right: &CMatrix) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|m| left * m * right).collect(),
        }
    }

    /// Matrix logarithm of a series with `M_0 = I`.
    pub fn log(&self) -> Result<Self> {
        let n = self.dim();
        let k = self.order();
        if (&self.coeffs[0] - CMatrix::identity(n, n)).norm() > 1e-10 {
            return Err(Error::Invalid("log needs M_0 = I".into()));
        }
        let mut x = self.clone();
        x.coeffs[0] = CMatrix::zeros(n, n);
        let mut out = vec![CMatrix::zeros(n, n); k + 1];
        let mut power = x.clone();
        for j in 1..=k {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            for (m, c) in power.coeffs.iter().enumerate() {
                out[m] += c * C64::new(sign / j as f64, 0.0);
            }
            power = power.mul(&x);
        }
        Ok(Self { coeffs: out })
    }

    /// Matrix exponential of a series with zero constant term.
    pub fn exp(&self) -> Self {
        let n = self.dim();
        let k = self.order();
        let mut out = Self::identity(n, k);
        let mut term = Self::identity(n, k);
        for j in 1..=k {
            term = term.mul(self);
            for (m, c) in term.coeffs.iter().enumerate() {
                out.coeffs[m] += c * C64::new(1.0 / factorial(j), 0.0);
            }
        }
        out
    }
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|x| x as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_exp_roundtrip() {
        let n = 2;
        let mut coeffs = vec![CMatrix::zeros(n, n); 5];
        coeffs[0] = CMatrix::identity(n, n);
        coeffs[1] = CMatrix::from_row_slice(2, 2, &[C64::new(0.1, 0.0), C64::new(0.3, 0.1), C64::new(-0.2, 0.0), C64::new(0.0, 0.4)]);
        coeffs[3] = CMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(0.1, 0.0), C64::new(0.2, 0.0)]);
        let r = MatrixSeriesZ::new(coeffs).unwrap();
        let back = r.log().unwrap().exp();
        for k in 0..=4 {
            assert!((back.coeff(k) - r.coeff(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_ragged() {
        let v = vec![CMatrix::zeros(2, 2), CMatrix::zeros(3, 3)];
        assert!(MatrixSeriesZ::new(v).is_err());
    }
}
