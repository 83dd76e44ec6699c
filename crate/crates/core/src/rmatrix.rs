//! Givental R-matrix by formal stationary phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::{AnModel, CanonicalFrame};
use crate::series::{ComplexPolynomial, MatrixSeriesZ};
use crate::{double_factorial, CMatrix, C64};

#[derive(Clone, Debug)]
pub struct RMatrix {
    pub series: MatrixSeriesZ,
}

/// Residuals of the connection and symplectic certificates.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct RResiduals {
    /// `[U, R_{k+1}] - (μ - k) R_k`, relative, for `k = 0..K-1`.
    pub ode: Vec<f64>,
    /// `Σ_{a+b=m} (-1)^a R_a^T R_b - δ_{m0}`, relative, for `m = 0..K`.
    pub unitarity: Vec<f64>,
    pub r0: f64,
    pub r1_symmetry: f64,
}

impl RResiduals {
    pub fn max(&self) -> f64 {
        self.ode
            .iter()
            .chain(&self.unitarity)
            .chain([&self.r0, &self.r1_symmetry])
            .fold(0.0, |a, b| a.max(*b))
    }
}

fn truncate(p: &ComplexPolynomial, deg: usize) -> ComplexPolynomial {
    ComplexPolynomial::new(p.coeffs().iter().take(deg + 1).copied().collect())
}

/// Stationary-phase coefficients `c_0..c_K` of `∫ e^{F/z} p dx` at critical point `i`,
/// normalised so that `c_0 = p(ξ_i)`.
pub fn saddle_expansion(model: &AnModel, i: usize, p: &ComplexPolynomial, order: usize) -> Vec<C64> {
    let xi = model.xi[i];
    let delta = model.delta[i];
    let maxdeg = 6 * order + p.degree() + 2;
    let shifted = model.f.shift(xi);
    let s = ComplexPolynomial::new(
        shifted
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| if k >= 3 { *c } else { C64::new(0.0, 0.0) })
            .collect(),
    );
    let ps = p.shift(xi);
    let minus_inv = -delta.inv();
    let mut out = vec![C64::new(0.0, 0.0); order + 1];
    // term = p(ξ+y) S^v / v!
    let mut term = truncate(&ps, maxdeg);
    for v in 0..=2 * order {
        for (deg, coef) in term.coeffs().iter().enumerate() {
            if deg % 2 == 1 {
                continue;
            }
            let q = deg / 2;
            if q < v || q - v > order {
                continue;
            }
            out[q - v] += coef * double_factorial(deg as i64 - 1) * minus_inv.powi(q as i32);
        }
        term = truncate(&term.mul(&s), maxdeg).scale(C64::new(1.0 / (v as f64 + 1.0), 0.0));
    }
    out
}

impl RMatrix {
    pub fn compute(model: &AnModel, frame: &CanonicalFrame, order: usize) -> Result<Self> {
        if !model.semisimple {
            return Err(Error::NotSemisimple { gap: model.u_gap });
        }
        let n = model.n;
        let mut cov = vec![CMatrix::zeros(n, n); order + 1];
        for i in 0..n {
            for a in 0..n {
                let sp = saddle_expansion(model, i, &model.phi[a], order);
                for (k, v) in sp.into_iter().enumerate() {
                    cov[k][(a, i)] = v / frame.sqrt_delta[i];
                }
            }
        }
        let pt = frame.psi.transpose();
        let coeffs = cov.iter().map(|c| &pt * c).collect();
        Ok(Self { series: MatrixSeriesZ::new(coeffs)? })
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn coeff(&self, k: usize) -> &CMatrix {
        self.series.coeff(k)
    }

    pub fn residuals(&self, frame: &CanonicalFrame) -> RResiduals {
        let k_max = self.order();
        let n = frame.u.nrows();
        let r = self.series.coeffs();
        let scale = |k: usize| 1.0 + r[..=k.min(k_max)].iter().map(|m| m.norm()).fold(0.0, f64::max);
        let ode = (0..k_max)
            .map(|k| {
                let lhs = &frame.u * &r[k + 1] - &r[k + 1] * &frame.u;
                let rhs = (&frame.mu - CMatrix::identity(n, n) * C64::new(k as f64, 0.0)) * &r[k];
                (lhs - rhs).norm() / scale(k + 1)
            })
            .collect();
        let unitarity = (0..=k_max)
            .map(|m| {
                let mut acc = CMatrix::zeros(n, n);
                for a in 0..=m {
                    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                    acc += r[a].transpose() * &r[m - a] * C64::new(sign, 0.0);
                }
                if m == 0 {
                    acc -= CMatrix::identity(n, n);
                }
                acc.norm() / scale(m).powi(2)
            })
            .collect();
        let r0 = (&r[0] - CMatrix::identity(n, n)).norm();
        let r1_symmetry = if k_max >= 1 { (&r[1] - r[1].transpose()).norm() / scale(1) } else { 0.0 };
        RResiduals { ode, unitarity, r0, r1_symmetry }
    }

    /// Fails with the worst residual when any certificate exceeds `tol`.
    pub fn verify(&self, frame: &CanonicalFrame, tol: f64) -> Result<RResiduals> {
        let res = self.residuals(frame);
        let worst = res.max();
        if worst > tol {
            return Err(Error::Residual { what: "R-matrix certificates".into(), residual: worst, tol });
        }
        Ok(res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::ModelOptions;

    fn build(t: &[C64], k: usize) -> (AnModel, CanonicalFrame, RMatrix) {
        let m = AnModel::build(t.len(), t, &ModelOptions::default()).unwrap();
        let f = m.canonical_frame().unwrap();
        let r = RMatrix::compute(&m, &f, k).unwrap();
        (m, f, r)
    }

    #[test]
    fn a1_is_trivial() {
        let (_, _, r) = build(&[C64::new(0.3, 0.0)], 6);
        for k in 1..=6 {
            assert!(r.coeff(k).norm() < 1e-14);
        }
    }

    #[test]
    fn certificates_a2_a3() {
        let pts: Vec<Vec<C64>> = vec![
            vec![C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.4, -0.3), C64::new(0.2, 0.1)],
            vec![C64::new(-0.5, 0.1), C64::new(0.3, 0.0), C64::new(0.1, 0.2)],
        ];
        for t in pts {
            let (_, f, r) = build(&t, 8);
            let res = r.residuals(&f);
            assert!(res.max() < 1e-10, "{res:?}");
        }
    }
}
