//! Puiseux data at a single critical value: periods, V matrices, diagonal propagator.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frobenius::{AnModel, CanonicalFrame};
use crate::rmatrix::RMatrix;
use crate::series::PuiseuxSeries;
use crate::{double_factorial, CMatrix, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Closed-form A₁ period `I^{(k)}(u, λ)` in `s = (λ - u)^{1/2}`.
pub fn a1_period(k: i32, u: C64) -> PuiseuxSeries {
    if k >= 0 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * double_factorial(2 * k as i64 - 1) / 2f64.powf(k as f64 - 0.5);
        PuiseuxSeries::monomial(u, c(coef), -2 * k - 1)
    } else {
        let m = -k - 1;
        let coef = 2.0 * 2f64.powf(m as f64 + 0.5) / double_factorial(2 * m as i64 + 1);
        PuiseuxSeries::monomial(u, c(coef), 2 * m + 1)
    }
}

/// V matrices from `(1 - R(-w)^T R(-z)) / (w + z) = Σ V_kl w^k z^l`.
#[derive(Clone, Debug)]
pub struct VMatrices {
    v: BTreeMap<(usize, usize), CMatrix>,
    /// Largest `k + l` available.
    pub max_total: usize,
    /// Relative size of the numerator's `w = -z` restriction.
    pub consistency: f64,
}

impl VMatrices {
    pub fn new(r: &RMatrix, tol: f64) -> Result<Self> {
        let k_max = r.order();
        if k_max == 0 {
            return Err(Error::Truncation { needed: 1, have: 0 });
        }
        let n = r.coeff(0).nrows();
        let num = |k: usize, l: usize| -> CMatrix {
            let sign = if (k + l).is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut m = -(r.coeff(k).transpose() * r.coeff(l)) * c(sign);
            if k == 0 && l == 0 {
                m += CMatrix::identity(n, n);
            }
            m
        };
        let mut v = BTreeMap::new();
        for total in 0..k_max {
            for l in 0..=total {
                let k = total - l;
                let mut m = num(k + 1, l);
                if l > 0 {
                    m -= &v[&(k + 1, l - 1)];
                }
                v.insert((k, l), m);
            }
        }
        let scale = 1.0 + r.series.coeffs().iter().map(|m| m.norm()).fold(0.0, f64::max);
        let mut consistency = num(0, 0).norm();
        for l in 1..=k_max {
            let d = (num(0, l) - &v[&(0, l - 1)]).norm() / scale.powi(2);
            consistency = consistency.max(d);
        }
        if consistency > tol {
            return Err(Error::Residual {
                what: "V-matrix numerator at w = -z".into(),
                residual: consistency,
                tol,
            });
        }
        Ok(Self { v, max_total: k_max - 1, consistency })
    }

    pub fn get(&self, k: usize, l: usize) -> Option<&CMatrix> {
        self.v.get(&(k, l))
    }
}

/// Period and propagator expansions at every critical value of a semisimple point.
#[derive(Clone, Debug)]
pub struct LocalData {
    pub u: Vec<C64>,
    /// `cov[l][(a, i)] = ((Ψ^{-1})^T R_l)_{ai}`, the covector components of `Ψ R_l e_i`.
    cov: Vec<CMatrix>,
    pub v: VMatrices,
    pub k_max: usize,
    pub unit: usize,
}

impl LocalData {
    pub fn new(model: &AnModel, frame: &CanonicalFrame, r: &RMatrix, tol: f64) -> Result<Self> {
        let pit = frame.psi_inv.transpose();
        let cov = r.series.coeffs().iter().map(|rl| &pit * rl).collect();
        Ok(Self {
            u: model.u.clone(),
            cov,
            v: VMatrices::new(r, tol)?,
            k_max: r.order(),
            unit: model.unit_index(),
        })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Components `(I^{(k)}_{β_i}, v_a)` for all `a`, valid through `s^{2(K-k)}`.
    pub fn period(&self, i: usize, k: i32) -> Vec<PuiseuxSeries> {
        let n = self.dim();
        let k_max = self.k_max as i32;
        let trunc = 2 * (k_max - k);
        let u = self.u[i];
        (0..n)
            .map(|a| {
                let mut acc = PuiseuxSeries::zero(u, trunc);
                for l in 0..=self.k_max {
                    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                    let coef = self.cov[l][(a, i)] * sign;
                    let term = a1_period(k - l as i32, u).scale(coef);
                    acc = acc.add(&term).expect("same base");
                }
                acc.truncate(trunc)
            })
            .collect()
    }

    /// Like [`Self::period`] but checked against a requested truncation order.
    pub fn period_expansion(&self, i: usize, k: i32, order: i32) -> Result<Vec<PuiseuxSeries>> {
        let have = 2 * (self.k_max as i32 - k);
        if have < order {
            return Err(Error::Truncation { needed: order, have });
        }
        Ok(self.period(i, k).into_iter().map(|p| p.truncate(order)).collect())
    }

    /// `y_{β_i} = (I^{(-1)}_{β_i}, 1)`.
    pub fn y(&self, i: usize) -> PuiseuxSeries {
        self.period(i, -1).swap_remove(self.unit)
    }

    /// Coefficient of `(μ - λ)^m` in the regularised diagonal propagator at `u_i`.
    pub fn propagator_diag(&self, i: usize, m: usize) -> PuiseuxSeries {
        let u = self.u[i];
        let mi = m as i32;
        let trunc = 2 * (self.k_max as i32 - 1 - mi) - 1;
        let mut acc = PuiseuxSeries::zero(u, trunc);
        let g = g_coeff(m + 2);
        acc = acc
            .add(&PuiseuxSeries::monomial(u, c(g), -2 * (mi + 2)))
            .expect("same base");
        for total in 0..=self.v.max_total {
            for k in 0..=total {
                let l = total - k;
                let vkl = self.v.get(k, l).expect("within max_total")[(i, i)];
                let coef = vkl * 2f64.powi((k + l + 1) as i32) * binom_half(k as i32, m)
                    / (double_factorial(2 * k as i64 - 1) * double_factorial(2 * l as i64 - 1));
                let e = 2 * (total as i32 - 1 - mi);
                acc = acc.add(&PuiseuxSeries::monomial(u, coef, e)).expect("same base");
            }
        }
        acc.truncate(trunc)
    }

    /// `P_{β_i β_i}(λ, μ)` from the V matrices, on the branches `sa = sqrt(λ - u_i)`, `sb = sqrt(μ - u_i)`.
    pub fn propagator_two_point(&self, i: usize, sa: C64, sb: C64) -> C64 {
        let (a, b) = (sa * sa, sb * sb);
        let mut acc = (a + b) / ((a - b).powi(2) * sa * sb);
        for total in 0..=self.v.max_total {
            for k in 0..=total {
                let l = total - k;
                let vkl = self.v.get(k, l).expect("within max_total")[(i, i)];
                acc += vkl * 2f64.powi((k + l + 1) as i32) * sb.powi(2 * k as i32 - 1) * sa.powi(2 * l as i32 - 1)
                    / (double_factorial(2 * k as i64 - 1) * double_factorial(2 * l as i64 - 1));
            }
        }
        acc
    }
}

/// `C(k - 1/2, m)`.
fn binom_half(k: i32, m: usize) -> f64 {
    let x = k as f64 - 0.5;
    (0..m).fold(1.0, |acc, j| acc * (x - j as f64) / (j as f64 + 1.0))
}

/// Taylor coefficient `[x^j] (2 + x)(1 + x)^{-1/2}`.
fn g_coeff(j: usize) -> f64 {
    let b = |j: usize| binom(-0.5, j);
    if j == 0 {
        2.0
    } else {
        2.0 * b(j) + b(j - 1)
    }
}

fn binom(x: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (x - i as f64) / (i as f64 + 1.0))
}
