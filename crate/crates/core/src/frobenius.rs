//! Frobenius structure of the A_n miniversal deformation.
//!
//! Indices are zero-based: slot `a` stands for `v_{a+1} = ∂/∂τ_{a+1}`, so the
//! unit is slot `n - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ComplexPolynomial;
use crate::{CMatrix, C64};

/// Numerical knobs for [`AnModel::build`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelOptions {
    /// Semisimple when `min |u_i - u_j| >= gap_rel * (1 + max |u_i|)`.
    pub gap_rel: f64,
    pub root_tol: f64,
    pub merge: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { gap_rel: 1e-6, root_tol: 1e-12, merge: 1e-9 }
    }
}

/// Conformal dimension and spectrum.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Degrees {
    pub d: f64,
    pub d_a: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AnModel {
    pub n: usize,
    pub t: Vec<C64>,
    pub f: ComplexPolynomial,
    pub fprime: ComplexPolynomial,
    pub xi: Vec<C64>,
    pub u: Vec<C64>,
    pub delta: Vec<C64>,
    pub tau: Vec<C64>,
    /// `jac_tau_t[(a, b)] = ∂τ_a/∂t^b`.
    pub jac_tau_t: CMatrix,
    pub jac_t_tau: CMatrix,
    /// `du_dtau[(i, a)] = ∂u_i/∂τ_a`.
    pub du_dtau: CMatrix,
    /// `phi[a] = ∂F/∂τ_a` as a polynomial in `x`.
    pub phi: Vec<ComplexPolynomial>,
    pub eta: CMatrix,
    pub eta_inv: CMatrix,
    /// `structure[a][(c, b)]` is the coefficient of `v_c` in `v_a • v_b`.
    pub structure: Vec<CMatrix>,
    /// Matrix of `E•` in the flat frame.
    pub euler: CMatrix,
    pub degrees: Degrees,
    pub semisimple: bool,
    pub u_gap: f64,
    pub options: ModelOptions,
}

/// Ψ, Ψ^{-1}, U, θ, μ at a semisimple point.
#[derive(Clone, Debug)]
pub struct CanonicalFrame {
    pub psi: CMatrix,
    pub psi_inv: CMatrix,
    pub u: CMatrix,
    pub theta: CMatrix,
    pub mu: CMatrix,
    pub sqrt_delta: Vec<C64>,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Coefficients of `(1 + w)^q` in `y = 1/x` through `y^deg`.
fn binomial_power(w: &[C64], q: f64, deg: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); deg + 1];
    out[0] = c(1.0);
    let mut wk = out.clone();
    let mut binom = 1.0;
    for k in 1..=deg {
        let mut next = vec![C64::new(0.0, 0.0); deg + 1];
        for (i, a) in wk.iter().enumerate() {
            for (j, b) in w.iter().enumerate() {
                if i + j <= deg {
                    next[i + j] += a * b;
                }
            }
        }
        wk = next;
        binom *= (q - (k as f64 - 1.0)) / k as f64;
        for (o, v) in out.iter_mut().zip(&wk) {
            *o += v * binom;
        }
    }
    out
}

/// Flat coordinates `τ` and Jacobian `∂τ_a/∂t^b` (zero-based slots).
pub fn flat_coordinates(n: usize, t: &[C64]) -> (Vec<C64>, CMatrix) {
    let deg = n + 1;
    let mut w = vec![C64::new(0.0, 0.0); deg + 1];
    for b in 1..=n {
        w[b + 1] = t[b - 1] * (n as f64 + 1.0);
    }
    let mut tau = vec![C64::new(0.0, 0.0); n];
    let mut jac = CMatrix::zeros(n, n);
    for a in 1..=n {
        let p = a as f64 / (n as f64 + 1.0);
        let full = binomial_power(&w, p, deg);
        tau[a - 1] = full[a + 1] / a as f64;
        let d = binomial_power(&w, p - 1.0, deg);
        for b in 1..=a {
            jac[(a - 1, b - 1)] = d[a - b];
        }
    }
    (tau, jac)
}

impl AnModel {
    pub fn build(n: usize, t: &[C64], options: &ModelOptions) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("n must be at least 1".into()));
        }
        if t.len() != n {
            return Err(Error::Invalid(format!("expected {n} parameters, got {}", t.len())));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite deformation parameter".into()));
        }
        let mut fc = vec![C64::new(0.0, 0.0); n + 2];
        fc[n + 1] = c(1.0 / (n as f64 + 1.0));
        for a in 1..=n {
            fc[n - a] += t[a - 1];
        }
        let f = ComplexPolynomial::new(fc);
        let fprime = f.derivative();
        let f2 = fprime.derivative();
        let roots = fprime.roots(options.root_tol, options.merge)?;
        let xi = roots.values;
        let u: Vec<C64> = xi.iter().map(|x| f.eval(*x)).collect();
        let delta: Vec<C64> = xi.iter().map(|x| f2.eval(*x)).collect();

        let (tau, jac_tau_t) = flat_coordinates(n, t);
        let jac_t_tau = jac_tau_t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular flat-coordinate Jacobian".into()))?;
        let phi: Vec<ComplexPolynomial> = (0..n)
            .map(|a| {
                let mut v = vec![C64::new(0.0, 0.0); n];
                for b in 1..=n {
                    v[n - b] += jac_t_tau[(b - 1, a)];
                }
                ComplexPolynomial::new(v)
            })
            .collect();
        let du_dtau = CMatrix::from_fn(n, n, |i, a| phi[a].eval(xi[i]));

        let umax = u.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut u_gap = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                u_gap = u_gap.min((u[i] - u[j]).norm());
            }
        }
        let semisimple = !roots.near_multiple && u_gap >= options.gap_rel * (1.0 + umax);

        let mut model = Self {
            n,
            t: t.to_vec(),
            f,
            fprime,
            xi,
            u,
            delta,
            tau,
            jac_tau_t,
            jac_t_tau,
            du_dtau,
            phi,
            eta: CMatrix::zeros(n, n),
            eta_inv: CMatrix::zeros(n, n),
            structure: Vec::new(),
            euler: CMatrix::zeros(n, n),
            degrees: Degrees {
                d: (n as f64 - 1.0) / (n as f64 + 1.0),
                d_a: (1..=n).map(|a| (n - a) as f64 / (n as f64 + 1.0)).collect(),
                rho: vec![0.0; n],
            },
            semisimple,
            u_gap,
            options: options.clone(),
        };
        model.eta = if semisimple {
            model.pairing_semisimple()
        } else {
            CMatrix::from_fn(n, n, |a, b| model.trace_pairing(&model.phi[a], &model.phi[b]))
        };
        model.eta_inv = model
            .eta
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("degenerate pairing".into()))?;
        model.structure = (0..n)
            .map(|a| {
                let mut m = CMatrix::zeros(n, n);
                for b in 0..n {
                    let coords = model.to_flat(&model.phi[a].mul(&model.phi[b]));
                    m.set_column(b, &coords);
                }
                m
            })
            .collect();
        model.euler = CMatrix::zeros(n, n);
        for b in 0..n {
            let coords = model.to_flat(&model.f.mul(&model.phi[b]));
            model.euler.set_column(b, &coords);
        }
        Ok(model)
    }

    /// Build from flat coordinates by Newton iteration on `τ(t)`.
    pub fn from_tau(n: usize, tau: &[C64], options: &ModelOptions) -> Result<Self> {
        let mut t = tau.to_vec();
        for _ in 0..60 {
            let (cur, jac) = flat_coordinates(n, &t);
            let r = crate::CVector::from_iterator(n, cur.iter().zip(tau).map(|(a, b)| a - b));
            if r.norm() < 1e-15 * (1.0 + t.iter().map(|x| x.norm()).fold(0.0, f64::max)) {
                break;
            }
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Numeric("singular Jacobian in τ inversion".into()))?;
            for (ti, s) in t.iter_mut().zip(step.iter()) {
                *ti -= s;
            }
        }
        Self::build(n, &t, options)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn unit_index(&self) -> usize {
        self.n - 1
    }

    /// Coordinates in the flat frame of `p mod F'`.
    pub fn to_flat(&self, p: &ComplexPolynomial) -> crate::CVector {
        let r = p.rem(&self.fprime);
        let n = self.n;
        let mono = crate::CVector::from_fn(n, |b, _| r.coeff(n - 1 - b));
        &self.jac_tau_t * mono
    }

    /// Polynomial representative of a flat-frame vector.
    pub fn from_flat(&self, v: &[C64]) -> ComplexPolynomial {
        let mut acc = ComplexPolynomial::zero();
        for (a, x) in v.iter().enumerate() {
            acc = acc.add(&self.phi[a].scale(*x));
        }
        acc
    }

    /// Trace form on `C[x]/(F')`: the `x^{n-1}` coefficient of the remainder.
    pub fn trace_pairing(&self, p: &ComplexPolynomial, q: &ComplexPolynomial) -> C64 {
        p.mul(q).rem(&self.fprime).coeff(self.n - 1)
    }

    fn pairing_semisimple(&self) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, n, |a, b| {
            (0..n)
                .map(|i| self.du_dtau[(i, a)] * self.du_dtau[(i, b)] / self.delta[i])
                .sum()
        })
    }

    /// `(v_a • v_b, v_c)`.
    pub fn three_point(&self, a: usize, b: usize, c: usize) -> C64 {
        let col = self.structure[a].column(b);
        (0..self.n).map(|d| col[d] * self.eta[(d, c)]).sum()
    }

    /// `Tr(v_a •)`.
    pub fn trace_mult(&self, a: usize) -> C64 {
        self.structure[a].trace()
    }

    /// θ in the flat frame.
    pub fn theta(&self) -> CMatrix {
        let d = self.degrees.d;
        CMatrix::from_fn(self.n, self.n, |a, b| {
            if a == b {
                c(d / 2.0 - self.degrees.d_a[a])
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn canonical_frame(&self) -> Result<CanonicalFrame> {
        if !self.semisimple {
            return Err(Error::NotSemisimple { gap: self.u_gap });
        }
        let n = self.n;
        let sqrt_delta: Vec<C64> = self.delta.iter().map(|d| d.sqrt()).collect();
        let psi_inv = CMatrix::from_fn(n, n, |k, b| self.du_dtau[(k, b)] / sqrt_delta[k]);
        let psi = &self.eta_inv * psi_inv.transpose();
        let theta = self.theta();
        let mu = &psi_inv * &theta * &psi;
        let u = CMatrix::from_fn(n, n, |i, j| if i == j { self.u[i] } else { C64::new(0.0, 0.0) });
        Ok(CanonicalFrame { psi, psi_inv, u, theta, mu, sqrt_delta })
    }
}

impl CanonicalFrame {
    /// Same frame with the sign of `√Δ_i` flipped for each `i` in `flips`.
    pub fn with_flipped_branches(&self, flips: &[usize]) -> Self {
        let mut out = self.clone();
        for &i in flips {
            out.sqrt_delta[i] = -out.sqrt_delta[i];
            let row = -out.psi_inv.row(i).clone_owned();
            out.psi_inv.set_row(i, &row);
            let col = -out.psi.column(i).clone_owned();
            out.psi.set_column(i, &col);
        }
        out.mu = &out.psi_inv * &out.theta * &out.psi;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(t: &[f64]) -> AnModel {
        let t: Vec<C64> = t.iter().map(|x| c(*x)).collect();
        AnModel::build(t.len(), &t, &ModelOptions::default()).unwrap()
    }

    #[test]
    fn a1_trivial() {
        let m = model(&[0.7]);
        assert!((m.xi[0]).norm() < 1e-14);
        assert!((m.u[0] - c(0.7)).norm() < 1e-14);
        assert!((m.eta[(0, 0)] - c(1.0)).norm() < 1e-14);
        let fr = m.canonical_frame().unwrap();
        assert!((fr.psi[(0, 0)] - c(1.0)).norm() < 1e-14);
        assert!(fr.mu[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn a2_real_point() {
        let m = model(&[-1.0, 0.0]);
        let mut pairs: Vec<(f64, f64, f64)> =
            (0..2).map(|i| (m.xi[i].re, m.u[i].re, m.delta[i].re)).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!((pairs[0].0 + 1.0).abs() < 1e-12 && (pairs[1].0 - 1.0).abs() < 1e-12);
        assert!((pairs[0].1 - 2.0 / 3.0).abs() < 1e-12 && (pairs[1].1 + 2.0 / 3.0).abs() < 1e-12);
        assert!((pairs[0].2 + 2.0).abs() < 1e-12 && (pairs[1].2 - 2.0).abs() < 1e-12);
        assert!((m.eta[(0, 1)] - c(1.0)).norm() < 1e-12);
        assert!(m.eta[(0, 0)].norm() < 1e-12 && m.eta[(1, 1)].norm() < 1e-12);
        assert!((m.tau[0] - c(-1.0)).norm() < 1e-14 && m.tau[1].norm() < 1e-14);
        let th = m.canonical_frame().unwrap().theta;
        assert!((th[(0, 0)] - c(-1.0 / 6.0)).norm() < 1e-15);
        assert!((th[(1, 1)] - c(1.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn caustic_flagged() {
        let m = model(&[0.0, 0.0]);
        assert!(!m.semisimple);
        assert!(matches!(m.canonical_frame(), Err(Error::NotSemisimple { .. })));
        assert!((m.eta[(0, 1)] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn flat_origin() {
        for n in 1..6 {
            let (tau, jac) = flat_coordinates(n, &vec![C64::new(0.0, 0.0); n]);
            assert!(tau.iter().all(|x| x.norm() == 0.0));
            assert!((jac - CMatrix::identity(n, n)).norm() < 1e-15);
        }
    }

    #[test]
    fn a3_pairing_constant_and_agrees_with_trace() {
        let base = [0.3, -0.2, 0.15];
        let m0 = model(&base);
        for k in 0..5 {
            let mut t = base;
            t[k % 3] += 0.01 * (k as f64 + 1.0);
            let m = model(&t);
            assert!((&m.eta - &m0.eta).norm() < 1e-8);
            for a in 0..3 {
                for b in 0..3 {
                    let tr = m.trace_pairing(&m.phi[a], &m.phi[b]);
                    assert!((tr - m.eta[(a, b)]).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn frobenius_unit_euler() {
        let m = model(&[0.4, -0.3, 0.2, 0.1]);
        let n = m.n;
        let e = m.unit_index();
        assert!((&m.structure[e] - CMatrix::identity(n, n)).norm() < 1e-12);
        for i in 0..n {
            assert!((m.du_dtau[(i, e)] - c(1.0)).norm() < 1e-12);
        }
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    let x = m.three_point(a, b, cc);
                    assert!((x - m.three_point(b, cc, a)).norm() < 1e-10);
                    assert!((x - m.three_point(cc, a, b)).norm() < 1e-10);
                }
            }
        }
        let fr = m.canonical_frame().unwrap();
        let diag = &fr.psi_inv * &m.euler * &fr.psi;
        assert!((diag - &fr.u).norm() < 1e-8);
        assert!((&fr.psi * &fr.psi_inv - CMatrix::identity(n, n)).norm() < 1e-10);
        assert!(m.degrees.d_a.iter().all(|d| *d >= 0.0 && *d <= m.degrees.d));
    }

    #[test]
    fn tau_roundtrip() {
        let t = [C64::new(0.2, 0.1), C64::new(-0.3, 0.0), C64::new(0.05, -0.2)];
        let m = AnModel::build(3, &t, &ModelOptions::default()).unwrap();
        let back = AnModel::from_tau(3, &m.tau, &ModelOptions::default()).unwrap();
        for (a, b) in back.t.iter().zip(&t) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
