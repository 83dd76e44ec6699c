//! Exact periods of point cycles from the roots of `F(t, x) = λ`.

use crate::error::{Error, Result};
use crate::frobenius::AnModel;
use crate::series::ComplexPolynomial;
use crate::C64;

/// Polynomial data giving `(I^{(k)}_{[x]}, v_a)` for a single root `x` of `F = λ`.
///
/// For `k ≥ 0` the period is `P_{k,a}(x) / F'(x)^{2k+1}`; for `k = -1-m` it is `H_{m,a}(x)`,
/// an iterated antiderivative (integration constants cancel on zero-sum cycles).
#[derive(Clone, Debug)]
pub struct SheetPeriods {
    pub dim: usize,
    f: ComplexPolynomial,
    fp: ComplexPolynomial,
    fpp: ComplexPolynomial,
    fppp: ComplexPolynomial,
    positive: Vec<Vec<ComplexPolynomial>>,
    negative: Vec<Vec<ComplexPolynomial>>,
}

impl SheetPeriods {
    pub fn new(model: &AnModel, k_pos: usize, k_neg: usize) -> Self {
        let fp = model.fprime.clone();
        let fpp = fp.derivative();
        let fppp = fpp.derivative();
        let mut positive = vec![model.phi.clone()];
        for k in 0..k_pos {
            let prev = &positive[k];
            let next = prev
                .iter()
                .map(|p| p.derivative().mul(&fp).add(&p.mul(&fpp).scale(C64::new(-(2.0 * k as f64 + 1.0), 0.0))))
                .collect();
            positive.push(next);
        }
        let mut negative = vec![model.phi.iter().map(|p| p.integral()).collect::<Vec<_>>()];
        for m in 0..k_neg {
            let next = negative[m].iter().map(|h| h.mul(&fp).integral()).collect();
            negative.push(next);
        }
        Self { dim: model.n, f: model.f.clone(), fp, fpp, fppp, positive, negative }
    }

    pub fn f(&self) -> &ComplexPolynomial {
        &self.f
    }

    pub fn fprime(&self) -> &ComplexPolynomial {
        &self.fp
    }

    /// Numerators `P_{k,a}` (`k ≥ 0`) or antiderivatives `H_{-1-k,a}` (`k < 0`).
    pub fn polys(&self, k: i32) -> Option<&[ComplexPolynomial]> {
        if k >= 0 {
            self.positive.get(k as usize).map(|v| v.as_slice())
        } else {
            self.negative.get((-1 - k) as usize).map(|v| v.as_slice())
        }
    }

    pub fn k_range(&self) -> (i32, i32) {
        (-(self.negative.len() as i32), self.positive.len() as i32 - 1)
    }

    /// `(I^{(k)}_{[x]}, v_a)`.
    pub fn point(&self, a: usize, k: i32, x: C64) -> Result<C64> {
        if k >= 0 {
            let p = self
                .positive
                .get(k as usize)
                .ok_or(Error::Truncation { needed: k, have: self.positive.len() as i32 - 1 })?;
            Ok(p[a].eval(x) / self.fp.eval(x).powi(2 * k + 1))
        } else {
            let m = (-1 - k) as usize;
            let h = self
                .negative
                .get(m)
                .ok_or(Error::Truncation { needed: k, have: -(self.negative.len() as i32) })?;
            Ok(h[a].eval(x))
        }
    }

    /// `(I^{(k)}_c, v_a)` for the cycle `Σ_j c_j [x_j]`.
    pub fn cycle(&self, a: usize, k: i32, roots: &[C64], c: &[f64]) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in roots.iter().zip(c) {
            if *w != 0.0 {
                acc += self.point(a, k, *x)? * *w;
            }
        }
        Ok(acc)
    }

    /// `x'(λ) = 1 / F'(x)`.
    pub fn dx(&self, x: C64) -> C64 {
        self.fp.eval(x).inv()
    }

    /// One sixth of the Schwarzian `{x; λ}` of the inverse branch through `x`.
    pub fn schwarzian_sixth(&self, x: C64) -> C64 {
        let f1 = self.fp.eval(x);
        let f2 = self.fpp.eval(x);
        let f3 = self.fppp.eval(x);
        let sf = f3 / f1 - (f2 / f1).powi(2) * 1.5;
        -sf / (f1 * f1) / 6.0
    }

    /// Regular part at `μ = λ` of the propagator between point-cycle combinations.
    pub fn propagator0(&self, roots: &[C64], c1: &[f64], c2: &[f64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in roots.iter().enumerate() {
            for (l, xl) in roots.iter().enumerate() {
                let w = c1[j] * c2[l];
                if w == 0.0 {
                    continue;
                }
                if j == l {
                    acc += self.schwarzian_sixth(*xj) * w;
                } else {
                    acc += self.dx(*xj) * self.dx(*xl) / (xj - xl).powi(2) * w;
                }
            }
        }
        acc
    }

    /// Full two-point propagator between point-cycle combinations at `λ ≠ μ`.
    pub fn propagator(&self, roots_l: &[C64], roots_m: &[C64], c1: &[f64], c2: &[f64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in roots_l.iter().enumerate() {
            for (l, yl) in roots_m.iter().enumerate() {
                let w = c1[j] * c2[l];
                if w != 0.0 {
                    acc += self.dx(*xj) * self.dx(*yl) / (xj - yl).powi(2) * w;
                }
            }
        }
        acc
    }
}

/// Roots of `F(t, x) = λ`.
pub fn roots_at(model: &AnModel, lambda: C64) -> Result<Vec<C64>> {
    let mut c = model.f.coeffs().to_vec();
    c[0] -= lambda;
    Ok(ComplexPolynomial::new(c).roots(1e-13, 0.0)?.values)
}

/// Newton refinement of a root of `F = λ` from a starting guess.
pub fn newton_root(f: &ComplexPolynomial, lambda: C64, mut x: C64) -> Option<C64> {
    let fp = f.derivative();
    for _ in 0..50 {
        let d = fp.eval(x);
        if d.norm() == 0.0 {
            return None;
        }
        let step = (f.eval(x) - lambda) / d;
        x -= step;
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            return Some(x);
        }
    }
    ((f.eval(x) - lambda).norm() < 1e-12).then_some(x)
}

/// Continues the given roots of `F = path(0)` along `path(τ)`, `τ ∈ [0, 1]`.
///
/// Steps are halved whenever Newton fails or two tracked roots come closer than
/// the step taken by either.
pub fn track_roots(f: &ComplexPolynomial, path: &dyn Fn(f64) -> C64, start: &[C64], tau_end: f64) -> Result<Vec<C64>> {
    let mut cur = start.to_vec();
    let mut tau = 0.0;
    let mut h: f64 = (tau_end / 16.0).abs().max(1e-3) * tau_end.signum();
    let dir = tau_end.signum();
    let mut guard = 0;
    while (tau_end - tau) * dir > 1e-15 {
        guard += 1;
        if guard > 200_000 {
            return Err(Error::Numeric("root tracking did not finish".into()));
        }
        let step = if (tau + h - tau_end) * dir > 0.0 { tau_end - tau } else { h };
        let lam = path(tau + step);
        let mut next = Vec::with_capacity(cur.len());
        let mut ok = true;
        for x in &cur {
            match newton_root(f, lam, *x) {
                Some(y) if (y - x).norm() < 0.3 * min_gap(&cur).max(1e-300) => next.push(y),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && min_gap(&next) > 0.0 {
            cur = next;
            tau += step;
            h = (h * 1.5).clamp(-0.1, 0.1);
        } else {
            h *= 0.5;
            if h.abs() < 1e-12 {
                return Err(Error::Numeric("root tracking step underflow".into()));
            }
        }
    }
    Ok(cur)
}

fn min_gap(xs: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            g = g.min((xs[i] - xs[j]).norm());
        }
    }
    g
}
