//! Propagators between vanishing and point cycles.

use crate::error::Result;
use crate::frobenius::AnModel;
use crate::C64;

use super::quad::integrate;
use super::vanishing::VanishingCycles;

fn pair(model: &AnModel, x: &[C64], y: &[C64]) -> C64 {
    let n = model.n;
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            acc += x[a] * model.eta_inv[(a, b)] * y[b];
        }
    }
    acc
}

/// `P_{β_i β_i}(λ, μ)` from its definition as a regularised integral along `t - s·1`.
///
/// The outer derivatives are taken under the integral sign: a boundary term at `s = λ`
/// plus `∫_{u_i}^{λ} (I^{(2)}_{β_i}(μ - λ + s), I^{(0)}_{β_i}(s)) ds`, with `s = u_i + (λ - u_i)τ²`.
/// `sa = sqrt(λ - u_i)` fixes the branch; `μ` is reached from `λ` along the straight segment.
pub fn propagator_cross(
    model: &AnModel,
    vc: &VanishingCycles,
    i: usize,
    sa: C64,
    mu: C64,
    tol: f64,
) -> Result<C64> {
    let u = model.u[i];
    let a = sa * sa;
    let c = (mu - u - a) / a;
    let branch = |tau: f64| sa * (C64::new(tau * tau, 0.0) + c).sqrt();
    let sb = branch(1.0);
    let boundary = -pair(
        model,
        &vc.period_branch(i, 1, sb)?,
        &vc.period_branch(i, 0, sa)?,
    );
    let mut integrand = |tau: f64| -> Result<C64> {
        let first = vc.period_branch(i, 2, branch(tau))?;
        let second = vc.period_branch(i, 0, sa * tau)?;
        Ok(pair(model, &first, &second) * a * (2.0 * tau))
    };
    let scale = boundary.norm().max(1.0);
    Ok(boundary + integrate(&mut integrand, 0.0, 1.0, tol * scale)?)
}

/// `P_{β_i β_i}(λ, μ)` as the pulled-back Bergman kernel on the two merging sheets.
pub fn propagator_bergman(model: &AnModel, vc: &VanishingCycles, i: usize, sa: C64, mu: C64) -> Result<C64> {
    let a = sa * sa;
    let c = (mu - model.u[i] - a) / a;
    vc.bergman(i, sa, sa * (C64::new(1.0, 0.0) + c).sqrt())
}
