//! Period vectors by continuation of `(λ - E•) ∂_λ I^{(k)} = (θ - k - 1/2) I^{(k)}`.

use crate::error::{Error, Result};
use crate::frobenius::AnModel;
use crate::local::LocalData;
use crate::{CMatrix, CVector, C64};

fn rhs(model: &AnModel, shift: &CMatrix, lambda: C64, v: &CVector) -> Result<CVector> {
    let n = model.n;
    let m = CMatrix::identity(n, n) * lambda - &model.euler;
    let lu = m.lu();
    lu.solve(&(shift * v)).ok_or_else(|| Error::Numeric(format!("λ = {lambda} is a critical value")))
}

fn rk4(model: &AnModel, shift: &CMatrix, a: C64, h: C64, v: &CVector) -> Result<CVector> {
    let half = h * 0.5;
    let k1 = rhs(model, shift, a, v)?;
    let k2 = rhs(model, shift, a + half, &(v + &k1 * half))?;
    let k3 = rhs(model, shift, a + half, &(v + &k2 * half))?;
    let k4 = rhs(model, shift, a + h, &(v + &k3 * h))?;
    Ok(v + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / 6.0))
}

/// Continues the covector `(I^{(k)}, v_a)` from `path[0]` along the polyline `path`.
///
/// Each segment is integrated by RK4 with step-doubling error control at relative tolerance `tol`.
pub fn continue_period(model: &AnModel, k: i32, path: &[C64], start: &CVector, tol: f64) -> Result<CVector> {
    let n = model.n;
    let shift = model.theta() - CMatrix::identity(n, n) * C64::new(k as f64 + 0.5, 0.0);
    let mut v = &model.eta_inv * start;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut pos = 0.0_f64;
        let mut dt: f64 = 1.0 / 32.0;
        let mut guard = 0usize;
        while pos < 1.0 - 1e-15 {
            guard += 1;
            if guard > 1_000_000 {
                return Err(Error::Numeric("period continuation did not finish".into()));
            }
            let step = dt.min(1.0 - pos);
            let here = a + (b - a) * pos;
            let h = (b - a) * step;
            let full = rk4(model, &shift, here, h, &v)?;
            let mid = rk4(model, &shift, here, h * 0.5, &v)?;
            let two = rk4(model, &shift, here + h * 0.5, h * 0.5, &mid)?;
            let err = (&full - &two).norm() / (1.0 + two.norm());
            if err <= tol {
                v = two;
                pos += step;
                if err < tol / 64.0 {
                    dt = (dt * 2.0).min(0.25);
                }
            } else {
                dt *= 0.5;
                if dt < 1e-14 {
                    return Err(Error::Numeric("period continuation step underflow".into()));
                }
            }
        }
    }
    Ok(&model.eta * v)
}

/// `(I^{(k)}_{β_i}, v_a)` at the end of `path`, seeded by the local expansion at `path[0]`.
pub fn ode_period(model: &AnModel, local: &LocalData, i: usize, k: i32, path: &[C64], tol: f64) -> Result<CVector> {
    let first = *path.first().ok_or_else(|| Error::Invalid("empty path".into()))?;
    let seed = CVector::from_iterator(model.n, local.period(i, k).iter().map(|p| p.eval(first)));
    continue_period(model, k, path, &seed, tol)
}
