//! Vanishing cycles `β_i` as differences of the two roots merging at `ξ_i`.
//!
//! Everything is evaluated in the local coordinate `y = x - ξ_i` with Taylor-shifted
//! polynomials, so the periods stay accurate as `λ → u_i`.

use crate::error::{Error, Result};
use crate::frobenius::AnModel;
use crate::local::LocalData;
use crate::series::ComplexPolynomial;
use crate::C64;

use super::sheets::SheetPeriods;

#[derive(Clone, Debug)]
struct LocalSheet {
    /// `F(ξ_i + y) - u_i`, with the constant and linear terms set to zero.
    g: ComplexPolynomial,
    gp: ComplexPolynomial,
    gpp: ComplexPolynomial,
    gppp: ComplexPolynomial,
    /// `sqrt(c_2)` with `c_2` the quadratic coefficient of `g`.
    root_c2: C64,
    k_min: i32,
    polys: Vec<Vec<ComplexPolynomial>>,
}

impl LocalSheet {
    fn new(model: &AnModel, sheets: &SheetPeriods, i: usize) -> Self {
        let xi = model.xi[i];
        let mut c = sheets.f().shift(xi).coeffs().to_vec();
        c[0] = C64::new(0.0, 0.0);
        c[1] = C64::new(0.0, 0.0);
        let g = ComplexPolynomial::new(c);
        let gp = g.derivative();
        let gpp = gp.derivative();
        let gppp = gpp.derivative();
        let root_c2 = g.coeff(2).sqrt();
        let (k_min, k_max) = sheets.k_range();
        let polys = (k_min..=k_max)
            .map(|k| sheets.polys(k).expect("in range").iter().map(|p| p.shift(xi)).collect())
            .collect();
        Self { g, gp, gpp, gppp, root_c2, k_min, polys }
    }

    fn newton(&self, target: C64, mut y: C64) -> Option<C64> {
        for _ in 0..60 {
            let d = self.gp.eval(y);
            if d.norm() == 0.0 {
                return None;
            }
            let step = (self.g.eval(y) - target) / d;
            y -= step;
            if step.norm() <= 4.0 * f64::EPSILON * y.norm() {
                return Some(y);
            }
        }
        let resid = (self.g.eval(y) - target).norm();
        (resid <= 1e-13 * target.norm().max(1e-300)).then_some(y)
    }

    /// Root `y` of `g(y) = s²` continuing `y ≈ s / sqrt(c_2)`.
    fn root(&self, s: C64) -> Result<C64> {
        if s.norm() == 0.0 {
            return Err(Error::Numeric("vanishing pair evaluated at the branch point".into()));
        }
        let guess = s / self.root_c2;
        if let Some(y) = self.newton(s * s, guess) {
            if (y - guess).norm() < 0.5 * guess.norm() {
                return Ok(y);
            }
        }
        let steps = 32;
        let mut y = guess / steps as f64;
        for j in 1..=steps {
            let sj = s * (j as f64 / steps as f64);
            let start = if j == 1 { sj / self.root_c2 } else { y * (j as f64 / (j - 1) as f64) };
            y = self
                .newton(sj * sj, start)
                .ok_or_else(|| Error::Numeric(format!("vanishing root continuation failed at s = {sj}")))?;
        }
        Ok(y)
    }

    fn point(&self, a: usize, k: i32, y: C64) -> Result<C64> {
        let idx = k - self.k_min;
        let p = self
            .polys
            .get(idx as usize)
            .filter(|_| idx >= 0)
            .ok_or(Error::Truncation { needed: k, have: self.k_min + self.polys.len() as i32 - 1 })?;
        Ok(if k >= 0 { p[a].eval(y) / self.gp.eval(y).powi(2 * k + 1) } else { p[a].eval(y) })
    }
}

/// Vanishing cycles `β_i = ε_i ([x_+] - [x_-])`, oriented to match the local expansions.
///
/// On the branch `s = sqrt(λ - u_i)` the roots are `x_± ≈ ξ_i ± s / sqrt(c_2)`.
#[derive(Clone, Debug)]
pub struct VanishingCycles {
    pub sign: Vec<f64>,
    xi: Vec<C64>,
    sheets: Vec<LocalSheet>,
}

impl VanishingCycles {
    /// Builds the local sheets with unit orientation.
    pub fn new(model: &AnModel, sheets: &SheetPeriods) -> Self {
        Self {
            sign: vec![1.0; model.n],
            xi: model.xi.clone(),
            sheets: (0..model.n).map(|i| LocalSheet::new(model, sheets, i)).collect(),
        }
    }

    /// Builds the local sheets and fixes each orientation against `local`.
    pub fn calibrate(model: &AnModel, sheets: &SheetPeriods, local: &LocalData) -> Result<Self> {
        let mut vc = Self::new(model, sheets);
        for i in 0..model.n {
            let gap = (0..model.n)
                .filter(|&j| j != i)
                .map(|j| (model.u[j] - model.u[i]).norm())
                .fold(f64::INFINITY, f64::min);
            let scale = if gap.is_finite() { gap } else { 1.0 };
            let lambda = model.u[i] + C64::new(1e-3 * scale, 3e-4 * scale);
            let s = (lambda - model.u[i]).sqrt();
            let got = vc.period_branch(i, 0, s)?;
            let dot: C64 = local.period(i, 0).iter().zip(&got).map(|(e, g)| g * e.eval(lambda).conj()).sum();
            vc.sign[i] = if dot.re >= 0.0 { 1.0 } else { -1.0 };
        }
        Ok(vc)
    }

    /// Local coordinates `(y_+, y_-)` of the merging roots on the branch `s`.
    pub fn pair_local(&self, i: usize, s: C64) -> Result<(C64, C64)> {
        let sh = &self.sheets[i];
        Ok((sh.root(s)?, sh.root(-s)?))
    }

    /// The merging roots `(x_+, x_-)` of `F = u_i + s²`.
    pub fn pair(&self, i: usize, s: C64) -> Result<(C64, C64)> {
        let (p, m) = self.pair_local(i, s)?;
        Ok((self.xi[i] + p, self.xi[i] + m))
    }

    /// `(I^{(k)}_{β_i}, v_a)` for all `a` at `λ = u_i + s²` on the branch `s`.
    pub fn period_branch(&self, i: usize, k: i32, s: C64) -> Result<Vec<C64>> {
        let sh = &self.sheets[i];
        let (p, m) = self.pair_local(i, s)?;
        (0..sh.polys[0].len()).map(|a| Ok((sh.point(a, k, p)? - sh.point(a, k, m)?) * self.sign[i])).collect()
    }

    /// Like [`Self::period_branch`] on the principal branch of `sqrt(λ - u_i)`.
    pub fn period(&self, model: &AnModel, i: usize, k: i32, lambda: C64) -> Result<Vec<C64>> {
        self.period_branch(i, k, (lambda - model.u[i]).sqrt())
    }

    /// Bergman kernel `P_{β_i β_i}` between the branches `sa` (at `λ`) and `sb` (at `μ`).
    pub fn bergman(&self, i: usize, sa: C64, sb: C64) -> Result<C64> {
        let sh = &self.sheets[i];
        let (xp, xm) = self.pair_local(i, sa)?;
        let (yp, ym) = self.pair_local(i, sb)?;
        let mut acc = C64::new(0.0, 0.0);
        for (x, wx) in [(xp, 1.0), (xm, -1.0)] {
            for (y, wy) in [(yp, 1.0), (ym, -1.0)] {
                acc += (sh.gp.eval(x) * sh.gp.eval(y) * (x - y).powi(2)).inv() * (wx * wy);
            }
        }
        Ok(acc)
    }

    /// One sixth of the Schwarzian of the inverse branch at local coordinate `y`.
    pub fn schwarzian_sixth(&self, i: usize, y: C64) -> C64 {
        let sh = &self.sheets[i];
        let (f1, f2, f3) = (sh.gp.eval(y), sh.gpp.eval(y), sh.gppp.eval(y));
        -(f3 / f1 - (f2 / f1).powi(2) * 1.5) / (f1 * f1) / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::ModelOptions;
    use crate::rmatrix::RMatrix;

    fn setup(t: &[C64]) -> (AnModel, LocalData) {
        let model = AnModel::build(t.len(), t, &ModelOptions::default()).unwrap();
        let frame = model.canonical_frame().unwrap();
        let r = RMatrix::compute(&model, &frame, 10).unwrap();
        let local = LocalData::new(&model, &frame, &r, 1e-8).unwrap();
        (model, local)
    }

    #[test]
    fn roots_reproduce_local_periods() {
        for t in [
            vec![C64::new(-0.6, 0.2), C64::new(0.15, -0.1)],
            vec![C64::new(-1.0, 0.0), C64::new(0.3, 0.1), C64::new(0.2, -0.4)],
        ] {
            let (model, local) = setup(&t);
            let sheets = SheetPeriods::new(&model, 4, 4);
            let vc = VanishingCycles::calibrate(&model, &sheets, &local).unwrap();
            for i in 0..model.n {
                let gap = (0..model.n).filter(|&j| j != i).map(|j| (model.u[j] - model.u[i]).norm()).fold(f64::INFINITY, f64::min);
                for scale in [0.02, 1e-6] {
                    let lambda = model.u[i] + C64::new(scale * gap, -0.5 * scale * gap);
                    for k in -3..=3 {
                        let exact = vc.period(&model, i, k, lambda).unwrap();
                        let series = local.period(i, k);
                        for a in 0..model.n {
                            let s = series[a].eval(lambda);
                            let err = (exact[a] - s).norm() / (1.0 + s.norm());
                            assert!(err < 1e-7, "i={i} k={k} a={a}: {} vs {}", exact[a], s);
                        }
                    }
                }
            }
        }
    }
}
