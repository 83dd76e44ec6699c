use crate::error::{Error, Result};
use crate::C64;

/// Complex polynomial, coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<C64>,
}

/// Roots returned by [`ComplexPolynomial::roots`].
#[derive(Clone, Debug)]
pub struct Roots {
    pub values: Vec<C64>,
    /// Set when two roots are closer than the merge threshold.
    pub near_multiple: bool,
    pub min_separation: f64,
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    pub fn monomial(c: C64, deg: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); deg + 1];
        v[deg] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].norm() == 0.0
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Self {
        let mut v = vec![C64::new(0.0, 0.0)];
        v.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / (k as f64 + 1.0)),
        );
        Self::new(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Self::new(v)
    }

    /// Remainder of division by `d` (whose leading coefficient must be nonzero).
    pub fn rem(&self, d: &Self) -> Self {
        let dd = d.degree();
        let lead = d.coeffs[dd];
        let mut r = self.coeffs.clone();
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            if top < dd {
                break;
            }
            let q = r[top] / lead;
            for j in 0..=dd {
                r[top - dd + j] -= q * d.coeffs[j];
            }
            r.pop();
        }
        Self::new(r)
    }

    /// Taylor coefficients at `x0`: `p(x0 + y) = sum c_k y^k`.
    pub fn shift(&self, x0: C64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let t = c[j + 1] * x0;
                c[j] += t;
            }
        }
        Self::new(c)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// All roots with multiplicity (Aberth-Ehrlich iteration).
    ///
    /// Each root satisfies `|p(root)| <= tol * ||p||` where the iteration
    /// converges; roots closer than `merge` set the `near_multiple` flag.
    pub fn roots(&self, tol: f64, merge: f64) -> Result<Roots> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let n = self.degree();
        if n == 0 {
            return Err(Error::Invalid("constant polynomial has no roots".into()));
        }
        let lead = self.coeffs[n];
        let monic = self.scale(lead.inv());
        let dp = monic.derivative();
        // Cauchy bound for the initial circle
        let radius = 1.0
            + monic.coeffs[..n]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let mut z: Vec<C64> = (0..n)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
                C64::from_polar(radius * 0.7, ang)
            })
            .collect();
        let pnorm = monic.norm();
        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let pv = monic.eval(z[i]);
                if pv.norm() == 0.0 {
                    continue;
                }
                let ratio = pv / dp.eval(z[i]);
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let d = z[i] - z[j];
                        if d.norm() > 0.0 {
                            s += d.inv();
                        }
                    }
                }
                let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
                if w.is_finite() {
                    z[i] -= w;
                    max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
                }
            }
            if max_step < 1e-16 {
                break;
            }
        }
        // Newton polish on simple roots
        for zi in z.iter_mut() {
            for _ in 0..3 {
                let d = dp.eval(*zi);
                if d.norm() == 0.0 {
                    break;
                }
                let step = monic.eval(*zi) / d;
                if !step.is_finite() || step.norm() > 1e-6 * (1.0 + zi.norm()) {
                    break;
                }
                *zi -= step;
            }
        }
        let worst = z
            .iter()
            .map(|r| monic.eval(*r).norm())
            .fold(0.0, f64::max);
        let allowed = tol.max(1e-15) * pnorm * radius.powi(n as i32).max(1.0);
        if !(worst <= allowed || worst < tol.sqrt()) {
            return Err(Error::Numeric(format!(
                "root finder residual {worst:e} above {allowed:e}"
            )));
        }
        let mut min_sep = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                min_sep = min_sep.min((z[i] - z[j]).norm());
            }
        }
        Ok(Roots {
            values: z,
            near_multiple: min_sep < merge,
            min_separation: min_sep,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn real_pair() {
        let r = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]).roots(1e-12, 1e-6).unwrap();
        let v = sorted(r.values);
        assert!((v[0] - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((v[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(!r.near_multiple);
    }

    #[test]
    fn imaginary_pair() {
        let r = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]).roots(1e-12, 1e-6).unwrap();
        let v = sorted(r.values);
        assert!((v[0] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((v[1] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn double_root_flagged() {
        let r = ComplexPolynomial::from_real(&[0.0, 0.0, 1.0]).roots(1e-12, 1e-6).unwrap();
        assert!(r.near_multiple);
        for z in r.values {
            assert!(z.norm() < 1e-7);
        }
    }

    #[test]
    fn zero_polynomial_errors() {
        assert!(matches!(ComplexPolynomial::zero().roots(1e-12, 1e-6), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn shift_and_rem() {
        let p = ComplexPolynomial::from_real(&[1.0, 2.0, 3.0, 1.0]);
        let x0 = C64::new(0.5, -0.2);
        let q = p.shift(x0);
        let y = C64::new(0.3, 0.1);
        assert!((q.eval(y) - p.eval(x0 + y)).norm() < 1e-13);
        let d = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]);
        let r = p.rem(&d);
        assert!(r.degree() <= 1);
        assert!((r.eval(C64::new(1.0, 0.0)) - p.eval(C64::new(1.0, 0.0))).norm() < 1e-13);
    }
}
