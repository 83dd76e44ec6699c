use std::fmt;

use crate::error::{Error, Result};
use crate::C64;

/// Marker truncation order for series whose tail is known to vanish.
pub const EXACT: i32 = i32::MAX / 4;

/// Truncated Laurent series in `s = (lambda - base)^{1/2}`.
///
/// Coefficients are stored densely for exponents `val ..= val + len - 1`.
/// Exponents above `trunc` are unknown (not zero); exponents between the
/// last stored coefficient and `trunc` are zero.
#[derive(Clone, PartialEq)]
pub struct PuiseuxSeries {
    base: C64,
    val: i32,
    coeffs: Vec<C64>,
    trunc: i32,
}

impl fmt::Debug for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Puiseux@{}[", self.base)?;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                write!(f, " {}*s^{}", c, self.val + j as i32)?;
            }
        }
        if self.trunc < EXACT {
            write!(f, " + O(s^{})", self.trunc + 1)?;
        }
        write!(f, " ]")
    }
}

fn check_base(a: C64, b: C64) -> Result<()> {
    if a != b {
        return Err(Error::BasePointMismatch(a.to_string(), b.to_string()));
    }
    Ok(())
}

impl PuiseuxSeries {
    /// Zero series known exactly through `trunc`.
    pub fn zero(base: C64, trunc: i32) -> Self {
        Self {
            base,
            val: trunc.min(0),
            coeffs: Vec::new(),
            trunc,
        }
    }

    /// `c * s^e`, exact.
    pub fn monomial(base: C64, c: C64, e: i32) -> Self {
        Self {
            base,
            val: e,
            coeffs: vec![c],
            trunc: EXACT,
        }
    }

    /// Builds a series from coefficients starting at exponent `val`.
    pub fn from_coeffs(base: C64, val: i32, coeffs: Vec<C64>, trunc: i32) -> Self {
        let mut s = Self {
            base,
            val,
            coeffs,
            trunc,
        };
        s.clip();
        s
    }

    fn clip(&mut self) {
        if self.trunc < EXACT {
            let keep = (self.trunc - self.val + 1).max(0) as usize;
            self.coeffs.truncate(keep);
        }
        while matches!(self.coeffs.last(), Some(c) if *c == C64::new(0.0, 0.0)) {
            self.coeffs.pop();
        }
    }

    pub fn base(&self) -> C64 {
        self.base
    }

    /// Stored lowest exponent (a lower bound for the true valuation).
    pub fn val(&self) -> i32 {
        self.val
    }

    pub fn trunc_order(&self) -> i32 {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc >= EXACT
    }

    /// Lowers the truncation order, discarding known coefficients above it.
    pub fn truncate(&self, trunc: i32) -> Self {
        let mut s = self.clone();
        s.trunc = s.trunc.min(trunc);
        s.clip();
        s
    }

    /// Coefficient of `s^e`; errors when `e` lies beyond the truncation.
    pub fn coeff(&self, e: i32) -> Result<C64> {
        if e > self.trunc {
            return Err(Error::Truncation {
                needed: e,
                have: self.trunc,
            });
        }
        Ok(self.coeff_or_zero(e))
    }

    fn coeff_or_zero(&self, e: i32) -> C64 {
        let j = e - self.val;
        if j < 0 {
            return C64::new(0.0, 0.0);
        }
        self.coeffs.get(j as usize).copied().unwrap_or_default()
    }

    /// Iterator over `(exponent, coefficient)` of stored terms.
    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(j, c)| (self.val + j as i32, *c))
    }

    /// True valuation: lowest exponent with a nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<i32> {
        self.terms().find(|(_, c)| c.norm() != 0.0).map(|(e, _)| e)
    }

    fn effective_val(&self) -> i32 {
        self.valuation().unwrap_or(self.trunc.saturating_add(1).min(EXACT))
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            base: self.base,
            val: self.val,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_base(self.base, other.base)?;
        Ok(self.add_unchecked(other, C64::new(1.0, 0.0)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_base(self.base, other.base)?;
        Ok(self.add_unchecked(other, C64::new(-1.0, 0.0)))
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: C64, other: &Self) -> Result<Self> {
        check_base(self.base, other.base)?;
        Ok(self.add_unchecked(other, k))
    }

    fn add_unchecked(&self, other: &Self, k: C64) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let lo = match (self.coeffs.is_empty(), other.coeffs.is_empty()) {
            (true, true) => return Self::zero(self.base, trunc),
            (false, true) => self.val,
            (true, false) => other.val,
            (false, false) => self.val.min(other.val),
        };
        let hi_a = self.val + self.coeffs.len() as i32 - 1;
        let hi_b = other.val + other.coeffs.len() as i32 - 1;
        let hi = hi_a.max(hi_b).min(trunc);
        let mut coeffs = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        for e in lo..=hi {
            coeffs.push(self.coeff_or_zero(e) + k * other.coeff_or_zero(e));
        }
        Self::from_coeffs(self.base, lo, coeffs, trunc)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_base(self.base, other.base)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let va = self.effective_val();
        let vb = other.effective_val();
        let trunc = if self.is_exact() && other.is_exact() {
            EXACT
        } else {
            let ta = if self.is_exact() { EXACT } else { self.trunc + vb };
            let tb = if other.is_exact() { EXACT } else { other.trunc + va };
            ta.min(tb).min(EXACT)
        };
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero(self.base, trunc);
        }
        let lo = self.val + other.val;
        let hi = (self.val + self.coeffs.len() as i32 - 1 + other.val + other.coeffs.len() as i32 - 1)
            .min(trunc);
        if hi < lo {
            return Self::zero(self.base, trunc);
        }
        let len = (hi - lo + 1) as usize;
        let mut coeffs = vec![C64::new(0.0, 0.0); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = i + j;
                if k >= len {
                    break;
                }
                coeffs[k] += a * b;
            }
        }
        Self::from_coeffs(self.base, lo, coeffs, trunc)
    }

    /// Multiplicative inverse; the result is known through the same relative order.
    pub fn invert(&self) -> Result<Self> {
        let v = self.valuation().ok_or(Error::ZeroInversion)?;
        let lead = self.coeff_or_zero(v);
        // relative precision of the input
        let rel = if self.is_exact() { None } else { Some(self.trunc - v) };
        let rel_len = match rel {
            Some(r) => r,
            None => {
                let hi = self.val + self.coeffs.len() as i32 - 1;
                if hi == v {
                    return Ok(Self::monomial(self.base, lead.inv(), -v));
                }
                return Err(Error::Invalid(
                    "inverse of an exact multi-term series needs an explicit truncation".into(),
                ));
            }
        };
        self.invert_to(v, lead, rel_len)
    }

    /// Inverse of an exact series, computed through relative order `rel`.
    pub fn invert_with(&self, rel: i32) -> Result<Self> {
        let v = self.valuation().ok_or(Error::ZeroInversion)?;
        let lead = self.coeff_or_zero(v);
        let rel = if self.is_exact() { rel } else { rel.min(self.trunc - v) };
        self.invert_to(v, lead, rel)
    }

    fn invert_to(&self, v: i32, lead: C64, rel: i32) -> Result<Self> {
        if rel < 0 {
            return Err(Error::Truncation {
                needed: v,
                have: self.trunc,
            });
        }
        let n = rel as usize + 1;
        let a: Vec<C64> = (0..n).map(|j| self.coeff_or_zero(v + j as i32) / lead).collect();
        let mut b = vec![C64::new(0.0, 0.0); n];
        b[0] = C64::new(1.0, 0.0);
        for k in 1..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=k {
                acc += a[j] * b[k - j];
            }
            b[k] = -acc;
        }
        let inv_lead = lead.inv();
        let coeffs = b.into_iter().map(|c| c * inv_lead).collect();
        Ok(Self::from_coeffs(self.base, -v, coeffs, -v + rel))
    }

    /// `d/dlambda`, i.e. `s^e -> (e/2) s^{e-2}`.
    pub fn differentiate(&self) -> Self {
        let coeffs = self
            .terms()
            .map(|(e, c)| c * (e as f64 / 2.0))
            .collect();
        let trunc = if self.is_exact() { EXACT } else { self.trunc - 2 };
        Self::from_coeffs(self.base, self.val - 2, coeffs, trunc)
    }

    /// Inverse of [`Self::differentiate`] with zero `s^0` constant; fails on `s^{-2}` terms.
    pub fn antiderivative(&self) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (e, c) in self.terms() {
            if e == -2 {
                if c.norm() != 0.0 {
                    return Err(Error::Invalid("antiderivative of (lambda-u)^{-1}".into()));
                }
                coeffs.push(C64::new(0.0, 0.0));
            } else {
                coeffs.push(c * (2.0 / (e as f64 + 2.0)));
            }
        }
        let trunc = if self.is_exact() { EXACT } else { self.trunc + 2 };
        Ok(Self::from_coeffs(self.base, self.val + 2, coeffs, trunc))
    }

    /// `Res_{lambda=base} g dlambda` for a branch-even density `g`: the `s^{-2}` coefficient.
    ///
    /// Odd-exponent coefficients at or below `s^{-2}` larger than `tol` times the
    /// largest such coefficient are reported as a parity error.
    pub fn residue(&self, tol: f64) -> Result<C64> {
        let r = self.coeff(-2)?;
        let scale = self
            .terms()
            .filter(|(e, _)| *e <= -2)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        for (e, c) in self.terms() {
            if e > -2 {
                break;
            }
            if e.rem_euclid(2) == 1 && c.norm() > tol * scale.max(1.0) {
                return Err(Error::BranchParity {
                    exponent: e,
                    coeff: c.norm(),
                });
            }
        }
        Ok(r)
    }

    /// Coefficient-wise absolute values.
    pub fn abs(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|c| C64::new(c.norm(), 0.0)).collect();
        Self { base: self.base, val: self.val, coeffs, trunc: self.trunc }
    }

    /// Largest coefficient magnitude among terms with exponent `<= e`.
    pub fn max_coeff_upto(&self, e: i32) -> f64 {
        self.terms()
            .filter(|(x, _)| *x <= e)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Evaluates the truncated sum at `lambda` on the branch `s = sqrt(lambda - base)`.
    pub fn eval(&self, lambda: C64) -> C64 {
        let s = (lambda - self.base).sqrt();
        self.terms().map(|(e, c)| c * s.powi(e)).sum()
    }
}
