//! Witten–Kontsevich intersection numbers by the DVV recursion.

use std::collections::HashMap;
use std::sync::RwLock;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

fn dfact(n: i64) -> i128 {
    let mut acc: i128 = 1;
    let mut k = n;
    while k > 1 {
        acc *= k as i128;
        k -= 2;
    }
    acc
}

/// Memoised `⟨τ_{k_1} ⋯ τ_{k_n}⟩_g`, keyed by sorted `k`s.
#[derive(Default)]
pub struct IntersectionCache {
    memo: RwLock<HashMap<(usize, Vec<usize>), Q>>,
}

impl IntersectionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, g: usize, ks: &[usize]) -> Result<Q> {
        if 2 * g + ks.len() <= 2 {
            return Err(Error::Invalid(format!("unstable intersection number (g={g}, n={})", ks.len())));
        }
        Ok(self.eval(g, ks))
    }

    fn eval(&self, g: usize, ks: &[usize]) -> Q {
        let n = ks.len();
        if 2 * g + n <= 2 {
            return Q::zero();
        }
        let s: usize = ks.iter().sum();
        if s + 3 != 3 * g + n {
            return Q::zero();
        }
        let mut key = ks.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        if let Some(v) = self.memo.read().expect("poisoned").get(&(g, key.clone())) {
            return *v;
        }
        let value = self.compute(g, &key);
        self.memo.write().expect("poisoned").insert((g, key), value);
        value
    }

    fn compute(&self, g: usize, ks: &[usize]) -> Q {
        if g == 0 && ks == [0, 0, 0] {
            return Q::one();
        }
        if g == 1 && ks == [1] {
            return Q::new(1, 24);
        }
        // ks sorted descending
        if ks[0] == 0 {
            return Q::zero();
        }
        let k = ks[0] - 1;
        let rest = &ks[1..];
        let mut acc = Q::zero();
        for j in 0..rest.len() {
            let kj = rest[j];
            let mut next: Vec<usize> = rest.to_vec();
            next[j] = kj + k;
            let c = Q::new(dfact(2 * kj as i64 + 2 * k as i64 + 1), dfact(2 * kj as i64 - 1));
            acc += c * self.eval(g, &next);
        }
        for r in 0..k {
            let s = k - 1 - r;
            let c = Q::new(dfact(2 * r as i64 + 1) * dfact(2 * s as i64 + 1), 2);
            if g >= 1 {
                let mut next = rest.to_vec();
                next.push(r);
                next.push(s);
                acc += c * self.eval(g - 1, &next);
            }
            let m = rest.len();
            for mask in 0..(1u32 << m) {
                let mut a = vec![r];
                let mut b = vec![s];
                for (i, x) in rest.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        a.push(*x);
                    } else {
                        b.push(*x);
                    }
                }
                for g1 in 0..=g {
                    acc += c * self.eval(g1, &a) * self.eval(g - g1, &b);
                }
            }
        }
        acc / Q::from_integer(dfact(2 * k as i64 + 3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let c = IntersectionCache::new();
        assert_eq!(c.get(0, &[0, 0, 0]).unwrap(), Q::one());
        assert_eq!(c.get(1, &[1]).unwrap(), Q::new(1, 24));
        assert_eq!(c.get(2, &[4]).unwrap(), Q::new(1, 1152));
        assert_eq!(c.get(2, &[2, 3]).unwrap(), Q::new(29, 5760));
        assert_eq!(c.get(3, &[7]).unwrap(), Q::new(1, 82944));
        assert_eq!(c.get(0, &[0, 0, 0, 1]).unwrap(), Q::one());
        assert_eq!(c.get(1, &[0, 0, 3]).unwrap(), Q::new(1, 24));
        assert!(c.get(0, &[0, 0]).is_err());
    }

    #[test]
    fn string_and_dilaton() {
        let c = IntersectionCache::new();
        for (g, ks) in [(1usize, vec![1usize, 2, 1]), (2, vec![3, 2, 2]), (2, vec![5, 1])] {
            let base = c.get(g, &ks).unwrap();
            let mut with1 = ks.clone();
            with1.push(1);
            let n = ks.len() as i128;
            assert_eq!(c.get(g, &with1).unwrap(), base * Q::from_integer(2 * g as i128 - 2 + n));
            let mut with0 = ks.clone();
            with0.push(0);
            let mut expect = Q::zero();
            for j in 0..ks.len() {
                if ks[j] > 0 {
                    let mut lower = ks.clone();
                    lower[j] -= 1;
                    expect += c.get(g, &lower).unwrap();
                }
            }
            assert_eq!(c.get(g, &with0).unwrap(), expect);
        }
    }
}
