//! Independent oracle: ancestor correlators from the quantized R-matrix acting
//! on a product of Witten–Kontsevich tau functions.

pub mod dvv;

use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::frobenius::{AnModel, CanonicalFrame};
use crate::recursion::{CorrelatorKey, Insertion};
use crate::rmatrix::RMatrix;
use crate::series::MatrixSeriesZ;
use crate::{CMatrix, C64};

pub use dvv::IntersectionCache;

/// Monomial in the variables `t_k^a`, stored as sorted variable indices `k * dim + a`.
pub type Monomial = Vec<u16>;

/// Truncated function of `t_k^a` with coefficients graded by the power of ħ.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockPolynomial {
    pub dim: usize,
    pub terms: HashMap<(i32, Monomial), C64>,
}

impl FockPolynomial {
    pub fn new(dim: usize) -> Self {
        Self { dim, terms: HashMap::new() }
    }

    pub fn var(&self, a: usize, k: usize) -> u16 {
        (k * self.dim + a) as u16
    }

    pub fn split(&self, v: u16) -> (usize, usize) {
        (v as usize % self.dim, v as usize / self.dim)
    }

    pub fn add_term(&mut self, hbar: i32, mono: Monomial, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry((hbar, mono)).or_insert(C64::new(0.0, 0.0)) += c;
    }

    pub fn add(&mut self, other: &Self, k: C64) {
        for ((h, m), c) in &other.terms {
            self.add_term(*h, m.clone(), c * k);
        }
    }

    pub fn derivative(&self, v: u16) -> Self {
        let mut out = Self::new(self.dim);
        for ((h, m), c) in &self.terms {
            if let Some((e, rest)) = remove_var(m, v) {
                out.add_term(*h, rest, c * e as f64);
            }
        }
        out
    }

    pub fn mul_var(&self, v: u16, hbar_shift: i32) -> Self {
        let mut out = Self::new(self.dim);
        for ((h, m), c) in &self.terms {
            out.add_term(h + hbar_shift, insert_var(m, v), *c);
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn remove_var(m: &[u16], v: u16) -> Option<(usize, Monomial)> {
    let e = m.iter().filter(|x| **x == v).count();
    if e == 0 {
        return None;
    }
    let mut rest = m.to_vec();
    let pos = rest.iter().position(|x| *x == v).expect("present");
    rest.remove(pos);
    Some((e, rest))
}

fn insert_var(m: &[u16], v: u16) -> Monomial {
    let mut out = m.to_vec();
    let pos = out.partition_point(|x| *x <= v);
    out.insert(pos, v);
    out
}

fn merge(a: &[u16], b: &[u16]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out
}

fn factorial_multiplicity(m: &[u16]) -> f64 {
    let mut acc = 1.0;
    let mut run = 1.0;
    for w in m.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
            acc *= run;
        } else {
            run = 1.0;
        }
    }
    acc
}

/// Element `f = Σ_m c_m z^m` of `H((z^{-1}))` with flat-frame vector coefficients.
#[derive(Clone, Debug)]
pub struct LaurentVector {
    pub coeffs: BTreeMap<i32, Vec<C64>>,
}

impl LaurentVector {
    /// `Ω(f, g) = Res_z (f(-z), g(z)) dz`.
    pub fn omega(&self, other: &Self, eta: &CMatrix) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (m, a) in &self.coeffs {
            let m2 = -1 - m;
            if let Some(b) = other.coeffs.get(&m2) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for i in 0..a.len() {
                    for j in 0..b.len() {
                        acc += a[i] * eta[(i, j)] * b[j] * sign;
                    }
                }
            }
        }
        acc
    }

    /// Action of the quantized linear function `Ω(f, ·)` on a Fock polynomial, with ħ = 1.
    pub fn quantize_apply(&self, p: &FockPolynomial, eta: &CMatrix) -> FockPolynomial {
        let dim = p.dim;
        let mut out = FockPolynomial::new(dim);
        for (m, c) in &self.coeffs {
            if *m >= 0 {
                let k = *m as usize;
                for a in 0..dim {
                    if c[a] != C64::new(0.0, 0.0) {
                        out.add(&p.derivative(p.var(a, k)), -c[a]);
                    }
                }
            } else {
                let k = (-1 - m) as usize;
                let sign = if (1 + k).is_multiple_of(2) { 1.0 } else { -1.0 };
                for a in 0..dim {
                    let pa: C64 = (0..dim).map(|b| eta[(a, b)] * c[b]).sum::<C64>() * sign;
                    if pa != C64::new(0.0, 0.0) {
                        out.add(&p.mul_var(p.var(a, k), 0), pa);
                    }
                }
            }
        }
        out
    }
}

/// Truncation controls for [`ancestor_via_quantization`].
#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub g_max: usize,
    /// Largest `2g - 2 + n` returned.
    pub chi_max: usize,
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { g_max: 2, chi_max: 3, tol: 1e-9 }
    }
}

struct Flow {
    dim: usize,
    unit: usize,
    /// `a[l]` for `l = 1..`, flat frame.
    a: Vec<CMatrix>,
    /// `a[l] η^{-1}`.
    b: Vec<CMatrix>,
    g_max: usize,
}

fn chi_of(h: i32, m: &[u16]) -> i64 {
    2 * (h as i64 + 1) - 2 + m.len() as i64
}

impl Flow {
    fn keep(&self, h: i32, m: &[u16], chi_bound: i64) -> bool {
        let g = h + 1;
        let chi = chi_of(h, m);
        g >= 0 && g as usize <= self.g_max && !m.is_empty() && chi >= 1 && chi <= chi_bound
    }

    fn split(&self, v: u16) -> (usize, usize) {
        (v as usize % self.dim, v as usize / self.dim)
    }

    fn var(&self, a: usize, k: usize) -> u16 {
        (k * self.dim + a) as u16
    }

    /// Second-order coefficient of `∂_x ∂_y` (ordered pair).
    fn pair_coeff(&self, x: u16, y: u16) -> Option<C64> {
        let (a, j) = self.split(x);
        let (b, j2) = self.split(y);
        let l = j + j2 + 1;
        if l >= self.a.len() {
            return None;
        }
        let sign = if j % 2 == 0 { 0.5 } else { -0.5 };
        let c = self.b[l][(b, a)] * sign;
        (c != C64::new(0.0, 0.0)).then_some(c)
    }

    fn linear(&self, g: &FockPolynomial, out: &mut FockPolynomial, bound: i64) {
        for ((h, m), c) in &g.terms {
            let mut prev = None;
            for &y in m.iter() {
                if prev == Some(y) {
                    continue;
                }
                prev = Some(y);
                let (e, rest) = remove_var(m, y).expect("present");
                let (i, k2) = self.split(y);
                let ce = c * e as f64;
                for l in 1..self.a.len().min(k2 + 1) {
                    let k = k2 - l;
                    for cc in 0..self.dim {
                        let w = self.a[l][(i, cc)];
                        if w != C64::new(0.0, 0.0) {
                            let mono = insert_var(&rest, self.var(cc, k));
                            if self.keep(*h, &mono, bound) {
                                out.add_term(*h, mono, -w * ce);
                            }
                        }
                    }
                }
                if k2 >= 2 && k2 - 1 < self.a.len() {
                    let w = self.a[k2 - 1][(i, self.unit)];
                    if w != C64::new(0.0, 0.0) && self.keep(*h, &rest, bound) {
                        out.add_term(*h, rest.clone(), w * ce);
                    }
                }
            }
        }
    }

    fn second(&self, g: &FockPolynomial, out: &mut FockPolynomial, bound: i64) {
        for ((h, m), c) in &g.terms {
            for x_pos in 0..m.len() {
                for y_pos in 0..m.len() {
                    if x_pos == y_pos {
                        continue;
                    }
                    let (x, y) = (m[x_pos], m[y_pos]);
                    let Some(w) = self.pair_coeff(x, y) else { continue };
                    let mut rest = m.clone();
                    let (hi, lo) = if x_pos > y_pos { (x_pos, y_pos) } else { (y_pos, x_pos) };
                    rest.remove(hi);
                    rest.remove(lo);
                    if self.keep(h + 1, &rest, bound) {
                        out.add_term(h + 1, rest, w * c);
                    }
                }
            }
        }
    }

    fn gradient(g: &FockPolynomial) -> HashMap<u16, Vec<(i32, Monomial, C64)>> {
        let mut out: HashMap<u16, Vec<(i32, Monomial, C64)>> = HashMap::new();
        for ((h, m), c) in &g.terms {
            let mut prev = None;
            for &v in m.iter() {
                if prev == Some(v) {
                    continue;
                }
                prev = Some(v);
                let (e, rest) = remove_var(m, v).expect("present");
                out.entry(v).or_default().push((*h, rest, c * e as f64));
            }
        }
        out
    }

    fn product(&self, ga: &FockPolynomial, gb: &FockPolynomial, out: &mut FockPolynomial, bound: i64) {
        let da = Self::gradient(ga);
        let db = Self::gradient(gb);
        for (x, la) in &da {
            for (y, lb) in &db {
                let Some(w) = self.pair_coeff(*x, *y) else { continue };
                for (h1, m1, c1) in la {
                    for (h2, m2, c2) in lb {
                        let h = h1 + h2 + 1;
                        let g = h + 1;
                        let chi = chi_of(h, &[]) + (m1.len() + m2.len()) as i64;
                        if g < 0 || g as usize > self.g_max || chi > bound || m1.len() + m2.len() == 0 {
                            continue;
                        }
                        out.add_term(h, merge(m1, m2), w * c1 * c2);
                    }
                }
            }
        }
    }
}

fn multisets(dim: usize, budget: usize, left: usize, from: usize, cur: &mut Vec<(usize, usize)>, exact: bool, f: &mut dyn FnMut(&[(usize, usize)])) {
    if left == 0 {
        if !exact || budget == 0 {
            f(cur);
        }
        return;
    }
    for code in from..dim * (budget + 1) {
        let (a, k) = (code % dim, code / dim);
        if k > budget {
            break;
        }
        cur.push((a, k));
        multisets(dim, budget - k, left - 1, code, cur, exact, f);
        cur.pop();
    }
}

/// Product of rescaled point tau functions, `Σ_i log D_pt(ħΔ_i; ⁱq)`, restricted by `keep`.
pub fn dpt_product(model: &AnModel, cache: &IntersectionCache, g_max: usize, chi_bound: i64) -> Result<FockPolynomial> {
    let dim = model.n;
    let mut out = FockPolynomial::new(dim);
    for g in 0..=g_max {
        for n in 1.. {
            let chi = 2 * g as i64 - 2 + n as i64;
            if chi > chi_bound {
                break;
            }
            if chi < 1 {
                continue;
            }
            let budget = 3 * g + n - 3;
            let mut cur = Vec::new();
            let mut err = None;
            multisets(dim, budget, n, 0, &mut cur, true, &mut |ins| {
                let ks: Vec<usize> = ins.iter().map(|x| x.1).collect();
                let wk = match cache.get(g, &ks) {
                    Ok(v) => v.to_f64().unwrap_or(f64::NAN),
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                };
                if wk == 0.0 {
                    return;
                }
                let mut val = C64::new(0.0, 0.0);
                for i in 0..dim {
                    let mut term = model.delta[i].powi(g as i32 - 1) * wk;
                    for &(a, _) in ins {
                        term *= model.du_dtau[(i, a)];
                    }
                    val += term;
                }
                let mut mono: Monomial = ins.iter().map(|&(a, k)| (k * dim + a) as u16).collect();
                mono.sort_unstable();
                let mult = factorial_multiplicity(&mono);
                out.add_term(g as i32 - 1, mono, val / mult);
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(out)
}

/// Ancestor correlators with `g ≤ g_max` and `2g - 2 + n ≤ chi_max` from `R̂ Π D_pt`.
pub fn ancestor_via_quantization(
    model: &AnModel,
    frame: &CanonicalFrame,
    r: &RMatrix,
    opts: &OracleOptions,
) -> Result<BTreeMap<CorrelatorKey, C64>> {
    let dim = model.n;
    let stages = opts.chi_max + opts.g_max;
    if r.order() < stages + 1 {
        return Err(Error::Truncation { needed: (stages + 1) as i32, have: r.order() as i32 });
    }
    let res = r.residuals(frame);
    if res.unitarity.iter().any(|u| *u > opts.tol.max(1e-8)) {
        return Err(Error::Residual { what: "R unitarity".into(), residual: res.max(), tol: opts.tol });
    }
    let flat: MatrixSeriesZ = r.series.sandwich(&frame.psi, &frame.psi_inv);
    let log = flat.log()?;
    let a: Vec<CMatrix> = log.coeffs().to_vec();
    let b: Vec<CMatrix> = a.iter().map(|m| m * &model.eta_inv).collect();
    let flow = Flow { dim, unit: model.unit_index(), a, b, g_max: opts.g_max };
    let cache = IntersectionCache::new();
    let j_max = stages;
    let bound = |j: usize| opts.chi_max as i64 + (j_max - j.min(j_max)) as i64;
    let mut layers = vec![dpt_product(model, &cache, opts.g_max, bound(0))?];
    for j in 0..=j_max {
        let nb = if j + 1 > j_max { opts.chi_max as i64 } else { bound(j + 1) };
        let mut next = FockPolynomial::new(dim);
        flow.linear(&layers[j], &mut next, nb);
        flow.second(&layers[j], &mut next, nb);
        for i in 0..=j {
            flow.product(&layers[i], &layers[j - i], &mut next, nb);
        }
        let scale = C64::new(1.0 / (j as f64 + 1.0), 0.0);
        let mut scaled = FockPolynomial::new(dim);
        scaled.add(&next, scale);
        layers.push(scaled);
    }
    // the last layer lies beyond every target's degree in s
    let tail = layers.pop().expect("nonempty");
    let mut total = FockPolynomial::new(dim);
    for l in &layers {
        total.add(l, C64::new(1.0, 0.0));
    }
    let scale = 1.0 + total.max_norm();
    let leak = tail
        .terms
        .iter()
        .filter(|((h, m), _)| chi_of(*h, m) <= opts.chi_max as i64)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    if leak > opts.tol * scale {
        return Err(Error::Numeric(format!("quantized operator series did not terminate (tail {leak:e})")));
    }
    let mut out = BTreeMap::new();
    for ((h, m), c) in &total.terms {
        if chi_of(*h, m) > opts.chi_max as i64 {
            continue;
        }
        let ins: Vec<Insertion> = m.iter().map(|&v| Insertion { a: v as usize % dim, k: v as usize / dim }).collect();
        let key = CorrelatorKey::new((h + 1) as usize, ins);
        out.insert(key, c * factorial_multiplicity(m));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::ModelOptions;

    #[test]
    fn a1_oracle_is_intersection_numbers() {
        let m = AnModel::build(1, &[C64::new(0.0, 0.0)], &ModelOptions::default()).unwrap();
        let f = m.canonical_frame().unwrap();
        let r = RMatrix::compute(&m, &f, 8).unwrap();
        let out = ancestor_via_quantization(&m, &f, &r, &OracleOptions::default()).unwrap();
        let key = CorrelatorKey::new(2, vec![Insertion { a: 0, k: 4 }]);
        assert!((out[&key] - C64::new(1.0 / 1152.0, 0.0)).norm() < 1e-15);
        let key = CorrelatorKey::new(0, vec![Insertion { a: 0, k: 0 }; 3]);
        assert!((out[&key] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phi_hat_commutator() {
        let dim = 2;
        let eta = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let v = |x: f64, y: f64| vec![C64::new(x, 0.1), C64::new(y, -0.2)];
        let f = LaurentVector { coeffs: BTreeMap::from([(-2, v(0.3, 1.0)), (-1, v(1.5, -0.4)), (0, v(0.7, 0.2)), (1, v(-0.6, 0.9))]) };
        let g = LaurentVector { coeffs: BTreeMap::from([(-2, v(-1.1, 0.5)), (-1, v(0.2, 0.8)), (0, v(0.4, -1.3)), (1, v(1.2, 0.3))]) };
        let mut p = FockPolynomial::new(dim);
        p.add_term(0, vec![0, 1, 3], C64::new(0.7, 0.2));
        p.add_term(0, vec![2, 2], C64::new(-1.3, 0.0));
        p.add_term(0, vec![], C64::new(0.5, 0.0));
        let fg = f.quantize_apply(&g.quantize_apply(&p, &eta), &eta);
        let gf = g.quantize_apply(&f.quantize_apply(&p, &eta), &eta);
        let mut comm = fg.clone();
        comm.add(&gf, C64::new(-1.0, 0.0));
        let mut expect = FockPolynomial::new(dim);
        expect.add(&p, f.omega(&g, &eta));
        let mut diff = comm;
        diff.add(&expect, C64::new(-1.0, 0.0));
        assert!(diff.max_norm() < 1e-10, "{}", diff.max_norm());
    }
}
