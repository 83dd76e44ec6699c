//! Local Eynard–Orantin recursion for ancestor correlators at a semisimple point.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::{AnModel, CanonicalFrame};
use crate::local::LocalData;
use crate::rmatrix::RMatrix;
use crate::series::PuiseuxSeries;
use crate::wick::{assemble, BoundedSource, WickSource};
use crate::C64;

/// `v_a ψ^k` with a zero-based flat index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Insertion {
    pub a: usize,
    pub k: usize,
}

/// Genus and sorted multiset of insertions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorrelatorKey {
    pub g: usize,
    pub ins: Vec<Insertion>,
}

impl CorrelatorKey {
    pub fn new(g: usize, mut ins: Vec<Insertion>) -> Self {
        ins.sort();
        Self { g, ins }
    }

    pub fn n(&self) -> usize {
        self.ins.len()
    }

    /// `2g - 2 + n`.
    pub fn chi(&self) -> i64 {
        2 * self.g as i64 - 2 + self.ins.len() as i64
    }

    pub fn is_stable(&self) -> bool {
        self.chi() > 0
    }

    /// `Σk ≤ 3g - 3 + n`.
    pub fn is_tame(&self) -> bool {
        let s: usize = self.ins.iter().map(|i| i.k).sum();
        s as i64 <= 3 * self.g as i64 - 3 + self.ins.len() as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Recursion,
    Oracle,
    Extended,
    Limit,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub n: usize,
    pub t: Vec<C64>,
    pub values: BTreeMap<CorrelatorKey, C64>,
    pub provenance: BTreeMap<CorrelatorKey, Provenance>,
    /// Keys whose residue sum cancelled by more than the watchdog ratio.
    pub flagged: Vec<CorrelatorKey>,
}

impl CorrelatorTable {
    /// Stored value; tame-violating or unstable keys are exactly zero.
    pub fn get(&self, key: &CorrelatorKey) -> Result<C64> {
        if !key.is_stable() || !key.is_tame() {
            return Ok(C64::new(0.0, 0.0));
        }
        self.values
            .get(key)
            .copied()
            .ok_or(Error::MissingDependency { g: key.g, n: key.n() })
    }

    pub fn insert(&mut self, key: CorrelatorKey, value: C64, prov: Provenance) {
        self.provenance.insert(key.clone(), prov);
        self.values.insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Lookup used during assembly.
pub trait Correlators: Sync {
    fn lookup(&self, key: &CorrelatorKey) -> Result<C64>;
}

impl Correlators for CorrelatorTable {
    fn lookup(&self, key: &CorrelatorKey) -> Result<C64> {
        self.get(key)
    }
}

impl Correlators for HashMap<CorrelatorKey, C64> {
    fn lookup(&self, key: &CorrelatorKey) -> Result<C64> {
        if !key.is_stable() || !key.is_tame() {
            return Ok(C64::new(0.0, 0.0));
        }
        self.get(key).copied().ok_or(Error::MissingDependency { g: key.g, n: key.n() })
    }
}

/// Cancellation ratio above which an entry is flagged.
pub const WATCHDOG_RATIO: f64 = 1e8;

/// Residue sums below this fraction of their magnitude bound (the same sum taken over
/// absolute values of every term) are set to zero.
pub const ZERO_SNAP: f64 = 1e-10;

/// Precomputed Puiseux data for every critical value.
#[derive(Clone, Debug)]
pub struct PointData {
    pub n: usize,
    pub k_max: usize,
    pub psi_max: usize,
    /// `creation[i][k][a] = (I^{(-k)}_{β_i}, v_a)`.
    creation: Vec<Vec<Vec<PuiseuxSeries>>>,
    /// `annihilation[i][k][a] = (-1)^k (I^{(k+1)}_{β_i}, v^a)`.
    annihilation: Vec<Vec<Vec<PuiseuxSeries>>>,
    /// `kernel[i][m][a] = (I^{(-1-m)}_{β_i}, v_a) / (I^{(-1)}_{β_i}, 1)`.
    kernel: Vec<Vec<Vec<PuiseuxSeries>>>,
    prop0: Vec<PuiseuxSeries>,
    pub local: LocalData,
}

impl PointData {
    pub fn new(model: &AnModel, frame: &CanonicalFrame, r: &RMatrix, psi_max: usize, tol: f64) -> Result<Self> {
        let local = LocalData::new(model, frame, r, tol)?;
        let n = model.n;
        let mut creation = Vec::new();
        let mut annihilation = Vec::new();
        let mut kernel = Vec::new();
        let mut prop0 = Vec::new();
        for i in 0..n {
            creation.push((0..=psi_max).map(|k| local.period(i, -(k as i32))).collect());
            annihilation.push(
                (0..=psi_max)
                    .map(|k| {
                        let p = local.period(i, k as i32 + 1);
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        (0..n)
                            .map(|a| {
                                let mut acc = PuiseuxSeries::zero(local.u[i], p[0].trunc_order());
                                for b in 0..n {
                                    acc = acc.axpy(model.eta_inv[(a, b)] * sign, &p[b])?;
                                }
                                Ok(acc)
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
            let yinv = local.y(i).invert()?;
            kernel.push(
                (0..=psi_max)
                    .map(|m| {
                        local
                            .period(i, -1 - m as i32)
                            .iter()
                            .map(|p| p.mul(&yinv))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
            prop0.push(local.propagator_diag(i, 0));
        }
        Ok(Self { n, k_max: r.order(), psi_max, creation, annihilation, kernel, prop0, local })
    }
}

/// Source for Ω_g^{β_i, β_i} in Puiseux mode.
struct DiagonalSource<'a, C: Correlators> {
    data: &'a PointData,
    i: usize,
    table: &'a C,
}

impl<C: Correlators> DiagonalSource<'_, C> {
    fn psi_check(&self, k: usize) -> Result<()> {
        if k > self.data.psi_max {
            return Err(Error::Invalid(format!("ψ-power {k} exceeds precomputed range {}", self.data.psi_max)));
        }
        Ok(())
    }
}

impl<C: Correlators> WickSource for DiagonalSource<'_, C> {
    type V = PuiseuxSeries;
    fn cycles(&self) -> usize {
        2
    }
    fn dim(&self) -> usize {
        self.data.n
    }
    fn zero(&self) -> PuiseuxSeries {
        PuiseuxSeries::zero(self.data.local.u[self.i], crate::series::EXACT)
    }
    fn one(&self) -> PuiseuxSeries {
        PuiseuxSeries::monomial(self.data.local.u[self.i], C64::new(1.0, 0.0), 0)
    }
    fn creation(&self, _: usize, a: usize, k: usize) -> Result<PuiseuxSeries> {
        self.psi_check(k)?;
        Ok(self.data.creation[self.i][k][a].clone())
    }
    fn annihilation(&self, _: usize, a: usize, k: usize) -> Result<PuiseuxSeries> {
        self.psi_check(k)?;
        Ok(self.data.annihilation[self.i][k][a].clone())
    }
    fn propagator(&self, _: usize, _: usize) -> Result<PuiseuxSeries> {
        Ok(self.data.prop0[self.i].clone())
    }
    fn correlator(&self, key: &CorrelatorKey) -> Result<C64> {
        self.table.lookup(key)
    }
}

/// Result of one recursion step with its cancellation diagnostic.
#[derive(Clone, Copy, Debug)]
pub struct StepValue {
    pub value: C64,
    pub cancellation: f64,
}

/// One recursion step with slot `first` of `key.ins` as the distinguished insertion.
pub fn eo_step<C: Correlators>(data: &PointData, table: &C, key: &CorrelatorKey, first: usize) -> Result<StepValue> {
    if !key.is_stable() || !key.is_tame() {
        return Ok(StepValue { value: C64::new(0.0, 0.0), cancellation: 1.0 });
    }
    let head = key.ins[first];
    if head.k > data.psi_max {
        return Err(Error::Invalid(format!("ψ-power {} exceeds precomputed range", head.k)));
    }
    let rest: Vec<Insertion> = key.ins.iter().enumerate().filter(|(j, _)| *j != first).map(|(_, x)| *x).collect();
    let mut total = C64::new(0.0, 0.0);
    let mut largest: f64 = 0.0;
    let mut bound = 0.0;
    for i in 0..data.n {
        let src = DiagonalSource { data, i, table };
        let omega = assemble(&BoundedSource(&src), key.g, &rest)?;
        let kernel = &data.kernel[i][head.k][head.a];
        let integrand = kernel.mul(&omega.value)?;
        let res = integrand.residue(1e-8)? * 0.25;
        bound += kernel.abs().mul(&omega.bound)?.coeff(-2)?.re * 0.25;
        largest = largest.max(res.norm());
        total += res;
    }
    if total.norm() <= ZERO_SNAP * bound {
        return Ok(StepValue { value: C64::new(0.0, 0.0), cancellation: 1.0 });
    }
    let cancellation = if total.norm() > 0.0 { largest / total.norm() } else { 1.0 };
    Ok(StepValue { value: total, cancellation })
}

/// `∂_{τ_a} log Δ_k`.
pub fn dlog_delta(model: &AnModel, k: usize, a: usize) -> C64 {
    let x = model.xi[k];
    let f2 = model.fprime.derivative();
    let f3 = f2.derivative();
    let p1 = model.phi[a].derivative();
    let p2 = p1.derivative();
    let d = p2.eval(x) - f3.eval(x) * p1.eval(x) / f2.eval(x);
    d / model.delta[k]
}

/// Closed-form genus-0 three-point and genus-1 one-point entries.
pub fn initial_entries(model: &AnModel, r: Option<&RMatrix>) -> Vec<(CorrelatorKey, C64)> {
    let n = model.n;
    let mut out = Vec::new();
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let key = CorrelatorKey::new(0, vec![Insertion { a, k: 0 }, Insertion { a: b, k: 0 }, Insertion { a: c, k: 0 }]);
                out.push((key, model.three_point(a, b, c)));
            }
        }
        out.push((CorrelatorKey::new(1, vec![Insertion { a, k: 1 }]), model.trace_mult(a) / 24.0));
        if let Some(r) = r {
            let mut v = C64::new(0.0, 0.0);
            for i in 0..n {
                v += r.coeff(1)[(i, i)] * model.du_dtau[(i, a)] * 0.5;
                v += dlog_delta(model, i, a) / 48.0;
            }
            out.push((CorrelatorKey::new(1, vec![Insertion { a, k: 0 }]), v));
        }
    }
    out
}

/// All stable tame keys with `g ≤ g_max` and `n ≤ n_max(g)`, grouped by `2g - 2 + n`.
pub fn keys_by_level(dim: usize, g_max: usize, n_max: impl Fn(usize) -> usize) -> BTreeMap<i64, Vec<CorrelatorKey>> {
    let mut out: BTreeMap<i64, Vec<CorrelatorKey>> = BTreeMap::new();
    for g in 0..=g_max {
        for n in 1..=n_max(g) {
            if 2 * g + n <= 2 {
                continue;
            }
            let budget = 3 * g + n - 3;
            let mut cur = Vec::new();
            multisets(dim, budget, n, 0, &mut cur, &mut |ins| {
                let key = CorrelatorKey::new(g, ins.to_vec());
                out.entry(key.chi()).or_default().push(key);
            });
        }
    }
    out
}

fn multisets(dim: usize, budget: usize, left: usize, from: usize, cur: &mut Vec<Insertion>, f: &mut dyn FnMut(&[Insertion])) {
    if left == 0 {
        f(cur);
        return;
    }
    for code in from..dim * (budget + 1) {
        let ins = Insertion { a: code % dim, k: code / dim };
        if ins.k > budget {
            break;
        }
        cur.push(ins);
        multisets(dim, budget - ins.k, left - 1, code, cur, f);
        cur.pop();
    }
}

/// Options for [`build_table`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableOptions {
    pub g_max: usize,
    pub n_max: usize,
    /// R-matrix order; `None` picks [`default_order`].
    pub order: Option<usize>,
    pub tol: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { g_max: 2, n_max: 3, order: None, tol: 1e-9 }
    }
}

/// Smallest R-matrix order that covers every key of a `(g_max, n_max)` table.
pub fn default_order(g_max: usize, n_max: usize) -> usize {
    (3 * g_max + n_max + 1).max(2)
}

/// Largest insertion count needed at genus `g` so that genus-`g_max` keys with `n_max` insertions resolve.
pub fn closure_n(g_max: usize, n_max: usize, g: usize) -> usize {
    n_max + (g_max - g)
}

/// Full table at a semisimple point, built level by level in `2g - 2 + n`.
pub fn build_table(model: &AnModel, frame: &CanonicalFrame, opts: &TableOptions) -> Result<(CorrelatorTable, PointData)> {
    let order = opts.order.unwrap_or_else(|| default_order(opts.g_max, opts.n_max));
    let r = RMatrix::compute(model, frame, order)?;
    let psi_max = 3 * opts.g_max + opts.n_max + 1;
    let data = PointData::new(model, frame, &r, psi_max, opts.tol)?;
    let mut snapshot: HashMap<CorrelatorKey, C64> = HashMap::new();
    let mut table = CorrelatorTable { n: model.n, t: model.t.clone(), ..Default::default() };
    for (key, v) in initial_entries(model, Some(&r)) {
        snapshot.insert(key.clone(), v);
        table.insert(key, v, Provenance::Initial);
    }
    let levels = keys_by_level(model.n, opts.g_max, |g| closure_n(opts.g_max, opts.n_max, g));
    for (_, keys) in levels {
        let todo: Vec<&CorrelatorKey> = keys.iter().filter(|k| !snapshot.contains_key(*k)).collect();
        let computed: Vec<(CorrelatorKey, StepValue)> = todo
            .par_iter()
            .map(|key| eo_step(&data, &snapshot, key, 0).map(|v| ((*key).clone(), v)))
            .collect::<Result<_>>()?;
        for (key, v) in computed {
            if v.cancellation > WATCHDOG_RATIO {
                table.flagged.push(key.clone());
            }
            snapshot.insert(key.clone(), v.value);
            table.insert(key, v.value, Provenance::Recursion);
        }
    }
    Ok((table, data))
}
