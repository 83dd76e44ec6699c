//! Numerical checks: extended integrals against residue sums, caustic limits, propagators.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frobenius::{AnModel, ModelOptions};
use crate::local::LocalData;
use crate::recursion::{
    build_table, closure_n, initial_entries, keys_by_level, CorrelatorKey, CorrelatorTable, Insertion, Provenance,
    TableOptions,
};
use crate::rmatrix::RMatrix;
use crate::C64;

use super::extended::{Contour, ExtendedIntegral, ExtendedOptions};
use super::propagator::propagator_cross;
use super::sheets::SheetPeriods;
use super::vanishing::VanishingCycles;

/// Worst relative deviation of [`propagator_cross`] from the local two-variable closed form.
#[derive(Clone, Debug, Serialize)]
pub struct PropagatorCheck {
    /// `(i, λ, μ, integral, closed form)`.
    pub samples: Vec<(usize, C64, C64, C64, C64)>,
    pub max_rel_err: f64,
}

/// Compares the propagator integral with the V-matrix closed form at `pairs` test points.
pub fn check_propagator(model: &AnModel, order: usize, pairs: usize, tol: f64) -> Result<PropagatorCheck> {
    let frame = model.canonical_frame()?;
    let r = RMatrix::compute(model, &frame, order)?;
    let local = LocalData::new(model, &frame, &r, tol)?;
    let sheets = SheetPeriods::new(model, 3, 1);
    let vc = VanishingCycles::calibrate(model, &sheets, &local)?;
    let mut samples = Vec::with_capacity(pairs);
    let mut worst: f64 = 0.0;
    for j in 0..pairs {
        let i = j % model.n;
        let gap = (0..model.n)
            .filter(|&l| l != i)
            .map(|l| (model.u[l] - model.u[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let gap = if gap.is_finite() { gap } else { 1.0 };
        let frac = 0.01 + 0.004 * j as f64;
        let sa = C64::from_polar((frac * gap).sqrt(), 0.3 + 0.55 * j as f64);
        let c = C64::from_polar(0.2 + 0.03 * j as f64, 0.9 + 1.7 * j as f64);
        let a = sa * sa;
        let lambda = model.u[i] + a;
        let mu = lambda + a * c;
        let sb = sa * (C64::new(1.0, 0.0) + c).sqrt();
        let cross = propagator_cross(model, &vc, i, sa, mu, 1e-12)?;
        let closed = local.propagator_two_point(i, sa, sb);
        worst = worst.max((cross - closed).norm() / closed.norm());
        samples.push((i, lambda, mu, cross, closed));
    }
    Ok(PropagatorCheck { samples, max_rel_err: worst })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedComparisonRow {
    pub key: CorrelatorKey,
    pub residue_sum: C64,
    pub extended: C64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedComparison {
    pub rows: Vec<ExtendedComparisonRow>,
    pub max_rel_err: f64,
}

/// Keys with `g ≤ g_max` and at most `deg_max` t-slots besides the target, excluding
/// the genus-one one-point functions.
fn comparison_keys(dim: usize, g_max: usize, deg_max: usize) -> Vec<CorrelatorKey> {
    keys_by_level(dim, g_max, |_| deg_max + 1)
        .into_values()
        .flatten()
        .filter(|k| k.is_stable() && k.is_tame() && !(k.g == 1 && k.n() == 1))
        .collect()
}

/// Relative deviations are measured against `max(|C|, floor · max_key |C|)`.
const REL_FLOOR: f64 = 1e-6;

/// Extended integrals against the recursion's residue sums at a semisimple point.
///
/// The first insertion of each key is the target; the rest are t-slots.
pub fn compare_extended(model: &AnModel, g_max: usize, deg_max: usize, options: &ExtendedOptions) -> Result<ExtendedComparison> {
    let frame = model.canonical_frame()?;
    let n_max = deg_max + 1;
    let (table, _) = build_table(model, &frame, &TableOptions { g_max, n_max, order: None, tol: 1e-9 })?;
    let psi_max = 3 * g_max + n_max + 1;
    let ext = ExtendedIntegral::new(model, Contour::around(model, 3.0, 1e-3), psi_max, *options);
    let keys = comparison_keys(model.n, g_max, deg_max);
    let values: Vec<(CorrelatorKey, C64, C64)> = keys
        .par_iter()
        .map(|k| Ok((k.clone(), table.get(k)?, ext.evaluate(&table, k, 0)?)))
        .collect::<Result<_>>()?;
    let scale = values.iter().map(|v| v.1.norm()).fold(0.0, f64::max);
    let rows: Vec<ExtendedComparisonRow> = values
        .into_iter()
        .map(|(key, c, e)| ExtendedComparisonRow { key, residue_sum: c, extended: e, rel_err: (e - c).norm() / c.norm().max(REL_FLOOR * scale) })
        .collect();
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(ExtendedComparison { rows, max_rel_err })
}

#[derive(Clone, Copy, Debug)]
pub struct CausticOptions {
    pub g_max: usize,
    pub n_max: usize,
    pub extended: ExtendedOptions,
    /// Contour radius used when all critical values coincide.
    pub min_radius: f64,
    /// Radius of the circle in `t`-space for the genus-one one-point mean.
    pub cauchy_radius: f64,
    pub cauchy_tol: f64,
}

impl Default for CausticOptions {
    fn default() -> Self {
        Self {
            g_max: 2,
            n_max: 3,
            extended: ExtendedOptions::default(),
            min_radius: 0.5,
            cauchy_radius: 0.2,
            cauchy_tol: 1e-10,
        }
    }
}

/// `⟨v_a⟩_{1,1}` at a semisimple point from its closed form.
fn genus1_one_point(model: &AnModel) -> Result<Vec<C64>> {
    let frame = model.canonical_frame()?;
    let r = RMatrix::compute(model, &frame, 2)?;
    let mut out = vec![C64::new(0.0, 0.0); model.n];
    for (key, v) in initial_entries(model, Some(&r)) {
        if key.g == 1 && key.ins[0].k == 0 {
            out[key.ins[0].a] = v;
        }
    }
    Ok(out)
}

/// Mean of the closed form over a circle in `t`-space centred at `model.t`.
fn genus1_cauchy_mean(model: &AnModel, radius: f64, tol: f64) -> Result<Vec<C64>> {
    let n = model.n;
    let dir: Vec<C64> = (0..n).map(|a| C64::from_polar(1.0 / (1.0 + a as f64), 0.37 * a as f64)).collect();
    let norm = dir.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
    let at = |theta: f64| -> Result<Vec<C64>> {
        let t: Vec<C64> = (0..n).map(|a| model.t[a] + dir[a] / norm * C64::from_polar(radius, theta)).collect();
        genus1_one_point(&AnModel::build(n, &t, &model.options)?)
    };
    let mut nodes = 16;
    let mut samples: Vec<Vec<C64>> = (0..nodes).map(|j| at(2.0 * PI * j as f64 / nodes as f64)).collect::<Result<_>>()?;
    let mean = |s: &[Vec<C64>]| -> Vec<C64> { (0..n).map(|a| s.iter().map(|v| v[a]).sum::<C64>() / s.len() as f64).collect() };
    let mut prev = mean(&samples);
    while nodes < 4096 {
        nodes *= 2;
        let mut next = Vec::with_capacity(nodes);
        for j in 0..nodes {
            if j % 2 == 0 {
                next.push(samples[j / 2].clone());
            } else {
                next.push(at(2.0 * PI * j as f64 / nodes as f64)?);
            }
        }
        samples = next;
        let cur = mean(&samples);
        let scale = samples.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        if cur.iter().zip(&prev).all(|(a, b)| (a - b).norm() <= tol * scale.max(1.0)) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numeric("genus-one Cauchy mean did not converge".into()))
}

/// Correlators at an arbitrary (possibly non-semisimple) point.
///
/// Genus-zero three-point and genus-one one-point entries are closed-form (the latter
/// through a Cauchy mean over nearby semisimple points); all others are extended integrals
/// built level by level in `2g - 2 + n`.
pub fn caustic_table(model: &AnModel, opts: &CausticOptions) -> Result<CorrelatorTable> {
    let psi_max = 3 * opts.g_max + opts.n_max + 1;
    let contour = Contour::around(model, 3.0, opts.min_radius);
    let ext = ExtendedIntegral::new(model, contour, psi_max, opts.extended);
    let mut table = CorrelatorTable { n: model.n, t: model.t.clone(), ..Default::default() };
    let mut snapshot: HashMap<CorrelatorKey, C64> = HashMap::new();
    for (key, v) in initial_entries(model, None) {
        snapshot.insert(key.clone(), v);
        table.insert(key, v, Provenance::Initial);
    }
    for (a, v) in genus1_cauchy_mean(model, opts.cauchy_radius, opts.cauchy_tol)?.into_iter().enumerate() {
        let key = CorrelatorKey::new(1, vec![Insertion { a, k: 0 }]);
        snapshot.insert(key.clone(), v);
        table.insert(key, v, Provenance::Limit);
    }
    let levels = keys_by_level(model.n, opts.g_max, |g| closure_n(opts.g_max, opts.n_max, g));
    for (_, keys) in levels {
        let todo: Vec<&CorrelatorKey> = keys.iter().filter(|k| !snapshot.contains_key(*k)).collect();
        let computed: Vec<(CorrelatorKey, C64)> = todo
            .par_iter()
            .map(|key| {
                let v = if key.is_stable() && key.is_tame() { ext.evaluate(&snapshot, key, 0)? } else { C64::new(0.0, 0.0) };
                Ok(((*key).clone(), v))
            })
            .collect::<Result<_>>()?;
        for (key, v) in computed {
            snapshot.insert(key.clone(), v);
            table.insert(key, v, Provenance::Extended);
        }
    }
    Ok(table)
}

/// Polynomial (Neville) extrapolation of `v(h)` to `h = 0`, returning the estimate whose
/// difference from the previous column is smallest, with that difference as error estimate.
pub fn richardson(h: &[f64], v: &[C64]) -> (C64, f64) {
    let m = v.len();
    let mut p = v.to_vec();
    let mut best = (v[m - 1], f64::INFINITY);
    let mut last = v[m - 1];
    for j in 1..m {
        for i in (j..m).rev() {
            p[i] = (p[i] * h[i - j] - p[i - 1] * h[i]) / (h[i - j] - h[i]);
        }
        let est = p[m - 1];
        let err = (est - last).norm();
        if err < best.1 {
            best = (est, err);
        }
        last = est;
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub eps: Vec<f64>,
    pub keys: Vec<CorrelatorKey>,
    /// `values[key][j]` at `t_c + eps[j] · direction`.
    pub values: Vec<Vec<C64>>,
    pub limits: Vec<C64>,
    pub extrapolation_err: Vec<f64>,
    pub caustic: Vec<C64>,
    /// `|limit - caustic| / max(1, |caustic|)`.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    pub flagged: usize,
}

/// Recursion tables along `t_c + ε · direction`, extrapolated to `ε = 0` and compared
/// with [`caustic_table`] at `t_c`.
pub fn caustic_sweep(t_c: &[C64], direction: &[C64], eps: &[f64], opts: &CausticOptions) -> Result<SweepReport> {
    let n = t_c.len();
    if direction.len() != n || eps.len() < 2 {
        return Err(Error::Invalid("sweep needs a direction of matching length and at least two ε".into()));
    }
    let mopts = ModelOptions::default();
    let tables: Vec<CorrelatorTable> = eps
        .par_iter()
        .map(|&e| {
            let t: Vec<C64> = (0..n).map(|a| t_c[a] + direction[a] * e).collect();
            let model = AnModel::build(n, &t, &mopts)?;
            let frame = model.canonical_frame()?;
            let topts = TableOptions { g_max: opts.g_max, n_max: opts.n_max, order: None, tol: 1e-9 };
            Ok(build_table(&model, &frame, &topts)?.0)
        })
        .collect::<Result<_>>()?;
    let caustic = caustic_table(&AnModel::build(n, t_c, &mopts)?, opts)?;
    let keys: Vec<CorrelatorKey> = tables[0]
        .values
        .keys()
        .filter(|k| k.is_stable() && k.is_tame() && k.n() <= opts.n_max)
        .cloned()
        .collect();
    let mut report = SweepReport {
        eps: eps.to_vec(),
        keys: keys.clone(),
        values: Vec::new(),
        limits: Vec::new(),
        extrapolation_err: Vec::new(),
        caustic: Vec::new(),
        deviation: Vec::new(),
        max_deviation: 0.0,
        flagged: tables.iter().map(|t| t.flagged.len()).sum(),
    };
    for key in &keys {
        let seq: Vec<C64> = tables.iter().map(|t| t.get(key)).collect::<Result<_>>()?;
        let (limit, err) = richardson(eps, &seq);
        let c = caustic.get(key)?;
        let dev = (limit - c).norm() / c.norm().max(1.0);
        report.max_deviation = report.max_deviation.max(dev);
        report.values.push(seq);
        report.limits.push(limit);
        report.extrapolation_err.push(err);
        report.caustic.push(c);
        report.deviation.push(dev);
    }
    Ok(report)
}

/// Sweep summary keyed for lookup.
pub fn sweep_limits(report: &SweepReport) -> BTreeMap<CorrelatorKey, C64> {
    report.keys.iter().cloned().zip(report.limits.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_on_polynomial() {
        let h: Vec<f64> = (3..11).map(|j| 2f64.powi(-j)).collect();
        let v: Vec<C64> = h.iter().map(|x| C64::new(2.0 + 3.0 * x - x * x, 0.5 * x)).collect();
        let (lim, _) = richardson(&h, &v);
        assert!((lim - C64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn extended_matches_residues_a2_low_order() {
        let t = [C64::new(-0.1, 0.0), C64::new(0.0, 0.0)];
        let m = AnModel::build(2, &t, &ModelOptions::default()).unwrap();
        let rep = compare_extended(&m, 1, 2, &ExtendedOptions::default()).unwrap();
        assert!(rep.max_rel_err < 1e-5, "{}", rep.max_rel_err);
    }
}
