//! Extended integrals over a contour enclosing a cluster of critical values.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frobenius::AnModel;
use crate::recursion::{CorrelatorKey, Correlators, Insertion, ZERO_SNAP};
use crate::wick::{assemble, BoundedSource, WickSource};
use crate::C64;

use super::sheets::{roots_at, SheetPeriods};

/// Circle `|λ - center| = radius`, traversed counterclockwise.
#[derive(Clone, Copy, Debug)]
pub struct Contour {
    pub center: C64,
    pub radius: f64,
}

impl Contour {
    /// Circle around all critical values, of radius `factor` times their spread
    /// (or `min_radius` when they coincide).
    pub fn around(model: &AnModel, factor: f64, min_radius: f64) -> Self {
        let center = model.u.iter().sum::<C64>() / model.n as f64;
        let spread = model.u.iter().map(|u| (u - center).norm()).fold(0.0, f64::max);
        Self { center, radius: (factor * spread).max(min_radius) }
    }

    pub fn node(&self, j: usize, nodes: usize) -> C64 {
        self.center + C64::from_polar(self.radius, 2.0 * PI * j as f64 / nodes as f64)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExtendedOptions {
    pub nodes_min: usize,
    pub nodes_max: usize,
    pub tol: f64,
    pub abs_tol: f64,
}

impl Default for ExtendedOptions {
    fn default() -> Self {
        Self { nodes_min: 64, nodes_max: 4096, tol: 1e-10, abs_tol: 1e-13 }
    }
}

/// Point-cycle data at one contour node.
struct NodeData {
    dim: usize,
    /// `creation[c][k][a] = (I^{(-k)}_{χ_c}, v_a)`.
    creation: Vec<Vec<Vec<C64>>>,
    /// `annihilation[c][k][a] = (-1)^k (I^{(k+1)}_{χ_c}, v^a)`.
    annihilation: Vec<Vec<Vec<C64>>>,
    /// `kernel[c][m][a] = (I^{(-1-m)}_{χ_c}, v_a)`.
    kernel: Vec<Vec<Vec<C64>>>,
    prop0: Vec<Vec<C64>>,
    /// `(I^{(-1)}_{χ_c}, 1)`.
    y: Vec<C64>,
}

impl NodeData {
    fn new(model: &AnModel, sheets: &SheetPeriods, roots: &[C64], cluster: &[usize], psi_max: usize) -> Result<Self> {
        let n = model.n;
        let m = cluster.len() as f64;
        let chis: Vec<Vec<f64>> = cluster
            .iter()
            .map(|&j| {
                let mut w = vec![0.0; roots.len()];
                for &l in cluster {
                    w[l] = -1.0 / m;
                }
                w[j] += 1.0;
                w
            })
            .collect();
        let cov = |c: &[f64], k: i32| -> Result<Vec<C64>> { (0..n).map(|a| sheets.cycle(a, k, roots, c)).collect() };
        let mut creation = Vec::new();
        let mut annihilation = Vec::new();
        let mut kernel = Vec::new();
        let mut y = Vec::new();
        for chi in &chis {
            creation.push((0..=psi_max).map(|k| cov(chi, -(k as i32))).collect::<Result<Vec<_>>>()?);
            kernel.push((0..=psi_max).map(|k| cov(chi, -1 - k as i32)).collect::<Result<Vec<_>>>()?);
            let mut ann = Vec::new();
            for k in 0..=psi_max {
                let p = cov(chi, k as i32 + 1)?;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                ann.push((0..n).map(|a| (0..n).map(|b| model.eta_inv[(a, b)] * p[b]).sum::<C64>() * sign).collect());
            }
            annihilation.push(ann);
            y.push(cov(chi, -1)?[model.unit_index()]);
        }
        let prop0 = chis.iter().map(|c1| chis.iter().map(|c2| sheets.propagator0(roots, c1, c2)).collect()).collect();
        Ok(Self { dim: n, creation, annihilation, kernel, prop0, y })
    }
}

struct TupleSource<'a, C: Correlators> {
    node: &'a NodeData,
    tuple: &'a [usize],
    table: &'a C,
}

impl<C: Correlators> WickSource for TupleSource<'_, C> {
    type V = C64;
    fn cycles(&self) -> usize {
        self.tuple.len()
    }
    fn dim(&self) -> usize {
        self.node.dim
    }
    fn zero(&self) -> C64 {
        C64::new(0.0, 0.0)
    }
    fn one(&self) -> C64 {
        C64::new(1.0, 0.0)
    }
    fn creation(&self, c: usize, a: usize, k: usize) -> Result<C64> {
        range(&self.node.creation[self.tuple[c]], k).map(|v| v[a])
    }
    fn annihilation(&self, c: usize, a: usize, k: usize) -> Result<C64> {
        range(&self.node.annihilation[self.tuple[c]], k).map(|v| v[a])
    }
    fn propagator(&self, c1: usize, c2: usize) -> Result<C64> {
        Ok(self.node.prop0[self.tuple[c1]][self.tuple[c2]])
    }
    fn correlator(&self, key: &CorrelatorKey) -> Result<C64> {
        self.table.lookup(key)
    }
}

fn range(v: &[Vec<C64>], k: usize) -> Result<&Vec<C64>> {
    v.get(k).ok_or_else(|| Error::Invalid(format!("ψ-power {k} exceeds precomputed range {}", v.len() - 1)))
}

/// Ordered tuples of distinct elements of `0..m` of length `r`.
fn tuples(m: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for t in tuples(m, r - 1) {
        for c in 0..m {
            if !t.contains(&c) {
                let mut next = t.clone();
                next.push(c);
                out.push(next);
            }
        }
    }
    out
}

/// Extended-integral evaluator for one model and contour.
pub struct ExtendedIntegral<'a> {
    model: &'a AnModel,
    sheets: SheetPeriods,
    contour: Contour,
    psi_max: usize,
    options: ExtendedOptions,
}

impl<'a> ExtendedIntegral<'a> {
    pub fn new(model: &'a AnModel, contour: Contour, psi_max: usize, options: ExtendedOptions) -> Self {
        let sheets = SheetPeriods::new(model, psi_max + 1, psi_max + 1);
        Self { model, sheets, contour, psi_max, options }
    }

    /// Integrand summed over ordered tuples of distinct point cycles, for each target `(a, m)`.
    fn integrand<C: Correlators>(&self, lambda: C64, table: &C, g: usize, head: Insertion, slots: &[Insertion]) -> Result<(C64, f64)> {
        let roots = roots_at(self.model, lambda)?;
        let cluster: Vec<usize> = (0..roots.len()).collect();
        let node = NodeData::new(self.model, &self.sheets, &roots, &cluster, self.psi_max)?;
        let mut acc = C64::new(0.0, 0.0);
        let mut bound = 0.0;
        for (r, weight) in [(2usize, 1.0), (3, 0.5)] {
            if cluster.len() < r {
                continue;
            }
            for t in tuples(cluster.len(), r) {
                let mut denom = C64::new(1.0, 0.0);
                for &c in &t[1..] {
                    denom *= node.y[t[0]] - node.y[c];
                }
                let head_val = range(&node.kernel[t[0]], head.k)?[head.a];
                let src = TupleSource { node: &node, tuple: &t, table };
                let omega = assemble(&BoundedSource(&src), g, slots)?;
                let factor = head_val / denom * weight;
                acc += factor * omega.value;
                bound += factor.norm() * omega.bound.re;
            }
        }
        Ok((acc, bound))
    }

    /// `-(1/2πi) ∮ Σ_{r=2,3} Σ_{distinct c} 1/(r-1)! (I^{(-1-m)}_{c_1}, v_a) / Π_{k≥2} (I^{(-1)}_{c_1 - c_k}, 1) Ω_g^{c_1…c_r}`
    /// for the target `v_a ψ^m = key.ins[first]` with the remaining insertions as t-slots.
    ///
    /// Values below [`ZERO_SNAP`] times the integral of the magnitude bound are returned as zero.
    pub fn evaluate<C: Correlators>(&self, table: &C, key: &CorrelatorKey, first: usize) -> Result<C64> {
        let (value, bound) = self.evaluate_bounded(table, key, first)?;
        Ok(if value.norm() <= ZERO_SNAP * bound { C64::new(0.0, 0.0) } else { value })
    }

    /// Unsnapped value together with the trapezoid sum of the integrand's magnitude bound.
    pub fn evaluate_bounded<C: Correlators>(&self, table: &C, key: &CorrelatorKey, first: usize) -> Result<(C64, f64)> {
        let head = key.ins[first];
        let slots: Vec<Insertion> = key.ins.iter().enumerate().filter(|(j, _)| *j != first).map(|(_, x)| *x).collect();
        let mut nodes = self.options.nodes_min;
        let mut prev: Option<C64> = None;
        let mut samples: Vec<(C64, f64)> = Vec::new();
        loop {
            // the even nodes were sampled at the previous level
            let mut fresh = Vec::with_capacity(nodes);
            for j in 0..nodes {
                if prev.is_some() && j % 2 == 0 {
                    fresh.push(samples[j / 2]);
                } else {
                    let lam = self.contour.node(j, nodes);
                    let (v, b) = self.integrand(lam, table, key.g, head, &slots)?;
                    fresh.push((v * (lam - self.contour.center), b * self.contour.radius));
                }
            }
            samples = fresh;
            let value = -samples.iter().map(|s| s.0).sum::<C64>() / nodes as f64;
            let bound = samples.iter().map(|s| s.1).sum::<f64>() / nodes as f64;
            let scale = samples.iter().map(|s| s.0.norm()).fold(0.0, f64::max);
            if let Some(p) = prev {
                if (value - p).norm() <= self.options.tol * scale + self.options.abs_tol {
                    return Ok((value, bound));
                }
            }
            if nodes * 2 > self.options.nodes_max {
                return Err(Error::Numeric(format!("extended integral did not converge with {nodes} nodes")));
            }
            prev = Some(value);
            nodes *= 2;
        }
    }
}
