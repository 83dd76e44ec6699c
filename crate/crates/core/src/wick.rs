//! Wick assembly of the symmetric forms Ω_g^{c_1,…,c_r}.
//!
//! Each cycle insertion splits into a creation part, which pairs linearly
//! with one t-slot, and an annihilation part, which is inserted into lower
//! correlators. Propagators pair cycle insertions directly.

use std::collections::HashMap;

use crate::error::Result;
use crate::recursion::{CorrelatorKey, Insertion};
use crate::series::PuiseuxSeries;
use crate::C64;

/// Arithmetic needed by the assembler.
pub trait WickValue: Clone {
    /// `self + k * other`.
    fn axpy(&self, k: C64, other: &Self) -> Result<Self>;
    fn mul(&self, other: &Self) -> Result<Self>;
    /// Coefficient-wise absolute value.
    fn magnitude(&self) -> Self;
}

impl WickValue for C64 {
    fn axpy(&self, k: C64, other: &Self) -> Result<Self> {
        Ok(self + k * other)
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        Ok(self * other)
    }
    fn magnitude(&self) -> Self {
        C64::new(self.norm(), 0.0)
    }
}

impl WickValue for PuiseuxSeries {
    fn axpy(&self, k: C64, other: &Self) -> Result<Self> {
        PuiseuxSeries::axpy(self, k, other)
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        PuiseuxSeries::mul(self, other)
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
}

/// A value paired with the same computation carried out on absolute values,
/// which bounds the size of the terms that cancelled in it.
#[derive(Clone, Debug)]
pub struct Bounded<V> {
    pub value: V,
    pub bound: V,
}

impl<V: WickValue> WickValue for Bounded<V> {
    fn axpy(&self, k: C64, other: &Self) -> Result<Self> {
        Ok(Self { value: self.value.axpy(k, &other.value)?, bound: self.bound.axpy(C64::new(k.norm(), 0.0), &other.bound)? })
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        Ok(Self { value: self.value.mul(&other.value)?, bound: self.bound.mul(&other.bound)? })
    }
    fn magnitude(&self) -> Self {
        Self { value: self.bound.clone(), bound: self.bound.clone() }
    }
}

/// Wraps a source so that assembly also produces a magnitude bound.
pub struct BoundedSource<'a, S>(pub &'a S);

fn bounded<V: WickValue>(v: V) -> Bounded<V> {
    let bound = v.magnitude();
    Bounded { value: v, bound }
}

impl<S: WickSource> WickSource for BoundedSource<'_, S> {
    type V = Bounded<S::V>;
    fn cycles(&self) -> usize {
        self.0.cycles()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn zero(&self) -> Self::V {
        Bounded { value: self.0.zero(), bound: self.0.zero() }
    }
    fn one(&self) -> Self::V {
        Bounded { value: self.0.one(), bound: self.0.one() }
    }
    fn creation(&self, c: usize, a: usize, k: usize) -> Result<Self::V> {
        self.0.creation(c, a, k).map(bounded)
    }
    fn annihilation(&self, c: usize, a: usize, k: usize) -> Result<Self::V> {
        self.0.annihilation(c, a, k).map(bounded)
    }
    fn propagator(&self, c1: usize, c2: usize) -> Result<Self::V> {
        self.0.propagator(c1, c2).map(bounded)
    }
    fn correlator(&self, key: &CorrelatorKey) -> Result<C64> {
        self.0.correlator(key)
    }
}

/// Ingredients for one assembly: `r` cycle insertions at a common spectral point.
pub trait WickSource {
    type V: WickValue;
    fn cycles(&self) -> usize;
    fn dim(&self) -> usize;
    fn zero(&self) -> Self::V;
    fn one(&self) -> Self::V;
    /// `(I^{(-k)}_c, v_a)`.
    fn creation(&self, c: usize, a: usize, k: usize) -> Result<Self::V>;
    /// `(-1)^k (I^{(k+1)}_c, v^a)`, the coefficient of `v_a ψ^k`.
    fn annihilation(&self, c: usize, a: usize, k: usize) -> Result<Self::V>;
    fn propagator(&self, c1: usize, c2: usize) -> Result<Self::V>;
    fn correlator(&self, key: &CorrelatorKey) -> Result<C64>;
}

fn pairings(fields: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if fields.len() < 2 {
        return vec![vec![]];
    }
    let first = fields[0];
    let rest = &fields[1..];
    let mut out = pairings(rest);
    for (j, &other) in rest.iter().enumerate() {
        let remaining: Vec<usize> = rest.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, x)| *x).collect();
        for mut p in pairings(&remaining) {
            p.push((first, other));
            out.push(p);
        }
    }
    out
}

fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let first = items[0];
    let mut out = Vec::new();
    for part in set_partitions(&items[1..]) {
        for b in 0..part.len() {
            let mut p = part.clone();
            p[b].insert(0, first);
            out.push(p);
        }
        let mut p = part;
        p.push(vec![first]);
        out.push(p);
    }
    out
}

fn injections(count: usize, pool: &[usize]) -> Vec<Vec<usize>> {
    if count == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (j, &x) in pool.iter().enumerate() {
        let rest: Vec<usize> = pool.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, y)| *y).collect();
        for mut tail in injections(count - 1, &rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut tail in compositions(total - first, parts - 1) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

struct Assembler<'a, S: WickSource> {
    src: &'a S,
    slots: &'a [Insertion],
    blocks: HashMap<(usize, u32, u32), S::V>,
}

impl<'a, S: WickSource> Assembler<'a, S> {
    /// Annihilation block of fields `fields` with slot indices `slot_idx` at genus `g`.
    fn block(&mut self, g: usize, fields: &[usize], slot_idx: &[usize]) -> Result<S::V> {
        let fmask = fields.iter().fold(0u32, |m, f| m | 1 << f);
        let smask = slot_idx.iter().fold(0u32, |m, s| m | 1 << s);
        if let Some(v) = self.blocks.get(&(g, fmask, smask)) {
            return Ok(v.clone());
        }
        let n = fields.len() + slot_idx.len();
        let value = if 2 * g + n <= 2 {
            self.src.zero()
        } else {
            let used: usize = slot_idx.iter().map(|&s| self.slots[s].k).sum();
            let cap = 3 * g + n;
            if used + 3 > cap {
                self.src.zero()
            } else {
                let base: Vec<Insertion> = slot_idx.iter().map(|&s| self.slots[s]).collect();
                self.fill(g, fields, cap - 3 - used, base)?
            }
        };
        self.blocks.insert((g, fmask, smask), value.clone());
        Ok(value)
    }

    fn fill(&self, g: usize, fields: &[usize], budget: usize, ins: Vec<Insertion>) -> Result<S::V> {
        let dim = self.src.dim();
        let mut acc = self.src.zero();
        let c = fields[0];
        for k in 0..=budget {
            for a in 0..dim {
                let mut next = ins.clone();
                next.push(Insertion { a, k });
                let coef = self.src.annihilation(c, a, k)?;
                if fields.len() == 1 {
                    let val = self.src.correlator(&CorrelatorKey::new(g, next))?;
                    if val != C64::new(0.0, 0.0) {
                        acc = acc.axpy(val, &coef)?;
                    }
                } else {
                    let inner = self.fill(g, &fields[1..], budget - k, next)?;
                    acc = acc.axpy(C64::new(1.0, 0.0), &coef.mul(&inner)?)?;
                }
            }
        }
        Ok(acc)
    }
}

/// Coefficient of the t-slots `slots` (derivative semantics) in Ω_g of the source's cycles.
pub fn assemble<S: WickSource>(src: &S, g: usize, slots: &[Insertion]) -> Result<S::V> {
    let r = src.cycles();
    let fields: Vec<usize> = (0..r).collect();
    let all_slots: Vec<usize> = (0..slots.len()).collect();
    let mut asm = Assembler { src, slots, blocks: HashMap::new() };
    let mut total = src.zero();
    for pairing in pairings(&fields) {
        let props = pairing.len();
        if props > g {
            continue;
        }
        let mut prop_val = src.one();
        for &(c1, c2) in &pairing {
            prop_val = prop_val.mul(&src.propagator(c1, c2)?)?;
        }
        let rem: Vec<usize> = fields.iter().copied().filter(|f| !pairing.iter().any(|&(a, b)| a == *f || b == *f)).collect();
        for mask in 0..(1u32 << rem.len()) {
            let creations: Vec<usize> = rem.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, f)| *f).collect();
            let anns: Vec<usize> = rem.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 0).map(|(_, f)| *f).collect();
            if creations.len() > slots.len() {
                continue;
            }
            let sign = if anns.len().is_multiple_of(2) { 1.0 } else { -1.0 };
            for inj in injections(creations.len(), &all_slots) {
                let mut head = prop_val.clone();
                for (&c, &s) in creations.iter().zip(&inj) {
                    head = head.mul(&src.creation(c, slots[s].a, slots[s].k)?)?;
                }
                let left: Vec<usize> = all_slots.iter().copied().filter(|s| !inj.contains(s)).collect();
                if anns.is_empty() {
                    if left.is_empty() && g == props {
                        total = total.axpy(C64::new(sign, 0.0), &head)?;
                    }
                    continue;
                }
                for blocks in set_partitions(&anns) {
                    let merged: usize = blocks.iter().map(|b| b.len() - 1).sum();
                    let Some(genus_left) = g.checked_sub(props + merged) else { continue };
                    let nb = blocks.len();
                    for assign in 0..nb.pow(left.len() as u32) {
                        let mut per_block: Vec<Vec<usize>> = vec![Vec::new(); nb];
                        let mut code = assign;
                        for &s in &left {
                            per_block[code % nb].push(s);
                            code /= nb;
                        }
                        for genera in compositions(genus_left, nb) {
                            let stable = blocks
                                .iter()
                                .zip(&per_block)
                                .zip(&genera)
                                .all(|((b, sl), &gb)| 2 * gb + b.len() + sl.len() > 2);
                            if !stable {
                                continue;
                            }
                            let mut term = head.clone();
                            for ((b, sl), &gb) in blocks.iter().zip(&per_block).zip(&genera) {
                                term = term.mul(&asm.block(gb, b, sl)?)?;
                            }
                            total = total.axpy(C64::new(sign, 0.0), &term)?;
                        }
                    }
                }
            }
        }
    }
    Ok(total)
}
