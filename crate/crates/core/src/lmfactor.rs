//! Implicit Cholesky factor reconstructed from stored direction vectors.
//!
//! The factor is never materialized. It is defined by `count ≤ m` pairs
//! `(p, v)` in temporal order, starting from `A = I`, through the rank-one
//! recurrence
//!
//! ```text
//! A ← a·A + b·p·vᵀ        A⁻¹ ← c·A⁻¹ − d·v·(vᵀA⁻¹)
//! ```
//!
//! with `a = √(1−c₁)`, `c = 1/a`, `v = A⁻¹p` taken against the factor built from
//! the strictly older pairs, and `b`, `d` closed-form functions of `‖v‖²`.
//! Products with `A` and `A⁻¹` then cost one inner product per stored pair.
//!
//! Rows of `P` and `V` live in fixed physical slots; `order` lists the slots
//! from oldest to newest, so replacing a vector only permutes `order`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Squared norms of `v` at or below this are treated as the zero vector.
pub const DEGENERATE_EPS: f64 = 1e-300;

/// Forward and inverse coefficients `(b, d)` for a pair whose inverse image has
/// squared norm `norm_sq`, or `None` when the pair is degenerate.
///
/// Evaluated as `b = a·κ/(r+1)` and `d = κ/(a·r·(r+1))` with `κ = c₁/(1−c₁)` and
/// `r = √(1+κ‖v‖²)`, which is the usual closed form with the `r − 1`
/// cancellation divided out.
pub fn closed_form_coefficients(c1: f64, norm_sq: f64) -> Option<(f64, f64)> {
    if !(norm_sq > DEGENERATE_EPS) {
        return None;
    }
    let a = (1.0 - c1).sqrt();
    let kappa = c1 / (1.0 - c1);
    let r = (1.0 + kappa * norm_sq).sqrt();
    Some((a * kappa / (r + 1.0), kappa / (a * r * (r + 1.0))))
}

#[derive(Debug, Default)]
struct DotCounter(AtomicU64);

impl DotCounter {
    fn add(&self, k: u64) {
        self.0.fetch_add(k, Ordering::Relaxed);
    }
    fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for DotCounter {
    fn clone(&self) -> Self {
        DotCounter(AtomicU64::new(self.get()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorStore {
    n: usize,
    capacity: usize,
    c1: f64,
    a: f64,
    c_inv: f64,
    p: Vec<f64>,
    v: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
    order: Vec<usize>,
    stamps: Vec<u64>,
    #[serde(skip)]
    dots: DotCounter,
}

impl PartialEq for FactorStore {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.capacity == other.capacity
            && self.c1.to_bits() == other.c1.to_bits()
            && self.p == other.p
            && self.v == other.v
            && self.b == other.b
            && self.d == other.d
            && self.order == other.order
            && self.stamps == other.stamps
    }
}

impl FactorStore {
    pub fn new(n: usize, capacity: usize, c1: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("factor dimension must be positive"));
        }
        if !(0.0..1.0).contains(&c1) {
            return Err(Error::invalid(format!("c1 must lie in [0, 1), got {c1}")));
        }
        let a = (1.0 - c1).sqrt();
        Ok(Self {
            n,
            capacity,
            c1,
            a,
            c_inv: 1.0 / a,
            p: vec![0.0; capacity * n],
            v: vec![0.0; capacity * n],
            b: vec![0.0; capacity],
            d: vec![0.0; capacity],
            order: Vec::with_capacity(capacity),
            stamps: vec![0; capacity],
            dots: DotCounter::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count(&self) -> usize {
        self.order.len()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.capacity
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c_inv(&self) -> f64 {
        self.c_inv
    }

    /// Physical slots from oldest to newest.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn stamp(&self, slot: usize) -> u64 {
        self.stamps[slot]
    }

    /// Stamps along the temporal order, oldest first.
    pub fn ordered_stamps(&self) -> Vec<u64> {
        self.order.iter().map(|&s| self.stamps[s]).collect()
    }

    pub fn p_row(&self, slot: usize) -> &[f64] {
        &self.p[slot * self.n..(slot + 1) * self.n]
    }

    pub fn v_row(&self, slot: usize) -> &[f64] {
        &self.v[slot * self.n..(slot + 1) * self.n]
    }

    pub fn b(&self, slot: usize) -> f64 {
        self.b[slot]
    }

    pub fn d(&self, slot: usize) -> f64 {
        self.d[slot]
    }

    pub fn position_of(&self, slot: usize) -> Option<usize> {
        self.order.iter().position(|&s| s == slot)
    }

    /// Total inner products with stored `v` rows since construction or the
    /// last [`reset_dot_products`](Self::reset_dot_products).
    pub fn dot_products(&self) -> u64 {
        self.dots.get()
    }

    pub fn reset_dot_products(&self) {
        self.dots.0.store(0, Ordering::Relaxed);
    }

    fn check_positions(&self, idx: &[usize]) -> Result<()> {
        let count = self.count();
        for (k, &pos) in idx.iter().enumerate() {
            if pos >= count {
                return Err(Error::invalid(format!(
                    "position {pos} out of range (count {count})"
                )));
            }
            if k > 0 && idx[k - 1] >= pos {
                return Err(Error::invalid("positions must be strictly increasing"));
            }
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::invalid(format!(
                "vector has {len} components, factor dimension is {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `A·z` using the pairs at temporal positions `idx` (0-based, oldest
    /// first, strictly increasing). Omitted pairs act as identity steps.
    pub fn az(&self, z: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        self.check_positions(idx)?;
        let mut out = vec![0.0; self.n];
        self.az_slots(z, idx.iter().map(|&p| self.order[p]), &mut out);
        Ok(out)
    }

    /// `A⁻¹·z` over the positions `idx`.
    pub fn ainvz(&self, z: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        self.check_positions(idx)?;
        let mut out = z.to_vec();
        self.ainvz_slots_in_place(&mut out, idx.iter().map(|&p| self.order[p]));
        Ok(out)
    }

    pub fn az_full(&self, z: &[f64]) -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..self.count()).collect();
        self.az(z, &idx)
    }

    pub fn ainvz_full(&self, z: &[f64]) -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..self.count()).collect();
        self.ainvz(z, &idx)
    }

    /// `out = A·z` over the newest `m_star` pairs, without allocation.
    /// `m_star` is clamped to the number of stored pairs.
    pub fn az_latest_into(&self, z: &[f64], m_star: usize, out: &mut [f64]) {
        let count = self.count();
        let first = count - m_star.min(count);
        self.az_slots(z, self.order[first..].iter().copied(), out);
    }

    fn az_slots(&self, z: &[f64], slots: impl Iterator<Item = usize>, out: &mut [f64]) {
        out.copy_from_slice(z);
        let mut dots = 0;
        for slot in slots {
            // the inner product is always taken with the original z
            let k = self.b[slot] * dot(self.v_row(slot), z);
            dots += 1;
            for (x, p) in out.iter_mut().zip(self.p_row(slot)) {
                *x = self.a * *x + k * p;
            }
        }
        self.dots.add(dots);
    }

    fn ainvz_slots_in_place(&self, x: &mut [f64], slots: impl Iterator<Item = usize>) {
        let mut dots = 0;
        for slot in slots {
            // here the running x enters the inner product
            let v = self.v_row(slot);
            let k = self.d[slot] * dot(v, x);
            dots += 1;
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi = self.c_inv * *xi - k * vi;
            }
        }
        self.dots.add(dots);
    }

    /// Recomputes `b` and `d` for `slot` from its current `v` row.
    ///
    /// A degenerate `v` zeroes both coefficients, which turns the pair into a
    /// pure scaling step `A ← a·A`, and reports [`Error::DegenerateVector`].
    pub fn update_coefficients(&mut self, slot: usize) -> Result<()> {
        let norm_sq = dot(self.v_row(slot), self.v_row(slot));
        match closed_form_coefficients(self.c1, norm_sq) {
            Some((b, d)) => {
                self.b[slot] = b;
                self.d[slot] = d;
                Ok(())
            }
            None => {
                self.b[slot] = 0.0;
                self.d[slot] = 0.0;
                Err(Error::DegenerateVector { slot, norm_sq })
            }
        }
    }

    /// Recomputes `v = A⁻¹p` (against strictly older pairs) and the
    /// coefficients for every pair at temporal position `>= from_position`,
    /// oldest first. Returns the slots whose `v` came out degenerate.
    pub fn update_inverses(&mut self, from_position: usize) -> Vec<usize> {
        let n = self.n;
        let mut degenerate = Vec::new();
        let mut buf = vec![0.0; n];
        for pos in from_position..self.count() {
            let slot = self.order[pos];
            buf.copy_from_slice(self.p_row(slot));
            self.ainvz_slots_in_place(&mut buf, self.order[..pos].iter().copied());
            self.v[slot * n..(slot + 1) * n].copy_from_slice(&buf);
            if self.update_coefficients(slot).is_err() {
                degenerate.push(slot);
            }
        }
        degenerate
    }

    /// Claims the next free slot as the newest pair. Returns `None` when full.
    /// The caller writes the vector and refreshes inverses.
    pub fn allocate(&mut self, stamp: u64) -> Option<usize> {
        if self.is_full() {
            return None;
        }
        let slot = self.order.len();
        self.order.push(slot);
        self.stamps[slot] = stamp;
        Some(slot)
    }

    /// Moves the pair at temporal `position` to the newest position and
    /// restamps it. Returns its slot.
    pub fn promote(&mut self, position: usize, stamp: u64) -> Result<usize> {
        if position >= self.count() {
            return Err(Error::invalid(format!(
                "position {position} out of range (count {})",
                self.count()
            )));
        }
        let slot = self.order.remove(position);
        self.order.push(slot);
        self.stamps[slot] = stamp;
        Ok(slot)
    }

    /// Overwrites the `p` row of `slot` without touching inverses.
    pub fn write_direction(&mut self, slot: usize, p_new: &[f64]) -> Result<()> {
        self.check_len(p_new.len())?;
        if slot >= self.capacity {
            return Err(Error::invalid(format!("slot {slot} out of range")));
        }
        if p_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("direction vector has non-finite components"));
        }
        let n = self.n;
        self.p[slot * n..(slot + 1) * n].copy_from_slice(p_new);
        Ok(())
    }

    /// Replaces the stored vector in `slot` (which keeps its temporal position)
    /// and recomputes the inverse images from that position onwards.
    pub fn replace_vector(&mut self, slot: usize, p_new: &[f64]) -> Result<Vec<usize>> {
        let position = self
            .position_of(slot)
            .ok_or_else(|| Error::invalid(format!("slot {slot} holds no vector")))?;
        self.write_direction(slot, p_new)?;
        Ok(self.update_inverses(position))
    }

    /// Clears all stored pairs.
    pub fn clear(&mut self) {
        self.order.clear();
        self.p.iter_mut().for_each(|v| *v = 0.0);
        self.v.iter_mut().for_each(|v| *v = 0.0);
        self.b.iter_mut().for_each(|v| *v = 0.0);
        self.d.iter_mut().for_each(|v| *v = 0.0);
        self.stamps.iter_mut().for_each(|v| *v = 0);
    }

    /// Dense `n×n` factor (row-major), reconstructed column by column.
    pub fn dense_factor(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            self.az_latest_into(&e, self.count(), &mut col);
            e[c] = 0.0;
            for r in 0..n {
                dense[r * n + c] = col[r];
            }
        }
        dense
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
