//! Which stored direction vector to overwrite, and which of the stored
//! vectors each candidate uses when it is sampled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmfactor::FactorStore;
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// Target temporal distance, in iterations, between consecutive stored vectors.
    pub n_steps: u64,
    /// The store is updated every `period` iterations.
    pub period: u64,
    /// Scale of the half-normal draw for the subset size.
    pub m_sigma: f64,
}

impl SelectionParams {
    /// `N_steps = n`, `T = max(1, ⌊ln n⌋)`, `m_σ = 4`.
    pub fn for_dimension(n: usize) -> Self {
        Self {
            n_steps: n as u64,
            period: default_period(n),
            m_sigma: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be >= 1"));
        }
        if self.period == 0 {
            return Err(Error::invalid("update period must be >= 1"));
        }
        if !(self.m_sigma > 0.0 && self.m_sigma.is_finite()) {
            return Err(Error::invalid(format!("m_sigma must be positive, got {}", self.m_sigma)));
        }
        Ok(())
    }
}

/// `⌊ln n⌋`, floored at 1 so that tiny dimensions still update.
pub fn default_period(n: usize) -> u64 {
    ((n as f64).ln().floor() as u64).max(1)
}

/// Outcome of one store update: the slot that received the new vector and the
/// first temporal position whose inverse image is stale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetUpdate {
    pub slot: usize,
    pub recompute_from: usize,
}

/// Chooses the temporal position to evict in a full store, given the stamps
/// along the temporal order (oldest first).
///
/// Finds the consecutive pair whose gap falls furthest below `n_steps`
/// (ties to the oldest pair). If even that gap meets the target the oldest
/// vector goes; otherwise the newer member of the pair goes.
pub fn eviction_position(ordered_stamps: &[u64], n_steps: u64) -> usize {
    let deficits = ordered_stamps
        .windows(2)
        .map(|w| w[1] as i128 - w[0] as i128 - n_steps as i128);
    let mut best: Option<(usize, i128)> = None;
    for (i, deficit) in deficits.enumerate() {
        if best.is_none_or(|(_, d)| deficit < d) {
            best = Some((i, deficit));
        }
    }
    match best {
        Some((i, deficit)) if deficit < 0 => i + 1,
        _ => 0,
    }
}

/// Stores `p_c` at iteration `t` (a multiple of `params.period`): fills the
/// next free slot while the store has room, otherwise evicts per
/// [`eviction_position`] and makes the reused slot the newest. Inverse images
/// from `recompute_from` onwards are stale until
/// [`FactorStore::update_inverses`] runs.
pub fn update_set(
    params: &SelectionParams,
    store: &mut FactorStore,
    t: u64,
    p_c: &[f64],
) -> Result<SetUpdate> {
    let stamp = (t / params.period) * params.period;
    let update = match store.allocate(stamp) {
        Some(slot) => SetUpdate {
            slot,
            recompute_from: store.count() - 1,
        },
        None => {
            let position = eviction_position(&store.ordered_stamps(), params.n_steps);
            let slot = store.promote(position, stamp)?;
            SetUpdate {
                slot,
                recompute_from: position,
            }
        }
    };
    store.write_direction(update.slot, p_c)?;
    Ok(update)
}

/// Number of newest stored vectors used for one candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetChoice {
    pub m_star: usize,
    pub count: usize,
}

impl SubsetChoice {
    /// Temporal positions `count − m*, …, count − 1`.
    pub fn positions(&self) -> std::ops::Range<usize> {
        self.count - self.m_star..self.count
    }
}

/// Draws `m* = min(⌊σ_eff·|N(0,1)|⌋, count)` where `σ_eff = 10·m_σ` for the
/// first candidate of a generation (`k == 1`) and `m_σ` otherwise.
pub fn select_subset(
    params: &SelectionParams,
    count: usize,
    k: usize,
    src: &mut RandomSource,
) -> SubsetChoice {
    let scale = if k == 1 {
        10.0 * params.m_sigma
    } else {
        params.m_sigma
    };
    let draw = (scale * src.gaussian().abs()).floor();
    let m_star = if draw >= count as f64 {
        count
    } else {
        draw as usize
    };
    SubsetChoice { m_star, count }
}
