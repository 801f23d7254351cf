//! Population Success Rule step-size control.
//!
//! The previous and the current generation are ranked together. The
//! normalized difference of their rank sums, shifted by the target success
//! ratio, is smoothed into `s`, and the step size is multiplied by
//! `exp(s / d_σ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsrState {
    pub s: f64,
    pub prev_fitness: Option<Vec<f64>>,
    pub c_sigma: f64,
    pub z_star: f64,
    pub d_sigma: f64,
}

impl PsrState {
    pub fn new(c_sigma: f64, z_star: f64, d_sigma: f64) -> Result<Self> {
        if !(c_sigma > 0.0 && c_sigma <= 1.0) {
            return Err(Error::invalid(format!("c_sigma must lie in (0, 1], got {c_sigma}")));
        }
        if !z_star.is_finite() {
            return Err(Error::invalid("z_star must be finite"));
        }
        if !(d_sigma > 0.0 && d_sigma.is_finite()) {
            return Err(Error::invalid(format!("d_sigma must be positive, got {d_sigma}")));
        }
        Ok(Self {
            s: 0.0,
            prev_fitness: None,
            c_sigma,
            z_star,
            d_sigma,
        })
    }

    /// Feeds the fitness values of the generation just evaluated and returns
    /// the adapted step size. The first call only records the fitness values.
    pub fn update(&mut self, curr_fitness: &[f64], sigma: f64) -> Result<f64> {
        if let Some(i) = curr_fitness.iter().position(|f| !f.is_finite()) {
            return Err(Error::invalid(format!("fitness {i} is not finite")));
        }
        let Some(prev) = self.prev_fitness.as_mut() else {
            self.prev_fitness = Some(curr_fitness.to_vec());
            return Ok(sigma);
        };
        if prev.len() != curr_fitness.len() {
            return Err(Error::invalid(format!(
                "population size changed from {} to {}",
                prev.len(),
                curr_fitness.len()
            )));
        }
        let z = success_measure(prev, curr_fitness) - self.z_star;
        self.s = (1.0 - self.c_sigma) * self.s + self.c_sigma * z;
        prev.copy_from_slice(curr_fitness);
        Ok(sigma * (self.s / self.d_sigma).exp())
    }

    pub fn reset(&mut self) {
        self.s = 0.0;
        self.prev_fitness = None;
    }
}

/// `(Σ r_prev − Σ r_curr) / λ²` over ranks in the merged list (rank 1 is the
/// lowest value). Ties go to the previous generation.
///
/// Lies in `[−1, 1]`: the two rank sums always total `λ(2λ+1)`.
pub fn success_measure(prev: &[f64], curr: &[f64]) -> f64 {
    let lambda = prev.len();
    let mut merged: Vec<(f64, bool)> = prev
        .iter()
        .map(|&f| (f, false))
        .chain(curr.iter().map(|&f| (f, true)))
        .collect();
    // stable: among equal values, previous-generation entries stay first
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff: i64 = 0;
    for (rank0, &(_, is_curr)) in merged.iter().enumerate() {
        let r = rank0 as i64 + 1;
        if is_curr {
            diff -= r;
        } else {
            diff += r;
        }
    }
    diff as f64 / (lambda * lambda) as f64
}
