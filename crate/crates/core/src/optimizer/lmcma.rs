//! The (μ/μ_w, λ)-LM-CMA: Rademacher pre-images, mirrored pairs, sampling
//! through a factor reconstructed from a random number of the newest stored
//! direction vectors, and Population Success Rule step-size control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmfactor::FactorStore;
use crate::psr::PsrState;
use crate::rng::RandomSource;
use crate::selection::{select_subset, update_set};

use super::config::OptimizerConfig;
use super::population::{
    check_fitness, ranking, AskTell, BestSoFar, Candidate, Population, PreImage,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmCma {
    config: OptimizerConfig,
    mean: Vec<f64>,
    sigma: f64,
    p_c: Vec<f64>,
    store: FactorStore,
    psr: PsrState,
    t: u64,
    evaluations: u64,
    best: Option<BestSoFar>,
    degenerate_updates: u64,
    rng: RandomSource,
    pending: Option<Population>,
    #[serde(skip)]
    scratch: Scratch,
}

/// Work buffer; not part of the optimizer state.
#[derive(Clone, Debug, Default)]
pub(crate) struct Scratch(pub(crate) Vec<f64>);

impl PartialEq for Scratch {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Scratch {
    pub(crate) fn sized(&mut self, n: usize) -> &mut Vec<f64> {
        if self.0.len() != n {
            self.0 = vec![0.0; n];
        }
        &mut self.0
    }
}

impl LmCma {
    pub fn new(
        config: OptimizerConfig,
        mean: Vec<f64>,
        sigma: f64,
        rng: RandomSource,
    ) -> Result<Self> {
        config.validate()?;
        if mean.len() != config.n {
            return Err(Error::invalid(format!(
                "initial mean has {} components, dimension is {}",
                mean.len(),
                config.n
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("initial mean is not finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        let n = config.n;
        Ok(Self {
            store: FactorStore::new(n, config.m, config.c1)?,
            psr: PsrState::new(config.c_sigma, config.z_star, config.d_sigma)?,
            p_c: vec![0.0; n],
            mean,
            sigma,
            t: 0,
            evaluations: 0,
            best: None,
            degenerate_updates: 0,
            rng,
            pending: None,
            scratch: Scratch(vec![0.0; n]),
            config,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn store(&self) -> &FactorStore {
        &self.store
    }

    pub fn psr(&self) -> &PsrState {
        &self.psr
    }

    pub fn evolution_path(&self) -> &[f64] {
        &self.p_c
    }

    /// Store updates whose new inverse image came out numerically zero.
    pub fn degenerate_updates(&self) -> u64 {
        self.degenerate_updates
    }

    fn sample(&mut self) -> Population {
        let n = self.config.n;
        let lambda = self.config.lambda;
        self.scratch.sized(n);
        let mut candidates: Vec<Candidate> = Vec::with_capacity(lambda);
        for k in 1..=lambda {
            if k % 2 == 1 {
                // fixed draw order: subset size, then signs
                let choice = select_subset(&self.config.selection, self.store.count(), k, &mut self.rng);
                let signs = self.rng.rademacher_vector(n);
                for (z, &s) in self.scratch.0.iter_mut().zip(&signs) {
                    *z = s as f64;
                }
                let mut x = vec![0.0; n];
                self.store.az_latest_into(&self.scratch.0, choice.m_star, &mut x);
                for (xi, mi) in x.iter_mut().zip(&self.mean) {
                    *xi = mi + self.sigma * *xi;
                }
                candidates.push(Candidate {
                    x,
                    pre_image: PreImage::Signs(signs),
                    m_star: Some(choice.m_star),
                });
            } else {
                let prev = &candidates[k - 2].x;
                let x = self
                    .mean
                    .iter()
                    .zip(prev)
                    .map(|(m, xp)| 2.0 * m - xp)
                    .collect();
                let m_star = candidates[k - 2].m_star;
                candidates.push(Candidate {
                    x,
                    pre_image: PreImage::Mirror,
                    m_star,
                });
            }
        }
        Population {
            generation: self.t,
            candidates,
        }
    }
}

impl AskTell for LmCma {
    fn dim(&self) -> usize {
        self.config.n
    }

    fn lambda(&self) -> usize {
        self.config.lambda
    }

    fn ask(&mut self) -> &Population {
        if self.pending.is_none() {
            let pop = self.sample();
            self.pending = Some(pop);
        }
        self.pending.as_ref().expect("pending population")
    }

    fn tell(&mut self, fitness: &[f64]) -> Result<()> {
        let cfg = &self.config;
        check_fitness(fitness, cfg.lambda)?;
        let pop = self
            .pending
            .take()
            .ok_or_else(|| Error::invalid("tell without a pending population"))?;

        let order = ranking(fitness);
        let n = cfg.n;
        let new_mean = self.scratch.sized(n);
        new_mean.iter_mut().for_each(|v| *v = 0.0);
        for (w, &k) in cfg.weights.iter().zip(&order) {
            for (m, x) in new_mean.iter_mut().zip(&pop.candidates[k].x) {
                *m += w * x;
            }
        }
        if new_mean.iter().any(|v| !v.is_finite()) {
            self.pending = Some(pop);
            return Err(Error::Internal(format!(
                "non-finite mean at generation {} (sigma {:e}, best f {:e})",
                self.t,
                self.sigma,
                fitness[order[0]]
            )));
        }

        let path_coeff = (cfg.c_c * (2.0 - cfg.c_c)).sqrt() * cfg.mu_w.sqrt() / self.sigma;
        for ((p, new), old) in self.p_c.iter_mut().zip(new_mean.iter()).zip(&self.mean) {
            *p = (1.0 - cfg.c_c) * *p + path_coeff * (new - old);
        }
        self.mean.copy_from_slice(new_mean);

        if self.t.is_multiple_of(cfg.selection.period) {
            let up = update_set(&cfg.selection, &mut self.store, self.t, &self.p_c)?;
            if !self.store.update_inverses(up.recompute_from).is_empty() {
                self.degenerate_updates += 1;
            }
        }

        self.sigma = self.psr.update(fitness, self.sigma)?;

        for (c, &f) in pop.candidates.iter().zip(fitness) {
            BestSoFar::offer(&mut self.best, &c.x, f);
        }
        self.t += 1;
        self.evaluations += cfg.lambda as u64;
        Ok(())
    }

    fn mean(&self) -> &[f64] {
        &self.mean
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn generation(&self) -> u64 {
        self.t
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn best(&self) -> Option<&BestSoFar> {
        self.best.as_ref()
    }

    fn pending(&self) -> Option<&Population> {
        self.pending.as_ref()
    }
}
