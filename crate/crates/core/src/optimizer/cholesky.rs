//! Dense (μ/μ_w, λ)-Cholesky-CMA-ES baseline: explicit `n×n` factor and
//! inverse updated by rank-one steps, cumulative step-size adaptation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmfactor::closed_form_coefficients;
use crate::rng::RandomSource;

use super::config::CholeskyConfig;
use super::lmcma::Scratch;
use super::population::{
    check_fitness, ranking, AskTell, BestSoFar, Candidate, Population, PreImage,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CholeskyCma {
    config: CholeskyConfig,
    mean: Vec<f64>,
    sigma: f64,
    p_sigma: Vec<f64>,
    p_c: Vec<f64>,
    /// Row-major factor.
    a: Vec<f64>,
    /// Row-major inverse factor.
    a_inv: Vec<f64>,
    t: u64,
    evaluations: u64,
    best: Option<BestSoFar>,
    rng: RandomSource,
    pending: Option<Population>,
    #[serde(skip)]
    scratch: Scratch,
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (row, o) in m.chunks_exact(n).zip(out.iter_mut()) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

impl CholeskyCma {
    pub fn new(config: CholeskyConfig, mean: Vec<f64>, sigma: f64, rng: RandomSource) -> Result<Self> {
        let n = config.n;
        if mean.len() != n {
            return Err(Error::invalid(format!(
                "initial mean has {} components, dimension is {n}",
                mean.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            mean,
            sigma,
            p_sigma: vec![0.0; n],
            p_c: vec![0.0; n],
            a: identity(n),
            a_inv: identity(n),
            t: 0,
            evaluations: 0,
            best: None,
            rng,
            pending: None,
            scratch: Scratch(vec![0.0; n]),
            config,
        })
    }

    pub fn config(&self) -> &CholeskyConfig {
        &self.config
    }

    pub fn factor(&self) -> &[f64] {
        &self.a
    }

    pub fn inverse_factor(&self) -> &[f64] {
        &self.a_inv
    }

    /// `max |A·A⁻¹ − I|`.
    pub fn factor_drift(&self) -> f64 {
        let n = self.config.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| self.a[i * n + k] * self.a_inv[k * n + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Overrides the step size, e.g. for restarts.
    pub fn set_sigma(&mut self, sigma: f64) {
        self.sigma = sigma;
    }

    fn sample(&mut self) -> Population {
        let n = self.config.n;
        let candidates = (0..self.config.lambda)
            .map(|_| {
                let mut z = vec![0.0; n];
                self.rng.fill_gaussian(&mut z);
                let mut x = vec![0.0; n];
                mat_vec(&self.a, &z, &mut x);
                for (xi, mi) in x.iter_mut().zip(&self.mean) {
                    *xi = mi + self.sigma * *xi;
                }
                Candidate {
                    x,
                    pre_image: PreImage::Gaussian(z),
                    m_star: None,
                }
            })
            .collect();
        Population {
            generation: self.t,
            candidates,
        }
    }

    /// One full generation against `objective`.
    pub fn step(&mut self, mut objective: impl FnMut(&[f64]) -> Result<f64>) -> Result<()> {
        let fitness = self.ask().xs().map(&mut objective).collect::<Result<Vec<_>>>()?;
        self.tell(&fitness)
    }
}

impl AskTell for CholeskyCma {
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
        let n = cfg.n;
        check_fitness(fitness, cfg.lambda)?;
        let pop = self
            .pending
            .take()
            .ok_or_else(|| Error::invalid("tell without a pending population"))?;
        let order = ranking(fitness);

        let mut new_mean = vec![0.0; n];
        let mut z_w = vec![0.0; n];
        for (w, &k) in cfg.weights.iter().zip(&order) {
            let c = &pop.candidates[k];
            let PreImage::Gaussian(z) = &c.pre_image else {
                return Err(Error::Internal("baseline candidate without Gaussian pre-image".into()));
            };
            for i in 0..n {
                new_mean[i] += w * c.x[i];
                z_w[i] += w * z[i];
            }
        }
        if new_mean.iter().any(|v| !v.is_finite()) {
            self.pending = Some(pop);
            return Err(Error::Internal(format!(
                "non-finite mean at generation {} (sigma {:e})",
                self.t, self.sigma
            )));
        }

        let sqrt_mu_w = cfg.mu_w.sqrt();
        let cs = (cfg.c_sigma * (2.0 - cfg.c_sigma)).sqrt() * sqrt_mu_w;
        for (p, z) in self.p_sigma.iter_mut().zip(&z_w) {
            *p = (1.0 - cfg.c_sigma) * *p + cs * z;
        }
        let a_zw = self.scratch.sized(n);
        mat_vec(&self.a, &z_w, a_zw);
        let cc = (cfg.c_c * (2.0 - cfg.c_c)).sqrt() * sqrt_mu_w;
        for (p, az) in self.p_c.iter_mut().zip(a_zw.iter()) {
            *p = (1.0 - cfg.c_c) * *p + cc * az;
        }

        // v = A⁻¹ p_c, then rank-one updates of A and A⁻¹ from the old factors
        let mut v = vec![0.0; n];
        mat_vec(&self.a_inv, &self.p_c, &mut v);
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let a = (1.0 - cfg.c1).sqrt();
        match closed_form_coefficients(cfg.c1, norm_sq) {
            Some((b, d)) => {
                // vᵀA⁻¹
                let mut vt_ainv = vec![0.0; n];
                for (k, vk) in v.iter().enumerate() {
                    for (acc, aij) in vt_ainv.iter_mut().zip(&self.a_inv[k * n..(k + 1) * n]) {
                        *acc += vk * aij;
                    }
                }
                let c = 1.0 / a;
                for i in 0..n {
                    let row = &mut self.a[i * n..(i + 1) * n];
                    let bp = b * self.p_c[i];
                    for (aij, vj) in row.iter_mut().zip(&v) {
                        *aij = a * *aij + bp * vj;
                    }
                    let row = &mut self.a_inv[i * n..(i + 1) * n];
                    let dv = d * v[i];
                    for (aij, wj) in row.iter_mut().zip(&vt_ainv) {
                        *aij = c * *aij - dv * wj;
                    }
                }
            }
            None => {
                self.a.iter_mut().for_each(|x| *x *= a);
                self.a_inv.iter_mut().for_each(|x| *x /= a);
            }
        }

        let ps_norm = self.p_sigma.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.sigma *= ((cfg.c_sigma / cfg.d_sigma) * (ps_norm / cfg.chi_n - 1.0)).exp();
        self.mean = new_mean;

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

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn factor_and_inverse_stay_consistent() {
        let n = 32;
        let mut es = CholeskyCma::new(
            CholeskyConfig::new(n).unwrap(),
            vec![1.0; n],
            1.0,
            RandomSource::new(1),
        )
        .unwrap();
        let mut src = RandomSource::new(2);
        for _ in 0..50 {
            // random ranks exercise the update without converging
            es.step(|_| Ok(src.gaussian())).unwrap();
        }
        assert_ne!(es.factor(), identity(n).as_slice());
        assert!(es.factor_drift() <= 1e-8, "{}", es.factor_drift());
    }

    #[test]
    fn no_learning_keeps_factor() {
        let n = 6;
        let mut cfg = CholeskyConfig::new(n).unwrap();
        cfg.c1 = 0.0;
        let mut es = CholeskyCma::new(cfg, vec![1.0; n], 1.0, RandomSource::new(3)).unwrap();
        for _ in 0..10 {
            es.step(sphere).unwrap();
        }
        assert_eq!(es.factor(), identity(n).as_slice());
        assert_eq!(es.inverse_factor(), identity(n).as_slice());
    }

    #[test]
    fn solves_small_sphere() {
        let n = 8;
        let mut es = CholeskyCma::new(
            CholeskyConfig::new(n).unwrap(),
            vec![3.0; n],
            2.0,
            RandomSource::new(4),
        )
        .unwrap();
        for _ in 0..3000 {
            es.step(sphere).unwrap();
            if es.best().unwrap().f < 1e-10 {
                return;
            }
        }
        panic!("best {:?}", es.best().map(|b| b.f));
    }
}
