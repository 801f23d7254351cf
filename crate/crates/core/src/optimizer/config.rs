use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::{default_period, SelectionParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Default,
    /// Tuned for the nonsmooth Nesterov-Chebyshev-Rosenbrock function:
    /// doubled population, 15× larger `c₁`, `c_σ = 0.3/n²`, restarts on.
    Nesterov,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Default => "default",
            Preset::Nesterov => "nesterov",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Preset::Default),
            "nesterov" => Ok(Preset::Nesterov),
            other => Err(Error::invalid(format!("unknown preset {other:?}"))),
        }
    }
}

/// Number of stored direction vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MemorySize {
    /// `4 + ⌊3 ln n⌋`
    #[default]
    Default,
    /// `⌊2√n⌋`
    TwoSqrt,
    Fixed(usize),
}

impl MemorySize {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            MemorySize::Default => default_population(n),
            MemorySize::TwoSqrt => (2.0 * (n as f64).sqrt()).floor() as usize,
            MemorySize::Fixed(m) => m,
        }
    }
}

impl fmt::Display for MemorySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemorySize::Default => f.write_str("default"),
            MemorySize::TwoSqrt => f.write_str("2sqrt"),
            MemorySize::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for MemorySize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(MemorySize::Default),
            "2sqrt" => Ok(MemorySize::TwoSqrt),
            _ => s
                .parse::<usize>()
                .map(MemorySize::Fixed)
                .map_err(|_| Error::invalid(format!("m must be an integer or \"2sqrt\", got {s:?}"))),
        }
    }
}

impl Serialize for MemorySize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MemorySize::Fixed(m) => s.serialize_u64(*m as u64),
            other => s.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for MemorySize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(m) => Ok(MemorySize::Fixed(m)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `4 + ⌊3 ln n⌋`, the default for both λ and m.
pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

/// `wᵢ = (ln(μ+1) − ln i) / (μ ln(μ+1) − Σⱼ ln j)` for `i = 1..μ`.
pub fn recombination_weights(mu: usize) -> Vec<f64> {
    let l = ((mu + 1) as f64).ln();
    let denom = mu as f64 * l - (1..=mu).map(|j| (j as f64).ln()).sum::<f64>();
    (1..=mu).map(|i| (l - (i as f64).ln()) / denom).collect()
}

/// `1 / Σ wᵢ²`
pub fn variance_effective_mass(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Optional per-field overrides applied on top of a preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigOverrides {
    pub lambda: Option<usize>,
    pub m: Option<MemorySize>,
    pub c_sigma: Option<f64>,
    pub z_star: Option<f64>,
    pub c_c: Option<f64>,
    pub c1: Option<f64>,
    pub d_sigma: Option<f64>,
    pub n_steps: Option<u64>,
    pub period: Option<u64>,
    pub m_sigma: Option<f64>,
    pub restarts: Option<bool>,
}

/// Hyper-parameters of the LM-CMA loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_w: f64,
    pub c_sigma: f64,
    pub z_star: f64,
    pub m: usize,
    pub c_c: f64,
    pub c1: f64,
    pub d_sigma: f64,
    pub selection: SelectionParams,
    pub preset: Preset,
    pub restarts: bool,
}

impl OptimizerConfig {
    pub fn new(n: usize) -> Result<Self> {
        Self::resolve(n, Preset::Default, &ConfigOverrides::default())
    }

    pub fn resolve(n: usize, preset: Preset, overrides: &ConfigOverrides) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let nf = n as f64;
        let base_lambda = default_population(n);
        let (lambda, c1, c_sigma, restarts) = match preset {
            Preset::Default => (base_lambda, 1.0 / (10.0 * (nf + 1.0).ln()), 0.3, false),
            Preset::Nesterov => (
                2 * base_lambda,
                15.0 / (10.0 * (nf + 1.0).ln()),
                0.3 / (nf * nf),
                true,
            ),
        };
        let lambda = overrides.lambda.unwrap_or(lambda);
        if lambda < 2 {
            return Err(Error::invalid(format!("lambda must be >= 2, got {lambda}")));
        }
        let mu = lambda / 2;
        let weights = recombination_weights(mu);
        let mu_w = variance_effective_mass(&weights);
        let cfg = Self {
            n,
            lambda,
            mu,
            mu_w,
            weights,
            c_sigma: overrides.c_sigma.unwrap_or(c_sigma),
            z_star: overrides.z_star.unwrap_or(0.25),
            m: overrides.m.unwrap_or_default().resolve(n),
            c_c: overrides.c_c.unwrap_or(0.5 / nf.sqrt()),
            c1: overrides.c1.unwrap_or(c1),
            d_sigma: overrides.d_sigma.unwrap_or(1.0),
            selection: SelectionParams {
                n_steps: overrides.n_steps.unwrap_or(n as u64),
                period: overrides.period.unwrap_or(default_period(n)),
                m_sigma: overrides.m_sigma.unwrap_or(4.0),
            },
            preset,
            restarts: overrides.restarts.unwrap_or(restarts),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 2 || self.mu == 0 || self.mu > self.lambda {
            return Err(Error::invalid(format!("bad lambda/mu {}/{}", self.lambda, self.mu)));
        }
        if self.weights.len() != self.mu {
            return Err(Error::invalid("weights must have mu entries"));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {sum}")));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be >= 1"));
        }
        for (name, v) in [("c_c", self.c_c), ("c1", self.c1)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.c_sigma > 0.0 && self.c_sigma <= 1.0) {
            return Err(Error::invalid(format!(
                "c_sigma must lie in (0, 1], got {}",
                self.c_sigma
            )));
        }
        if !(self.d_sigma > 0.0) {
            return Err(Error::invalid("d_sigma must be positive"));
        }
        self.selection.validate()
    }
}

/// Hyper-parameters of the dense Cholesky-CMA-ES baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CholeskyConfig {
    pub n: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_w: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c1: f64,
    /// Approximation of `E‖N(0, I)‖`.
    pub chi_n: f64,
}

/// Dense factors are n×n; larger dimensions are refused.
pub const CHOLESKY_DIM_CAP: usize = 2048;

impl CholeskyConfig {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_lambda(n, default_population(n))
    }

    pub fn with_lambda(n: usize, lambda: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if n > CHOLESKY_DIM_CAP {
            return Err(Error::Capacity {
                what: "dense baseline dimension",
                requested: n,
                cap: CHOLESKY_DIM_CAP,
            });
        }
        if lambda < 2 {
            return Err(Error::invalid(format!("lambda must be >= 2, got {lambda}")));
        }
        let nf = n as f64;
        let mu = lambda / 2;
        let weights = recombination_weights(mu);
        let mu_w = variance_effective_mass(&weights);
        let c_sigma = mu_w.sqrt() / (nf.sqrt() + mu_w.sqrt());
        let d_sigma = 1.0 + c_sigma + 2.0 * (((mu_w - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0);
        Ok(Self {
            n,
            lambda,
            mu,
            weights,
            mu_w,
            c_sigma,
            d_sigma,
            c_c: 4.0 / (nf + 4.0),
            c1: 2.0 / (nf + 2f64.sqrt()).powi(2),
            chi_n: nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_dimension() {
        let c = OptimizerConfig::new(128).unwrap();
        assert_eq!(c.lambda, 18);
        assert_eq!(c.mu, 9);
        assert_eq!(c.m, 18);
        assert_eq!(c.selection.n_steps, 128);
        assert_eq!(c.selection.period, 4);
        assert_eq!(c.c_sigma, 0.3);
        assert_eq!(c.z_star, 0.25);
        assert!((c.c_c - 0.5 / 128f64.sqrt()).abs() < 1e-15);
        assert!((c.c1 - 1.0 / (10.0 * 129f64.ln())).abs() < 1e-15);
        assert!(!c.restarts);
    }

    #[test]
    fn weights_are_normalized_and_decreasing() {
        for mu in 1..40 {
            let w = recombination_weights(mu);
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(w.windows(2).all(|p| p[0] > p[1]));
        }
        assert_eq!(recombination_weights(1), vec![1.0]);
    }

    #[test]
    fn two_sqrt_memory() {
        assert_eq!(MemorySize::TwoSqrt.resolve(256), 32);
        assert_eq!(MemorySize::TwoSqrt.resolve(1024), 64);
        assert_eq!(MemorySize::Default.resolve(1024), 24);
        assert_eq!("2sqrt".parse::<MemorySize>().unwrap(), MemorySize::TwoSqrt);
        assert_eq!("5".parse::<MemorySize>().unwrap(), MemorySize::Fixed(5));
        assert!("five".parse::<MemorySize>().is_err());
    }

    #[test]
    fn nesterov_preset() {
        let d = OptimizerConfig::new(128).unwrap();
        let c = OptimizerConfig::resolve(128, Preset::Nesterov, &ConfigOverrides::default()).unwrap();
        assert_eq!(c.lambda, 2 * d.lambda);
        assert!((c.c1 - 15.0 * d.c1).abs() < 1e-15);
        assert_eq!(c.c_sigma, 0.3 / (128.0 * 128.0));
        assert!(c.restarts);
        // c1 would exceed 1 in very small dimension
        assert!(OptimizerConfig::resolve(3, Preset::Nesterov, &ConfigOverrides::default()).is_err());
    }

    #[test]
    fn overrides_apply() {
        let o = ConfigOverrides {
            lambda: Some(7),
            m: Some(MemorySize::Fixed(5)),
            z_star: Some(0.3),
            ..Default::default()
        };
        let c = OptimizerConfig::resolve(50, Preset::Default, &o).unwrap();
        assert_eq!((c.lambda, c.mu, c.m, c.z_star), (7, 3, 5, 0.3));
        let bad = ConfigOverrides {
            c_c: Some(1.5),
            ..Default::default()
        };
        assert!(OptimizerConfig::resolve(50, Preset::Default, &bad).is_err());
        let bad = ConfigOverrides {
            lambda: Some(1),
            ..Default::default()
        };
        assert!(OptimizerConfig::resolve(50, Preset::Default, &bad).is_err());
    }

    #[test]
    fn memory_size_serde() {
        let o = ConfigOverrides {
            m: Some(MemorySize::TwoSqrt),
            ..Default::default()
        };
        let s = serde_json::to_string(&o).unwrap();
        assert!(s.contains("\"2sqrt\""));
        assert_eq!(serde_json::from_str::<ConfigOverrides>(&s).unwrap(), o);
        let o: ConfigOverrides = serde_json::from_str(r#"{"m": 12}"#).unwrap();
        assert_eq!(o.m, Some(MemorySize::Fixed(12)));
    }

    #[test]
    fn cholesky_constants() {
        let c = CholeskyConfig::new(32).unwrap();
        assert_eq!(c.lambda, 14);
        assert!((c.c_c - 4.0 / 36.0).abs() < 1e-15);
        assert!(c.c_sigma > 0.0 && c.c_sigma < 1.0);
        assert!(c.d_sigma >= 1.0);
        assert!(CholeskyConfig::new(4096).is_err());
    }
}
