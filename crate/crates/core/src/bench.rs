//! Benchmark objectives: sphere, ellipsoid, Rosenbrock, discus, cigar,
//! different powers, their rotated variants `f(Rx)`, and the second nonsmooth
//! Nesterov-Chebyshev-Rosenbrock function.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Rotated evaluation costs O(n²) per call; above this size it is refused.
pub const DEFAULT_ROTATION_CAP: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    Sphere,
    Elli,
    Rosen,
    Discus,
    Cigar,
    Diffpow,
    Nesterov,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 7] = [
        FunctionKind::Sphere,
        FunctionKind::Elli,
        FunctionKind::Rosen,
        FunctionKind::Discus,
        FunctionKind::Cigar,
        FunctionKind::Diffpow,
        FunctionKind::Nesterov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Sphere => "sphere",
            FunctionKind::Elli => "elli",
            FunctionKind::Rosen => "rosen",
            FunctionKind::Discus => "discus",
            FunctionKind::Cigar => "cigar",
            FunctionKind::Diffpow => "diffpow",
            FunctionKind::Nesterov => "nesterov",
        }
    }

    /// Argument where the function attains its minimum value 0.
    pub fn minimizer(self, n: usize) -> Vec<f64> {
        match self {
            FunctionKind::Rosen | FunctionKind::Nesterov => vec![1.0; n],
            _ => vec![0.0; n],
        }
    }
}

/// Stable lowercase identifier such as `"elli"` or `"rot_elli"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FunctionId {
    pub kind: FunctionKind,
    pub rotated: bool,
}

impl FunctionId {
    pub fn new(kind: FunctionKind, rotated: bool) -> Self {
        Self { kind, rotated }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rotated {
            write!(f, "rot_{}", self.kind.name())
        } else {
            f.write_str(self.kind.name())
        }
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (rotated, base) = match s.strip_prefix("rot_") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        FunctionKind::ALL
            .iter()
            .find(|k| k.name() == base)
            .map(|&kind| FunctionId { kind, rotated })
            .ok_or_else(|| Error::invalid(format!("unknown function id {s:?}")))
    }
}

impl Serialize for FunctionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FunctionId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Orthogonal matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    n: usize,
    data: Vec<f64>,
}

impl Rotation {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `out = R x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.data.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = lane_dot(row, x);
        }
    }

    /// `max |RᵀR − I|` over all entries.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dot: f64 = (0..n).map(|r| self.get(r, i) * self.get(r, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Inner product with four independent accumulators, which vectorizes.
fn lane_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn make_rotation(n: usize, seed: u64) -> Result<Rotation> {
    make_rotation_with_cap(n, seed, DEFAULT_ROTATION_CAP)
}

/// Orthonormalizes the columns of a seeded standard-Gaussian matrix.
///
/// Modified Gram-Schmidt with a second reorthogonalization pass, which keeps
/// `RᵀR` within a few ulps of the identity even for n in the thousands.
pub fn make_rotation_with_cap(n: usize, seed: u64, cap: usize) -> Result<Rotation> {
    if n < 2 {
        return Err(Error::invalid(format!("rotation dimension must be >= 2, got {n}")));
    }
    if n > cap {
        return Err(Error::Capacity {
            what: "rotation dimension",
            requested: n,
            cap,
        });
    }
    let mut src = RandomSource::new(seed);
    // column-major while orthonormalizing
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut c = vec![0.0; n];
            src.fill_gaussian(&mut c);
            c
        })
        .collect();
    for i in 0..n {
        let (done, rest) = cols.split_at_mut(i);
        let col = &mut rest[0];
        for _pass in 0..2 {
            for q in done.iter() {
                let proj: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (c, qv) in col.iter_mut().zip(q) {
                    *c -= proj * qv;
                }
            }
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Internal("Gaussian matrix is numerically singular".into()));
        }
        col.iter_mut().for_each(|v| *v /= norm);
    }
    let mut data = vec![0.0; n * n];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            data[r * n + c] = *v;
        }
    }
    Ok(Rotation { n, data })
}

/// A benchmark objective together with its initialization protocol.
#[derive(Clone, Debug)]
pub struct BenchmarkProblem {
    id: FunctionId,
    n: usize,
    rotation: Option<Rotation>,
    rotation_seed: Option<u64>,
    pub target_f: f64,
    pub init_lower: f64,
    pub init_upper: f64,
    pub sigma0: f64,
    // per-coordinate constants for elli (weights) and diffpow (exponents)
    coeffs: Vec<f64>,
}

impl BenchmarkProblem {
    /// Separable (axis-aligned) problem with the standard protocol:
    /// target 1e-10, init box [-5, 5]ⁿ, σ⁰ = 3.
    pub fn new(kind: FunctionKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {n}")));
        }
        let denom = (n - 1) as f64;
        let coeffs = match kind {
            FunctionKind::Elli => (0..n)
                .map(|i| 10f64.powf(6.0 * i as f64 / denom))
                .collect(),
            FunctionKind::Diffpow => (0..n).map(|i| 2.0 + 4.0 * i as f64 / denom).collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            id: FunctionId::new(kind, false),
            n,
            rotation: None,
            rotation_seed: None,
            target_f: 1e-10,
            init_lower: -5.0,
            init_upper: 5.0,
            sigma0: 3.0,
            coeffs,
        })
    }

    /// Rotated variant `f(Rx)` with `R` from [`make_rotation`].
    pub fn rotated(kind: FunctionKind, n: usize, rotation_seed: u64) -> Result<Self> {
        let rotation = make_rotation(n, rotation_seed)?;
        Self::new(kind, n)?.with_rotation(rotation, rotation_seed)
    }

    pub fn with_rotation(mut self, rotation: Rotation, seed: u64) -> Result<Self> {
        if rotation.dim() != self.n {
            return Err(Error::invalid(format!(
                "rotation is {0}x{0}, problem dimension is {1}",
                rotation.dim(),
                self.n
            )));
        }
        self.rotation = Some(rotation);
        self.rotation_seed = Some(seed);
        self.id.rotated = true;
        Ok(self)
    }

    /// Builds the problem named by `id`; rotated ids require a rotation seed.
    pub fn from_id(id: FunctionId, n: usize, rotation_seed: Option<u64>) -> Result<Self> {
        if id.rotated {
            let seed = rotation_seed
                .ok_or_else(|| Error::invalid(format!("{id} needs a rotation seed")))?;
            Self::rotated(id.kind, n, seed)
        } else {
            Self::new(id.kind, n)
        }
    }

    pub fn id(&self) -> FunctionId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rotation(&self) -> Option<&Rotation> {
        self.rotation.as_ref()
    }

    pub fn rotation_seed(&self) -> Option<u64> {
        self.rotation_seed
    }

    pub fn with_target(mut self, target_f: f64) -> Result<Self> {
        if !(target_f > 0.0 && target_f.is_finite()) {
            return Err(Error::invalid(format!("target must be positive, got {target_f}")));
        }
        self.target_f = target_f;
        Ok(self)
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::invalid(format!("sigma0 must be positive, got {sigma0}")));
        }
        self.sigma0 = sigma0;
        Ok(self)
    }

    pub fn with_init_box(mut self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::invalid(format!("bad init box [{lower}, {upper}]")));
        }
        self.init_lower = lower;
        self.init_upper = upper;
        Ok(self)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "point has {} components, problem dimension is {}",
                x.len(),
                self.n
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("component {i} is not finite ({})", x[i])));
        }
        Ok(match &self.rotation {
            Some(r) => {
                let mut y = vec![0.0; self.n];
                r.apply(x, &mut y);
                self.evaluate_separable(&y)
            }
            None => self.evaluate_separable(x),
        })
    }

    /// The axis-aligned function, ignoring any rotation.
    pub fn evaluate_separable(&self, x: &[f64]) -> f64 {
        match self.id.kind {
            FunctionKind::Sphere => x.iter().map(|v| v * v).sum(),
            FunctionKind::Elli => x.iter().zip(&self.coeffs).map(|(v, w)| w * v * v).sum(),
            FunctionKind::Rosen => x
                .windows(2)
                .map(|w| {
                    let a = w[0] * w[0] - w[1];
                    let b = w[0] - 1.0;
                    100.0 * a * a + b * b
                })
                .sum(),
            FunctionKind::Discus => 1e6 * x[0] * x[0] + x[1..].iter().map(|v| v * v).sum::<f64>(),
            FunctionKind::Cigar => x[0] * x[0] + 1e6 * x[1..].iter().map(|v| v * v).sum::<f64>(),
            FunctionKind::Diffpow => x.iter().zip(&self.coeffs).map(|(v, p)| v.abs().powf(*p)).sum(),
            FunctionKind::Nesterov => {
                0.25 * (x[0] - 1.0).abs()
                    + x
                        .windows(2)
                        .map(|w| (w[1] - 2.0 * w[0].abs() + 1.0).abs())
                        .sum::<f64>()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(kind: FunctionKind, x: &[f64]) -> f64 {
        BenchmarkProblem::new(kind, x.len()).unwrap().evaluate(x).unwrap()
    }

    #[test]
    fn worked_values() {
        assert_eq!(eval(FunctionKind::Sphere, &[1.0; 4]), 4.0);
        assert_eq!(eval(FunctionKind::Rosen, &[1.0; 3]), 0.0);
        assert_eq!(eval(FunctionKind::Nesterov, &[1.0; 5]), 0.0);
        assert_eq!(eval(FunctionKind::Elli, &[1.0, 1.0]), 1.0 + 1e6);
        assert_eq!(eval(FunctionKind::Rosen, &[0.0; 4]), 3.0);
    }

    #[test]
    fn minimizers_evaluate_to_zero() {
        for kind in FunctionKind::ALL {
            for n in [2, 3, 10, 33] {
                let p = BenchmarkProblem::new(kind, n).unwrap();
                assert_eq!(p.evaluate(&kind.minimizer(n)).unwrap(), 0.0, "{kind:?} n={n}");
            }
        }
    }

    #[test]
    fn ill_conditioned_weights() {
        // discus weights the first coordinate, cigar all the others
        let mut x = vec![0.0; 5];
        x[0] = 1.0;
        assert_eq!(eval(FunctionKind::Discus, &x), 1e6);
        assert_eq!(eval(FunctionKind::Cigar, &x), 1.0);
        // diffpow exponents run from 2 to 6
        let p = BenchmarkProblem::new(FunctionKind::Diffpow, 3).unwrap();
        assert_eq!(p.evaluate(&[2.0, 0.0, 0.0]).unwrap(), 4.0);
        assert_eq!(p.evaluate(&[0.0, 0.0, 2.0]).unwrap(), 64.0);
    }

    #[test]
    fn nesterov_hand_value() {
        // 1/4|0-1| + |0 - 0 + 1| + |2 - 0 + 1|
        assert_eq!(eval(FunctionKind::Nesterov, &[0.0, 0.0, 2.0]), 0.25 + 1.0 + 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        let p = BenchmarkProblem::new(FunctionKind::Sphere, 3).unwrap();
        assert!(matches!(p.evaluate(&[1.0, 2.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            p.evaluate(&[1.0, f64::NAN, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(p.evaluate(&[1.0, f64::INFINITY, 0.0]).is_err());
        assert!(BenchmarkProblem::new(FunctionKind::Sphere, 1).is_err());
    }

    #[test]
    fn ids_round_trip() {
        for kind in FunctionKind::ALL {
            for rotated in [false, true] {
                let id = FunctionId::new(kind, rotated);
                assert_eq!(id.to_string().parse::<FunctionId>().unwrap(), id);
            }
        }
        assert_eq!("rot_elli".parse::<FunctionId>().unwrap().to_string(), "rot_elli");
        assert!("ellipse".parse::<FunctionId>().is_err());
    }

    #[test]
    fn rotation_is_orthogonal_and_deterministic() {
        let r = make_rotation(64, 7).unwrap();
        assert!(r.orthogonality_error() <= 1e-12);
        assert_eq!(r, make_rotation(64, 7).unwrap());
        assert_ne!(r, make_rotation(64, 8).unwrap());

        let r2 = make_rotation(2, 123).unwrap();
        let det = r2.get(0, 0) * r2.get(1, 1) - r2.get(0, 1) * r2.get(1, 0);
        assert!((det.abs() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rotation_cap_is_enforced() {
        let err = make_rotation_with_cap(10, 1, 8).unwrap_err();
        assert!(err.to_string().contains("cap is 8"), "{err}");
        assert!(make_rotation(1, 0).is_err());
    }

    #[test]
    fn rotated_equals_separable_at_rx() {
        let n = 16;
        for kind in FunctionKind::ALL {
            let p = BenchmarkProblem::rotated(kind, n, 99).unwrap();
            let mut src = RandomSource::new(4);
            let x: Vec<f64> = (0..n).map(|_| src.uniform(-5.0, 5.0)).collect();
            let mut rx = vec![0.0; n];
            p.rotation().unwrap().apply(&x, &mut rx);
            let flat = BenchmarkProblem::new(kind, n).unwrap();
            assert_eq!(
                p.evaluate(&x).unwrap().to_bits(),
                flat.evaluate(&rx).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn from_id_requires_seed_for_rotated() {
        let id: FunctionId = "rot_cigar".parse().unwrap();
        assert!(BenchmarkProblem::from_id(id, 8, None).is_err());
        let p = BenchmarkProblem::from_id(id, 8, Some(1)).unwrap();
        assert_eq!(p.id().to_string(), "rot_cigar");
        assert_eq!(p.rotation_seed(), Some(1));
    }
}
