use serde::{Deserialize, Serialize};

/// What a candidate was generated from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum PreImage {
    /// Rademacher signs.
    Signs(Vec<i8>),
    /// Standard Gaussian draws.
    Gaussian(Vec<f64>),
    /// Mirror image `2m − x` of the preceding candidate.
    Mirror,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub pre_image: PreImage,
    /// Number of stored direction vectors used to sample this candidate.
    pub m_star: Option<usize>,
}

/// One generation of unevaluated candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation: u64,
    pub candidates: Vec<Candidate>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = &[f64]> {
        self.candidates.iter().map(|c| c.x.as_slice())
    }
}

/// Candidate indices sorted by ascending fitness, ties by index.
pub(crate) fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    idx
}

/// Best-so-far solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestSoFar {
    pub x: Vec<f64>,
    pub f: f64,
}

impl BestSoFar {
    pub(crate) fn offer(slot: &mut Option<BestSoFar>, x: &[f64], f: f64) -> bool {
        match slot {
            Some(b) if b.f <= f => false,
            Some(b) => {
                b.x.copy_from_slice(x);
                b.f = f;
                true
            }
            None => {
                *slot = Some(BestSoFar { x: x.to_vec(), f });
                true
            }
        }
    }
}

/// Common ask/tell surface of the optimizers.
pub trait AskTell {
    fn dim(&self) -> usize;
    fn lambda(&self) -> usize;
    /// The pending generation; repeated calls without a `tell` return the same one.
    fn ask(&mut self) -> &Population;
    /// Consumes the pending generation with one fitness value per candidate.
    fn tell(&mut self, fitness: &[f64]) -> crate::Result<()>;
    fn mean(&self) -> &[f64];
    fn sigma(&self) -> f64;
    fn generation(&self) -> u64;
    fn evaluations(&self) -> u64;
    fn best(&self) -> Option<&BestSoFar>;
    fn pending(&self) -> Option<&Population>;
}

pub(crate) fn check_fitness(fitness: &[f64], lambda: usize) -> crate::Result<()> {
    use crate::error::Error;
    if fitness.len() != lambda {
        return Err(Error::invalid(format!(
            "expected {lambda} fitness values, got {}",
            fitness.len()
        )));
    }
    if let Some(i) = fitness.iter().position(|f| !f.is_finite()) {
        return Err(Error::invalid(format!("fitness {i} is not finite ({})", fitness[i])));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_is_stable() {
        assert_eq!(ranking(&[3.0, 1.0, 3.0, 0.5, 1.0]), vec![3, 1, 4, 0, 2]);
    }

    #[test]
    fn best_only_improves() {
        let mut b = None;
        assert!(BestSoFar::offer(&mut b, &[1.0], 5.0));
        assert!(!BestSoFar::offer(&mut b, &[2.0], 5.0));
        assert!(BestSoFar::offer(&mut b, &[3.0], 4.0));
        assert_eq!(b.unwrap(), BestSoFar { x: vec![3.0], f: 4.0 });
    }
}
