use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::PairedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    #[default]
    Shuffled,
    Prefix,
}

/// How to carve `n_fit` rows out of the paired data for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_fit: usize,
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl SplitSpec {
    pub fn shuffled(n_fit: usize, seed: u64) -> Self {
        Self {
            n_fit,
            seed,
            strategy: SplitStrategy::Shuffled,
        }
    }

    pub fn prefix(n_fit: usize) -> Self {
        Self {
            n_fit,
            seed: 0,
            strategy: SplitStrategy::Prefix,
        }
    }

    /// Row indices of the fit and estimation parts, each in ascending order.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if self.n_fit > n {
            return Err(Error::InvalidSplit(format!(
                "n_fit = {} exceeds the {n} paired samples",
                self.n_fit
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        if self.strategy == SplitStrategy::Shuffled {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        }
        let mut fit = order[..self.n_fit].to_vec();
        let mut est = order[self.n_fit..].to_vec();
        fit.sort_unstable();
        est.sort_unstable();
        Ok((fit, est))
    }
}

/// Splits paired data into disjoint fit and estimation parts covering it.
/// Both parts keep the original row order.
pub fn split_paired(paired: &PairedDataset, spec: &SplitSpec) -> Result<(PairedDataset, PairedDataset)> {
    let (fit, est) = spec.indices(paired.len())?;
    Ok((paired.select(&fit), paired.select(&est)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten() -> PairedDataset {
        let f: Vec<f64> = (0..10).map(f64::from).collect();
        PairedDataset::from_columns(f.clone(), f, 1).unwrap()
    }

    #[test]
    fn zero_fit() {
        let (fit, est) = split_paired(&ten(), &SplitSpec::shuffled(0, 1)).unwrap();
        assert!(fit.is_empty());
        assert_eq!(est, ten());
    }

    #[test]
    fn all_fit() {
        let (fit, est) = split_paired(&ten(), &SplitSpec::shuffled(10, 1)).unwrap();
        assert_eq!(fit.len(), 10);
        assert!(est.is_empty());
    }

    #[test]
    fn too_many() {
        assert!(matches!(
            split_paired(&ten(), &SplitSpec::shuffled(11, 1)),
            Err(Error::InvalidSplit(_))
        ));
    }

    #[test]
    fn deterministic_and_seeded() {
        let a = split_paired(&ten(), &SplitSpec::shuffled(4, 9)).unwrap();
        let b = split_paired(&ten(), &SplitSpec::shuffled(4, 9)).unwrap();
        assert_eq!(a, b);
        let idx: Vec<_> = (0..20).map(|s| SplitSpec::shuffled(4, s).indices(10).unwrap().0).collect();
        assert!(idx.iter().any(|i| i != &idx[0]));
    }

    #[test]
    fn prefix_takes_leading_rows() {
        let (fit, est) = split_paired(&ten(), &SplitSpec::prefix(3)).unwrap();
        assert_eq!(fit.f(), &[0.0, 1.0, 2.0]);
        assert_eq!(est.f()[0], 3.0);
    }
}
