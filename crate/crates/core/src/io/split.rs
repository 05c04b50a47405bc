//! Seeded train/val/test assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{Manifest, Split};
use crate::error::{Error, Result};

const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (all.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "split ratios must be non-negative and sum to 1, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

/// Frame counts `(train, val, test)` for `n` frames.
///
/// Train takes the ceiling of its share, val the floor of its share and test
/// whatever is left.
pub fn split_counts(n: usize, ratios: &SplitRatios) -> Result<(usize, usize, usize)> {
    ratios.validate()?;
    let nf = n as f64;
    let train = ((nf * ratios.train - ROUNDING_SLACK).ceil().max(0.0) as usize).min(n);
    let val = ((nf * ratios.val + ROUNDING_SLACK).floor() as usize).min(n - train);
    Ok((train, val, n - train - val))
}

/// Split label per frame index: a seeded permutation is cut into the three
/// blocks of [`split_counts`].
pub fn split_assignment(n: usize, ratios: &SplitRatios, seed: u64) -> Result<Vec<Split>> {
    let (train, val, _) = split_counts(n, ratios)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(out)
}

pub fn split_dataset(mut manifest: Manifest, ratios: &SplitRatios, seed: u64) -> Result<Manifest> {
    let labels = split_assignment(manifest.frames.len(), ratios, seed)?;
    for (f, s) in manifest.frames.iter_mut().zip(labels) {
        f.split = s;
    }
    Ok(manifest)
}
