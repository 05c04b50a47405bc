//! Built-in stand-ins for a learned depth predictor, derived from a
//! reference depth map.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merge::bin_center;
use crate::types::{DepthMap, ModulationConfig, PixelFlag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OraclePredictor {
    /// The reference itself.
    Exact,
    /// Centre of the reference pixel's ambiguity cycle.
    Binned,
    /// Reference plus zero-mean Gaussian noise of the given σ (meters).
    Noisy { sigma: f64 },
}

impl OraclePredictor {
    /// Predicted depth map. Reference pixels that are not valid produce
    /// invalid predictions.
    pub fn predict(&self, reference: &DepthMap, config: &ModulationConfig, seed: u64) -> Result<DepthMap> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d_u = config.unambiguous_range();
        let mut flags = reference.flags().to_vec();
        let depth = reference
            .depths()
            .iter()
            .zip(flags.iter_mut())
            .map(|(d, f)| {
                if !f.is_valid() {
                    *f = PixelFlag::Invalid;
                    return 0.0;
                }
                match *self {
                    OraclePredictor::Exact => *d,
                    OraclePredictor::Binned => bin_center((d / d_u).floor() as u32, config),
                    OraclePredictor::Noisy { sigma } => {
                        let n: f64 = rng.sample(rand_distr::StandardNormal);
                        (d + sigma * n).max(0.0)
                    }
                }
            })
            .collect();
        DepthMap::new(reference.width(), reference.height(), depth, flags)
    }
}

impl FromStr for OraclePredictor {
    type Err = Error;

    /// Parses `exact`, `binned` or `noisy:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OraclePredictor::Exact),
            "binned" => Ok(OraclePredictor::Binned),
            _ => {
                let sigma = s
                    .strip_prefix("noisy:")
                    .ok_or_else(|| Error::Domain(format!("unknown oracle predictor '{s}'")))?;
                let sigma: f64 = sigma
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad noise sigma '{sigma}'")))?;
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::Domain(format!("noise sigma must be non-negative, got {sigma}")));
                }
                Ok(OraclePredictor::Noisy { sigma })
            }
        }
    }
}

impl fmt::Display for OraclePredictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OraclePredictor::Exact => f.write_str("exact"),
            OraclePredictor::Binned => f.write_str("binned"),
            OraclePredictor::Noisy { sigma } => write!(f, "noisy:{sigma}"),
        }
    }
}
