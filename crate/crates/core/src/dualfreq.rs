//! Dual-frequency consistency check.
//!
//! Each pixel has one wrapped reading per carrier. The unwrapper searches
//! every pair of cycle indices inside the combined unambiguous range and keeps
//! the pair whose unwrapped depths agree best. The output is built from the
//! high-frequency reading, which carries the finer phase resolution.

use crate::error::{check_shape, Error, Result};
use crate::sim::NoiseModel;
use crate::types::{DepthMap, ModulationConfig, PixelFlag};

/// Residual floor used when the propagated noise is zero.
pub const MIN_TOLERANCE: f64 = 0.01;

/// Reference surface used to derive the default tolerance.
const REFERENCE_DEPTH: f64 = 5.0;
const REFERENCE_REFLECTIVITY: f64 = 0.5;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Range over which the two carriers jointly repeat, c / (2·gcd(f1, f2)).
/// Frequencies are rounded to whole hertz before taking the gcd.
pub fn combined_unambiguous_range(high: &ModulationConfig, low: &ModulationConfig) -> Result<f64> {
    let to_hz = |f: f64| -> Result<u64> {
        let hz = f.round();
        if hz < 1.0 || hz > u64::MAX as f64 {
            return Err(Error::Domain(format!("frequency {f} not representable in whole hertz")));
        }
        Ok(hz as u64)
    };
    let g = gcd(to_hz(high.frequency())?, to_hz(low.frequency())?);
    Ok(high.speed_of_light() / (2.0 * g as f64))
}

/// Search limits and acceptance tolerance for [`consistency_unwrap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnwrapParams {
    /// Largest admissible residual between the two unwrapped candidates.
    pub tolerance: f64,
    /// Depth range searched; defaults to the combined unambiguous range.
    pub max_range: Option<f64>,
}

impl UnwrapParams {
    pub fn with_tolerance(tolerance: f64) -> Self {
        UnwrapParams {
            tolerance,
            max_range: None,
        }
    }

    /// Three times the 1-σ depth noise of the low-frequency map for a
    /// reference surface (0.5 reflectivity at 5 m), floored at [`MIN_TOLERANCE`].
    pub fn from_noise(noise: &NoiseModel, low: &ModulationConfig) -> Self {
        UnwrapParams::from_noise_at(noise, low, REFERENCE_DEPTH, REFERENCE_REFLECTIVITY)
    }

    /// As [`UnwrapParams::from_noise`] for a surface at `depth` with
    /// `reflectivity`.
    pub fn from_noise_at(noise: &NoiseModel, low: &ModulationConfig, depth: f64, reflectivity: f64) -> Self {
        let sigma = noise.depth_sigma(depth, reflectivity, low, 4);
        UnwrapParams::with_tolerance((3.0 * sigma).max(MIN_TOLERANCE))
    }
}

/// Cycle indices chosen for one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleChoice {
    pub k_high: u32,
    pub k_low: u32,
    pub residual: f64,
}

/// Brute-force search over (k_high, k_low). Ties keep the smallest k_high,
/// then the smallest k_low.
pub fn best_cycles(m1: f64, m2: f64, d_u1: f64, d_u2: f64, k1_count: u32, k2_count: u32) -> CycleChoice {
    let mut best = CycleChoice {
        k_high: 0,
        k_low: 0,
        residual: f64::INFINITY,
    };
    for k1 in 0..k1_count {
        let c1 = m1 + f64::from(k1) * d_u1;
        for k2 in 0..k2_count {
            let r = (c1 - (m2 + f64::from(k2) * d_u2)).abs();
            if r < best.residual {
                best = CycleChoice {
                    k_high: k1,
                    k_low: k2,
                    residual: r,
                };
            }
        }
    }
    best
}

/// Combines a high-frequency map `m1` and a low-frequency map `m2`.
///
/// Saturated readings in either map yield a saturated pixel, invalid readings
/// an invalid one, and pixels whose best residual exceeds the tolerance are
/// flagged invalid.
pub fn consistency_unwrap(
    m1: &DepthMap,
    m2: &DepthMap,
    high: &ModulationConfig,
    low: &ModulationConfig,
    params: &UnwrapParams,
) -> Result<DepthMap> {
    if high.frequency() <= low.frequency() {
        return Err(Error::Contract(format!(
            "high frequency {} must exceed low frequency {}",
            high.frequency(),
            low.frequency()
        )));
    }
    check_shape(m1.shape(), m2.shape())?;
    if !(params.tolerance >= 0.0) {
        return Err(Error::Domain("tolerance must be non-negative".into()));
    }
    let range = match params.max_range {
        Some(r) if r > 0.0 => r,
        Some(r) => return Err(Error::Domain(format!("search range {r} must be positive"))),
        None => combined_unambiguous_range(high, low)?,
    };
    let (d_u1, d_u2) = (high.unambiguous_range(), low.unambiguous_range());
    let k1_count = cycle_count(range, d_u1);
    let k2_count = cycle_count(range, d_u2);

    let n = m1.len();
    let mut depth = vec![0.0; n];
    let mut flags = vec![PixelFlag::Invalid; n];
    for i in 0..n {
        let (f1, f2) = (m1.flags()[i], m2.flags()[i]);
        let choice = best_cycles(m1.depths()[i], m2.depths()[i], d_u1, d_u2, k1_count, k2_count);
        if f1 == PixelFlag::Invalid || f2 == PixelFlag::Invalid {
            continue;
        }
        if f1 == PixelFlag::Saturated || f2 == PixelFlag::Saturated {
            flags[i] = PixelFlag::Saturated;
            depth[i] = m1.depths()[i] + f64::from(choice.k_high) * d_u1;
            continue;
        }
        if choice.residual <= params.tolerance {
            depth[i] = m1.depths()[i] + f64::from(choice.k_high) * d_u1;
            flags[i] = PixelFlag::Valid;
        }
    }
    DepthMap::new(m1.width(), m1.height(), depth, flags)
}

fn cycle_count(range: f64, d_u: f64) -> u32 {
    // A hair below the exact ratio keeps 75 / 6.25 at 12 cycles, not 13.
    ((range / d_u) - 1e-9).ceil().max(1.0) as u32
}
