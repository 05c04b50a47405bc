//! Single-frequency depth correction.
//!
//! A coarse full-range estimate selects the ambiguity cycle and the wrapped
//! sensor reading supplies the position inside that cycle:
//!
//! * regression merge: `d_f = ⌊d_p / d_u⌋·d_u + d_m1` when `d_m1 < d_sat`,
//!   otherwise `d_f = d_p`;
//! * segmentation merge: `d_f = d_c·d_u + d_m1` when `d_m1 < d_sat`,
//!   otherwise `d_f = d_c·d_u`.
//!
//! Pixels flagged saturated by the sensor take the saturated branch as well.

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::types::{DepthBinMap, DepthMap, ModulationConfig, PixelFlag};

/// Corrected map plus bookkeeping on how each pixel was resolved.
///
/// Every pixel lands either in `cycle_histogram` (merged, possibly through
/// the saturated branch) or in `invalid_pixel_count` (no usable ambiguous
/// reading or no usable prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct MergeReport {
    pub corrected: DepthMap,
    pub cycle_histogram: Vec<u64>,
    pub saturated_pixel_count: u64,
    pub invalid_pixel_count: u64,
    /// Pixels with an invalid ambiguous reading that were filled from the
    /// prediction alone. A subset of `invalid_pixel_count`.
    pub fallback_pixel_count: u64,
}

/// Serializable part of a [`MergeReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeSummary {
    pub cycle_histogram: Vec<u64>,
    pub saturated_pixel_count: u64,
    pub invalid_pixel_count: u64,
    pub fallback_pixel_count: u64,
}

impl MergeReport {
    pub fn summary(&self) -> MergeSummary {
        MergeSummary {
            cycle_histogram: self.cycle_histogram.clone(),
            saturated_pixel_count: self.saturated_pixel_count,
            invalid_pixel_count: self.invalid_pixel_count,
            fallback_pixel_count: self.fallback_pixel_count,
        }
    }
}

enum Resolution {
    Merged { depth: f64, cycle: u64 },
    Saturated { depth: f64, cycle: u64 },
    Fallback { depth: f64 },
    Invalid,
}

struct Accumulator {
    depth: Vec<f64>,
    flags: Vec<PixelFlag>,
    histogram: Vec<u64>,
    saturated: u64,
    invalid: u64,
    fallback: u64,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            depth: Vec::with_capacity(n),
            flags: Vec::with_capacity(n),
            histogram: Vec::new(),
            saturated: 0,
            invalid: 0,
            fallback: 0,
        }
    }

    fn bump(&mut self, cycle: u64) {
        let c = cycle as usize;
        if self.histogram.len() <= c {
            self.histogram.resize(c + 1, 0);
        }
        self.histogram[c] += 1;
    }

    fn push(&mut self, r: Resolution) {
        let (d, f) = match r {
            Resolution::Merged { depth, cycle } => {
                self.bump(cycle);
                (depth, PixelFlag::Valid)
            }
            Resolution::Saturated { depth, cycle } => {
                self.bump(cycle);
                self.saturated += 1;
                (depth, PixelFlag::Valid)
            }
            Resolution::Fallback { depth } => {
                self.invalid += 1;
                self.fallback += 1;
                (depth, PixelFlag::Valid)
            }
            Resolution::Invalid => {
                self.invalid += 1;
                (0.0, PixelFlag::Invalid)
            }
        };
        self.depth.push(d);
        self.flags.push(f);
    }

    fn finish(self, width: usize, height: usize) -> Result<MergeReport> {
        Ok(MergeReport {
            corrected: DepthMap::new(width, height, self.depth, self.flags)?,
            cycle_histogram: self.histogram,
            saturated_pixel_count: self.saturated,
            invalid_pixel_count: self.invalid,
            fallback_pixel_count: self.fallback,
        })
    }
}

fn check_ambiguous(ambiguous: &DepthMap, d_u: f64) -> Result<()> {
    for (i, (d, f)) in ambiguous.depths().iter().zip(ambiguous.flags()).enumerate() {
        if f.is_valid() && *d >= d_u {
            return Err(Error::Contract(format!(
                "ambiguous pixel {i} holds {d} m, outside [0, {d_u})"
            )));
        }
    }
    Ok(())
}

/// True when the ambiguous reading must not be trusted for the fine part.
fn takes_saturated_branch(m1: f64, flag: PixelFlag, d_sat: f64) -> bool {
    flag == PixelFlag::Saturated || m1 >= d_sat
}

fn cycle_of(depth: f64, d_u: f64) -> u64 {
    (depth / d_u).floor().max(0.0) as u64
}

/// Regression merge of a predicted full-range map with the ambiguous map.
pub fn regression_merge(
    predicted: &DepthMap,
    ambiguous: &DepthMap,
    config: &ModulationConfig,
) -> Result<MergeReport> {
    check_shape(ambiguous.shape(), predicted.shape())?;
    let (d_u, d_sat) = (config.unambiguous_range(), config.saturation_threshold());
    check_ambiguous(ambiguous, d_u)?;
    let mut acc = Accumulator::new(predicted.len());
    for i in 0..predicted.len() {
        let (d_p, pf) = (predicted.depths()[i], predicted.flags()[i]);
        let (m1, af) = (ambiguous.depths()[i], ambiguous.flags()[i]);
        let r = if !pf.is_valid() {
            Resolution::Invalid
        } else if af == PixelFlag::Invalid {
            Resolution::Fallback { depth: d_p }
        } else if takes_saturated_branch(m1, af, d_sat) {
            Resolution::Saturated {
                depth: d_p,
                cycle: cycle_of(d_p, d_u),
            }
        } else {
            let cycle = (d_p / d_u).floor();
            Resolution::Merged {
                depth: cycle * d_u + m1,
                cycle: cycle as u64,
            }
        };
        acc.push(r);
    }
    acc.finish(predicted.width(), predicted.height())
}

/// Bins depth into ambiguity cycles: `⌊d / d_u⌋`, clamped to `num_bins − 1`.
pub fn bin_depth(depth: &DepthMap, config: &ModulationConfig, num_bins: u32) -> Result<DepthBinMap> {
    if num_bins == 0 {
        return Err(Error::Domain("num_bins must be at least 1".into()));
    }
    let d_u = config.unambiguous_range();
    let bins = depth
        .depths()
        .iter()
        .zip(depth.flags())
        .map(|(d, f)| {
            if *f == PixelFlag::Invalid || !d.is_finite() {
                0
            } else {
                cycle_of(*d, d_u).min(u64::from(num_bins - 1)) as u32
            }
        })
        .collect();
    DepthBinMap::new(depth.width(), depth.height(), bins, num_bins, depth.flags().to_vec())
}

/// Depth of a bin's centre, used to turn a class map into a coarse depth map.
pub fn bin_center(bin: u32, config: &ModulationConfig) -> f64 {
    (f64::from(bin) + 0.5) * config.unambiguous_range()
}

/// Segmentation merge of a predicted cycle map with the ambiguous map.
pub fn segmentation_merge(
    bins: &DepthBinMap,
    ambiguous: &DepthMap,
    config: &ModulationConfig,
) -> Result<MergeReport> {
    check_shape(ambiguous.shape(), bins.shape())?;
    let (d_u, d_sat) = (config.unambiguous_range(), config.saturation_threshold());
    check_ambiguous(ambiguous, d_u)?;
    let n = bins.bins().len();
    let mut acc = Accumulator::new(n);
    for i in 0..n {
        let (bin, bf) = (bins.bins()[i], bins.flags()[i]);
        let (m1, af) = (ambiguous.depths()[i], ambiguous.flags()[i]);
        let floor = f64::from(bin) * d_u;
        let r = if !bf.is_valid() {
            Resolution::Invalid
        } else if af == PixelFlag::Invalid {
            Resolution::Fallback { depth: floor }
        } else if takes_saturated_branch(m1, af, d_sat) {
            Resolution::Saturated {
                depth: floor,
                cycle: u64::from(bin),
            }
        } else {
            Resolution::Merged {
                depth: floor + m1,
                cycle: u64::from(bin),
            }
        };
        acc.push(r);
    }
    acc.finish(bins.width(), bins.height())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d_sat: Option<f64>) -> ModulationConfig {
        let c = ModulationConfig::new(24e6).unwrap();
        match d_sat {
            Some(s) => c.with_saturation_threshold(s).unwrap(),
            None => c,
        }
    }

    fn one(d: f64) -> DepthMap {
        DepthMap::filled(1, 1, d).unwrap()
    }

    fn bin1(b: u32) -> DepthBinMap {
        DepthBinMap::new(1, 1, vec![b], 4, vec![PixelFlag::Valid]).unwrap()
    }

    #[test]
    fn regression_examples() {
        let c = cfg(Some(6.125));
        let r = regression_merge(&one(13.0), &one(0.6), &c).unwrap();
        assert!((r.corrected.depths()[0] - 13.1).abs() < 1e-12);
        assert_eq!(r.cycle_histogram, vec![0, 0, 1]);
        let r = regression_merge(&one(3.0), &one(3.05), &c).unwrap();
        assert_eq!(r.corrected.depths()[0], 3.05);
        let r = regression_merge(&one(13.0), &one(6.2), &c).unwrap();
        assert_eq!(r.corrected.depths()[0], 13.0);
        assert_eq!(r.saturated_pixel_count, 1);
    }

    #[test]
    fn bin_examples() {
        let c = cfg(None);
        assert_eq!(bin_depth(&one(13.1), &c, 4).unwrap().bins()[0], 2);
        assert_eq!(bin_depth(&one(0.0), &c, 4).unwrap().bins()[0], 0);
        assert_eq!(bin_depth(&one(40.0), &c, 4).unwrap().bins()[0], 3);
        assert!(bin_depth(&one(1.0), &c, 0).is_err());
    }

    #[test]
    fn segmentation_examples() {
        let c = cfg(Some(6.125));
        let r = segmentation_merge(&bin1(2), &one(0.6), &c).unwrap();
        assert!((r.corrected.depths()[0] - 13.1).abs() < 1e-12);
        assert_eq!(segmentation_merge(&bin1(0), &one(3.05), &c).unwrap().corrected.depths()[0], 3.05);
        let r = segmentation_merge(&bin1(1), &one(6.2), &c).unwrap();
        assert_eq!(r.corrected.depths()[0], 6.25);
        assert_eq!(r.saturated_pixel_count, 1);
    }

    #[test]
    fn sensor_saturation_flag_takes_saturated_branch() {
        let c = cfg(None);
        let sat = DepthMap::new(1, 1, vec![1.0], vec![PixelFlag::Saturated]).unwrap();
        assert_eq!(regression_merge(&one(9.0), &sat, &c).unwrap().corrected.depths()[0], 9.0);
    }

    #[test]
    fn invalid_inputs_and_accounting() {
        let c = cfg(None);
        let amb = DepthMap::new(
            2,
            2,
            vec![1.0, 0.0, 2.0, 6.2],
            vec![PixelFlag::Valid, PixelFlag::Invalid, PixelFlag::Valid, PixelFlag::Valid],
        )
        .unwrap();
        let pred = DepthMap::new(
            2,
            2,
            vec![7.0, 8.0, 0.0, 20.0],
            vec![PixelFlag::Valid, PixelFlag::Valid, PixelFlag::Invalid, PixelFlag::Valid],
        )
        .unwrap();
        let r = regression_merge(&pred, &amb, &c).unwrap();
        assert_eq!(r.corrected.flags(), &[PixelFlag::Valid, PixelFlag::Valid, PixelFlag::Invalid, PixelFlag::Valid]);
        assert_eq!(r.corrected.depths()[1], 8.0);
        assert_eq!(r.fallback_pixel_count, 1);
        assert_eq!(r.invalid_pixel_count, 2);
        assert_eq!(r.saturated_pixel_count, 1);
        let total: u64 = r.cycle_histogram.iter().sum();
        assert_eq!(total + r.invalid_pixel_count, 4);
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let c = cfg(None);
        let two = DepthMap::filled(2, 1, 1.0).unwrap();
        assert!(matches!(regression_merge(&two, &one(1.0), &c), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(segmentation_merge(&bin1(0), &two, &c), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn ambiguous_outside_cycle_rejected() {
        assert!(regression_merge(&one(1.0), &one(6.25), &cfg(None)).is_err());
    }
}
