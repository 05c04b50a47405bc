//! Domain types shared by every stage of the pipeline.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards (fields are private, accessors return borrows), so they can be
//! shared freely across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light used for range conversions. Fixed at 3e8 so that a 24 MHz
/// carrier gives an unambiguous range of exactly 6.25 m.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Default saturation threshold as a fraction of the unambiguous range.
pub const DEFAULT_SATURATION_RATIO: f64 = 0.98;

/// Largest value representable in a 12-bit gray image.
pub const GRAY_MAX: u16 = 4095;

/// Modulation setup for one carrier frequency.
///
/// The unambiguous range is always derived from the frequency and the speed of
/// light; it is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModulationConfig", into = "RawModulationConfig")]
pub struct ModulationConfig {
    frequency: f64,
    speed_of_light: f64,
    saturation_threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModulationConfig {
    frequency_hz: f64,
    speed_of_light_m_per_s: f64,
    saturation_threshold_m: f64,
}

impl TryFrom<RawModulationConfig> for ModulationConfig {
    type Error = Error;

    fn try_from(raw: RawModulationConfig) -> Result<Self> {
        ModulationConfig::new(raw.frequency_hz)?
            .with_speed_of_light(raw.speed_of_light_m_per_s)?
            .with_saturation_threshold(raw.saturation_threshold_m)
    }
}

impl From<ModulationConfig> for RawModulationConfig {
    fn from(c: ModulationConfig) -> Self {
        RawModulationConfig {
            frequency_hz: c.frequency,
            speed_of_light_m_per_s: c.speed_of_light,
            saturation_threshold_m: c.saturation_threshold,
        }
    }
}

impl ModulationConfig {
    /// Config at `frequency` Hz with c = 3e8 m/s and d_sat = 0.98·d_u.
    pub fn new(frequency: f64) -> Result<Self> {
        let d_u = unambiguous_range_for(frequency, SPEED_OF_LIGHT)?;
        Ok(ModulationConfig {
            frequency,
            speed_of_light: SPEED_OF_LIGHT,
            saturation_threshold: DEFAULT_SATURATION_RATIO * d_u,
        })
    }

    /// Replaces the speed of light. The saturation threshold is reset to the
    /// default fraction of the new unambiguous range.
    pub fn with_speed_of_light(self, speed_of_light: f64) -> Result<Self> {
        if !(speed_of_light.is_finite() && speed_of_light > 0.0) {
            return Err(Error::Domain(format!(
                "speed of light must be positive and finite, got {speed_of_light}"
            )));
        }
        let d_u = unambiguous_range_for(self.frequency, speed_of_light)?;
        Ok(ModulationConfig {
            speed_of_light,
            saturation_threshold: DEFAULT_SATURATION_RATIO * d_u,
            ..self
        })
    }

    /// Sets d_sat in meters; must satisfy 0 < d_sat <= d_u.
    pub fn with_saturation_threshold(self, d_sat: f64) -> Result<Self> {
        let d_u = self.unambiguous_range();
        if !(d_sat.is_finite() && d_sat > 0.0 && d_sat <= d_u) {
            return Err(Error::Domain(format!(
                "saturation threshold must lie in (0, {d_u}], got {d_sat}"
            )));
        }
        Ok(ModulationConfig {
            saturation_threshold: d_sat,
            ..self
        })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    /// d_u = c / (2 f).
    pub fn unambiguous_range(&self) -> f64 {
        self.speed_of_light / (2.0 * self.frequency)
    }

    pub fn saturation_threshold(&self) -> f64 {
        self.saturation_threshold
    }
}

/// Unambiguous range of a carrier, `c / (2 f)`.
pub fn unambiguous_range(config: &ModulationConfig) -> f64 {
    config.unambiguous_range()
}

/// Unambiguous range for a raw frequency; rejects non-positive input.
pub fn unambiguous_range_for(frequency: f64, speed_of_light: f64) -> Result<f64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::Domain(format!(
            "modulation frequency must be positive and finite, got {frequency}"
        )));
    }
    Ok(speed_of_light / (2.0 * frequency))
}

/// Per-pixel validity. The numeric codes are the on-disk flag plane values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[repr(u8)]
pub enum PixelFlag {
    #[default]
    Valid = 0,
    Invalid = 1,
    Saturated = 2,
}

impl PixelFlag {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PixelFlag::Valid),
            1 => Some(PixelFlag::Invalid),
            2 => Some(PixelFlag::Saturated),
            _ => None,
        }
    }

    pub fn is_valid(self) -> bool {
        self == PixelFlag::Valid
    }
}

/// Metric depth per pixel plus a validity flag per pixel.
///
/// Valid pixels always hold finite, non-negative depth. Saturated and invalid
/// pixels may hold any value; consumers must check the flag.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    flags: Vec<PixelFlag>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f64>, flags: Vec<PixelFlag>) -> Result<Self> {
        let n = pixel_count(width, height)?;
        if depth.len() != n || flags.len() != n {
            return Err(Error::Contract(format!(
                "depth map {width}x{height} needs {n} pixels, got {} depths and {} flags",
                depth.len(),
                flags.len()
            )));
        }
        if let Some(i) = depth
            .iter()
            .zip(&flags)
            .position(|(d, f)| f.is_valid() && !(d.is_finite() && *d >= 0.0))
        {
            return Err(Error::Contract(format!(
                "valid pixel {i} carries non-finite or negative depth {}",
                depth[i]
            )));
        }
        Ok(DepthMap {
            width,
            height,
            depth,
            flags,
        })
    }

    /// Builds a map from raw depths, flagging every non-finite or negative
    /// value as invalid.
    pub fn from_depths(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        let flags = depth
            .iter()
            .map(|d| {
                if d.is_finite() && *d >= 0.0 {
                    PixelFlag::Valid
                } else {
                    PixelFlag::Invalid
                }
            })
            .collect();
        DepthMap::new(width, height, depth, flags)
    }

    pub fn filled(width: usize, height: usize, depth: f64) -> Result<Self> {
        let n = pixel_count(width, height)?;
        DepthMap::from_depths(width, height, vec![depth; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn flags(&self) -> &[PixelFlag] {
        &self.flags
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, PixelFlag) {
        let i = y * self.width + x;
        (self.depth[i], self.flags[i])
    }

    pub fn count(&self, flag: PixelFlag) -> usize {
        self.flags.iter().filter(|f| **f == flag).count()
    }

    /// Same map with the depth of every pixel replaced; flags are re-checked.
    pub fn with_depths(&self, depth: Vec<f64>) -> Result<Self> {
        DepthMap::new(self.width, self.height, depth, self.flags.clone())
    }

    pub fn into_parts(self) -> (usize, usize, Vec<f64>, Vec<PixelFlag>) {
        (self.width, self.height, self.depth, self.flags)
    }
}

/// Ambient-light intensity image with 12-bit samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    intensity: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, intensity: Vec<u16>) -> Result<Self> {
        let n = pixel_count(width, height)?;
        if intensity.len() != n {
            return Err(Error::Contract(format!(
                "gray image {width}x{height} needs {n} pixels, got {}",
                intensity.len()
            )));
        }
        if let Some(v) = intensity.iter().find(|v| **v > GRAY_MAX) {
            return Err(Error::Contract(format!("gray value {v} exceeds 12-bit range")));
        }
        Ok(GrayImage {
            width,
            height,
            intensity,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn intensities(&self) -> &[u16] {
        &self.intensity
    }
}

/// Sampling phase offset of one correlation plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplePhase {
    Deg0,
    Deg90,
    Deg180,
    Deg270,
}

impl SamplePhase {
    pub fn degrees(self) -> u32 {
        match self {
            SamplePhase::Deg0 => 0,
            SamplePhase::Deg90 => 90,
            SamplePhase::Deg180 => 180,
            SamplePhase::Deg270 => 270,
        }
    }

    pub fn radians(self) -> f64 {
        f64::from(self.degrees()).to_radians()
    }
}

/// Phase order of a four-sample capture.
pub const FOUR_PHASE_ORDER: [SamplePhase; 4] = [
    SamplePhase::Deg0,
    SamplePhase::Deg90,
    SamplePhase::Deg180,
    SamplePhase::Deg270,
];

/// Phase order of a two-sample capture: (S2, S3) = (90°, 0°).
pub const TWO_PHASE_ORDER: [SamplePhase; 2] = [SamplePhase::Deg90, SamplePhase::Deg0];

/// Raw correlation planes of one capture at one modulation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsFrameSet {
    width: usize,
    height: usize,
    samples: Vec<Vec<f64>>,
    frequency: f64,
    sample_phases: Vec<SamplePhase>,
    full_scale: Option<f64>,
}

impl DcsFrameSet {
    /// `full_scale` is the ADC rail; a pixel with any sample at or beyond it is
    /// reported as saturated by the phase estimators.
    pub fn new(
        width: usize,
        height: usize,
        samples: Vec<Vec<f64>>,
        frequency: f64,
        sample_phases: Vec<SamplePhase>,
        full_scale: Option<f64>,
    ) -> Result<Self> {
        let n = pixel_count(width, height)?;
        if sample_phases.len() != samples.len() {
            return Err(Error::Contract(format!(
                "{} sample planes but {} sampling phases",
                samples.len(),
                sample_phases.len()
            )));
        }
        match samples.len() {
            4 if sample_phases == FOUR_PHASE_ORDER => {}
            2 if sample_phases == TWO_PHASE_ORDER => {}
            4 | 2 => {
                return Err(Error::Contract(format!(
                    "unsupported sampling phase order {sample_phases:?}"
                )))
            }
            k => return Err(Error::Contract(format!("DCS sets hold 2 or 4 planes, got {k}"))),
        }
        if let Some(p) = samples.iter().position(|p| p.len() != n) {
            return Err(Error::Contract(format!(
                "plane {p} has {} values, expected {n}",
                samples[p].len()
            )));
        }
        unambiguous_range_for(frequency, SPEED_OF_LIGHT)?;
        if let Some(fs) = full_scale {
            if !(fs.is_finite() && fs > 0.0) {
                return Err(Error::Domain(format!("full scale must be positive, got {fs}")));
            }
        }
        Ok(DcsFrameSet {
            width,
            height,
            samples,
            frequency,
            sample_phases,
            full_scale,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn sample_phases(&self) -> &[SamplePhase] {
        &self.sample_phases
    }

    pub fn full_scale(&self) -> Option<f64> {
        self.full_scale
    }
}

/// Per-pixel ambiguity-cycle class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthBinMap {
    width: usize,
    height: usize,
    bins: Vec<u32>,
    num_bins: u32,
    flags: Vec<PixelFlag>,
}

impl DepthBinMap {
    pub fn new(
        width: usize,
        height: usize,
        bins: Vec<u32>,
        num_bins: u32,
        flags: Vec<PixelFlag>,
    ) -> Result<Self> {
        let n = pixel_count(width, height)?;
        if num_bins == 0 {
            return Err(Error::Domain("num_bins must be positive".into()));
        }
        if bins.len() != n || flags.len() != n {
            return Err(Error::Contract(format!(
                "bin map {width}x{height} needs {n} pixels, got {} bins and {} flags",
                bins.len(),
                flags.len()
            )));
        }
        if let Some(b) = bins.iter().find(|b| **b >= num_bins) {
            return Err(Error::Contract(format!("bin {b} out of range 0..{num_bins}")));
        }
        Ok(DepthBinMap {
            width,
            height,
            bins,
            num_bins,
            flags,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bins(&self) -> &[u32] {
        &self.bins
    }

    pub fn num_bins(&self) -> u32 {
        self.num_bins
    }

    pub fn flags(&self) -> &[PixelFlag] {
        &self.flags
    }
}

pub(crate) fn pixel_count(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::Contract(format!("empty image {width}x{height}")));
    }
    width
        .checked_mul(height)
        .ok_or_else(|| Error::Contract(format!("image {width}x{height} too large")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unambiguous_range_examples() {
        let at = |f: f64| ModulationConfig::new(f).unwrap().unambiguous_range();
        assert_eq!(at(24e6), 6.25);
        assert_eq!(at(10e6), 15.0);
        assert_eq!(at(12e6), 12.5);
    }

    #[test]
    fn non_positive_frequency_is_domain_error() {
        for f in [0.0, -1e6, f64::NAN, f64::INFINITY] {
            assert!(matches!(ModulationConfig::new(f), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn saturation_threshold_bounds() {
        let c = ModulationConfig::new(24e6).unwrap();
        assert!((c.saturation_threshold() - 6.125).abs() < 1e-12);
        assert!(c.with_saturation_threshold(6.25).is_ok());
        assert!(c.with_saturation_threshold(6.3).is_err());
        assert!(c.with_saturation_threshold(0.0).is_err());
    }

    #[test]
    fn config_serde_revalidates() {
        let c = ModulationConfig::new(24e6).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: ModulationConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let bad = json.replace("6.125", "9.0");
        assert!(serde_json::from_str::<ModulationConfig>(&bad).is_err());
    }

    #[test]
    fn depth_map_flags_partition() {
        let m = DepthMap::from_depths(2, 2, vec![1.0, f64::NAN, -2.0, 0.0]).unwrap();
        assert_eq!(
            m.flags(),
            &[PixelFlag::Valid, PixelFlag::Invalid, PixelFlag::Invalid, PixelFlag::Valid]
        );
        assert_eq!(m.count(PixelFlag::Valid) + m.count(PixelFlag::Invalid), 4);
        assert!(DepthMap::new(1, 1, vec![-1.0], vec![PixelFlag::Valid]).is_err());
        assert!(DepthMap::new(1, 1, vec![f64::NAN], vec![PixelFlag::Saturated]).is_ok());
    }

    #[test]
    fn gray_rejects_13_bit_values() {
        assert!(GrayImage::new(1, 1, vec![4095]).is_ok());
        assert!(GrayImage::new(1, 1, vec![4096]).is_err());
    }

    #[test]
    fn dcs_plane_count_and_order() {
        let p = || vec![0.0; 4];
        assert!(DcsFrameSet::new(2, 2, vec![p(); 4], 24e6, FOUR_PHASE_ORDER.to_vec(), None).is_ok());
        assert!(DcsFrameSet::new(2, 2, vec![p(); 2], 24e6, TWO_PHASE_ORDER.to_vec(), None).is_ok());
        assert!(DcsFrameSet::new(2, 2, vec![p(); 3], 24e6, vec![SamplePhase::Deg0; 3], None).is_err());
        let mut wrong = FOUR_PHASE_ORDER.to_vec();
        wrong.swap(0, 1);
        assert!(DcsFrameSet::new(2, 2, vec![p(); 4], 24e6, wrong, None).is_err());
    }

    #[test]
    fn bin_map_bounds() {
        assert!(DepthBinMap::new(1, 1, vec![3], 4, vec![PixelFlag::Valid]).is_ok());
        assert!(DepthBinMap::new(1, 1, vec![4], 4, vec![PixelFlag::Valid]).is_err());
    }
}
