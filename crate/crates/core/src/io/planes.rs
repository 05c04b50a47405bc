//! Conversions between in-memory maps and PGM planes.
//!
//! * gray: 16-bit container, maxval 4095;
//! * depth: 16-bit fixed point, `max_depth / 65535` meters per count;
//! * flags: 8-bit plane of [`PixelFlag`] codes, maxval 255;
//! * depth bins: 8-bit plane of class indices, maxval 255.

use serde::{Deserialize, Serialize};

use super::pgm::{self, PgmImage};
use crate::error::{check_shape, Error, Result};
use crate::types::{DepthBinMap, DepthMap, GrayImage, PixelFlag, GRAY_MAX};

pub const DEPTH_MAXVAL: u16 = u16::MAX;
pub const FLAG_MAXVAL: u16 = 255;
pub const BIN_MAXVAL: u16 = 255;

/// Fixed-point scale for depth planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthScale {
    pub max_depth_m: f64,
}

impl DepthScale {
    pub fn new(max_depth_m: f64) -> Result<Self> {
        if !(max_depth_m.is_finite() && max_depth_m > 0.0) {
            return Err(Error::Domain(format!("max depth must be positive, got {max_depth_m}")));
        }
        Ok(DepthScale { max_depth_m })
    }

    pub fn meters_per_count(&self) -> f64 {
        self.max_depth_m / f64::from(DEPTH_MAXVAL)
    }

    /// Stored count for a depth; errors above the representable range.
    pub fn to_count(&self, depth: f64) -> Result<u16> {
        let c = (depth / self.max_depth_m * f64::from(DEPTH_MAXVAL)).round();
        if !(0.0..=f64::from(DEPTH_MAXVAL)).contains(&c) {
            return Err(Error::Contract(format!(
                "depth {depth} m outside storable range [0, {}]",
                self.max_depth_m
            )));
        }
        Ok(c as u16)
    }

    pub fn to_depth(&self, count: u16) -> f64 {
        f64::from(count) * self.meters_per_count()
    }
}

impl Default for DepthScale {
    fn default() -> Self {
        DepthScale { max_depth_m: 100.0 }
    }
}

/// Depth and flag planes of a map.
pub fn encode_depth(map: &DepthMap, scale: &DepthScale) -> Result<(PgmImage, PgmImage)> {
    let (w, h) = map.shape();
    let mut counts = Vec::with_capacity(map.len());
    for (d, f) in map.depths().iter().zip(map.flags()) {
        counts.push(match f {
            PixelFlag::Valid => scale.to_count(*d)?,
            // Saturated readings are unreliable; keep whatever fits.
            PixelFlag::Saturated if d.is_finite() => scale.to_count(d.clamp(0.0, scale.max_depth_m))?,
            _ => 0,
        });
    }
    let flags = map.flags().iter().map(|f| u16::from(f.code())).collect();
    Ok((
        PgmImage::new(w, h, DEPTH_MAXVAL, counts)?,
        PgmImage::new(w, h, FLAG_MAXVAL, flags)?,
    ))
}

pub fn decode_depth(depth: &PgmImage, flags: &PgmImage, scale: &DepthScale) -> Result<DepthMap> {
    check_shape(depth.shape(), flags.shape())?;
    if depth.maxval() != DEPTH_MAXVAL {
        return Err(Error::Contract(format!(
            "depth plane maxval {} (expected {DEPTH_MAXVAL})",
            depth.maxval()
        )));
    }
    let flags = flags
        .samples()
        .iter()
        .map(|c| {
            u8::try_from(*c)
                .ok()
                .and_then(PixelFlag::from_code)
                .ok_or_else(|| Error::Contract(format!("unknown pixel flag code {c}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let depth_m = depth.samples().iter().map(|c| scale.to_depth(*c)).collect();
    DepthMap::new(depth.width(), depth.height(), depth_m, flags)
}

/// Byte-level entry point: decodes a depth plane and a flag plane.
pub fn decode_depth_bytes(depth: &[u8], flags: &[u8], scale: &DepthScale) -> Result<DepthMap> {
    decode_depth(&pgm::decode(depth)?, &pgm::decode(flags)?, scale)
}

/// What a map reads back as after a write at `scale`.
pub fn quantize(map: &DepthMap, scale: &DepthScale) -> Result<DepthMap> {
    let (d, f) = encode_depth(map, scale)?;
    decode_depth(&d, &f, scale)
}

pub fn encode_gray(img: &GrayImage) -> Result<PgmImage> {
    Ok(PgmImage::new(img.width(), img.height(), GRAY_MAX, img.intensities().to_vec())?)
}

pub fn decode_gray(img: &PgmImage) -> Result<GrayImage> {
    if img.maxval() != GRAY_MAX {
        return Err(Error::Contract(format!(
            "gray plane maxval {} (expected {GRAY_MAX})",
            img.maxval()
        )));
    }
    GrayImage::new(img.width(), img.height(), img.samples().to_vec())
}

pub fn encode_bins(bins: &DepthBinMap) -> Result<PgmImage> {
    if bins.num_bins() > u32::from(BIN_MAXVAL) + 1 {
        return Err(Error::Contract(format!("{} bins do not fit an 8-bit plane", bins.num_bins())));
    }
    let samples = bins.bins().iter().map(|b| *b as u16).collect();
    Ok(PgmImage::new(bins.width(), bins.height(), BIN_MAXVAL, samples)?)
}

/// Bin plane as a map with every pixel valid.
pub fn decode_bins(img: &PgmImage, num_bins: u32) -> Result<DepthBinMap> {
    let bins = img.samples().iter().map(|b| u32::from(*b)).collect();
    DepthBinMap::new(
        img.width(),
        img.height(),
        bins,
        num_bins,
        vec![PixelFlag::Valid; img.width() * img.height()],
    )
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn depth_count_example() {
        assert_eq!(DepthScale::new(100.0).unwrap().to_count(6.25).unwrap(), 4096);
        assert!(DepthScale::new(100.0).unwrap().to_count(100.01).is_err());
    }

    #[test]
    fn flags_survive_round_trip() {
        let m = DepthMap::new(
            3,
            1,
            vec![1.0, 0.0, 2.0],
            vec![PixelFlag::Valid, PixelFlag::Invalid, PixelFlag::Saturated],
        )
        .unwrap();
        let s = DepthScale::default();
        let (d, f) = encode_depth(&m, &s).unwrap();
        assert_eq!(f.samples(), &[0, 1, 2]);
        let back = decode_depth(&pgm::decode(&pgm::encode(&d)).unwrap(), &f, &s).unwrap();
        assert_eq!(back.flags(), m.flags());
    }

    #[test]
    fn unknown_flag_code_rejected() {
        let d = PgmImage::new(1, 1, DEPTH_MAXVAL, vec![5]).unwrap();
        let f = PgmImage::new(1, 1, FLAG_MAXVAL, vec![7]).unwrap();
        assert!(decode_depth(&d, &f, &DepthScale::default()).is_err());
    }

    #[test]
    fn gray_identity() {
        let g = GrayImage::new(2, 1, vec![4095, 0]).unwrap();
        let back = decode_gray(&pgm::decode(&pgm::encode(&encode_gray(&g).unwrap())).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(depths in proptest::collection::vec(0.0f64..100.0, 1..32)) {
            let s = DepthScale::default();
            let m = DepthMap::from_depths(depths.len(), 1, depths).unwrap();
            let q = quantize(&m, &s).unwrap();
            prop_assert_eq!(quantize(&q, &s).unwrap(), q.clone());
            for (a, b) in m.depths().iter().zip(q.depths()) {
                prop_assert!((a - b).abs() <= 0.5 * s.meters_per_count() + 1e-12);
            }
        }
    }
}
