//! Frame augmentation: joint flips of every plane, photometric changes of
//! the gray plane only.

use serde::{Deserialize, Serialize};

use super::manifest::FrameData;
use crate::error::{Error, Result};
use crate::types::{DepthMap, GrayImage, GRAY_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentOp {
    /// Mirror about the horizontal (X) axis: rows are reversed.
    FlipX,
    /// Mirror about the vertical (Y) axis: columns are reversed.
    FlipY,
    /// Additive gray offset in counts.
    Brightness { offset: i32 },
    /// Multiplicative gray gain about zero.
    Contrast { gain: f64 },
}

fn flip<T: Copy>(data: &[T], width: usize, height: usize, op: AugmentOp) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for y in 0..height {
        for x in 0..width {
            let (sx, sy) = match op {
                AugmentOp::FlipX => (x, height - 1 - y),
                _ => (width - 1 - x, y),
            };
            out.push(data[sy * width + sx]);
        }
    }
    out
}

fn flip_map(map: &DepthMap, op: AugmentOp) -> Result<DepthMap> {
    let (w, h) = map.shape();
    DepthMap::new(w, h, flip(map.depths(), w, h, op), flip(map.flags(), w, h, op))
}

fn map_gray(gray: &GrayImage, f: impl Fn(f64) -> f64) -> Result<GrayImage> {
    let v = gray
        .intensities()
        .iter()
        .map(|g| f(f64::from(*g)).round().clamp(0.0, f64::from(GRAY_MAX)) as u16)
        .collect();
    GrayImage::new(gray.width(), gray.height(), v)
}

pub fn augment(frame: &FrameData, ops: &[AugmentOp]) -> Result<FrameData> {
    let mut out = frame.clone();
    for &op in ops {
        match op {
            AugmentOp::FlipX | AugmentOp::FlipY => {
                let (w, h) = out.shape();
                out.gray = GrayImage::new(w, h, flip(out.gray.intensities(), w, h, op))?;
                out.gt_depth = flip_map(&out.gt_depth, op)?;
                for m in [
                    &mut out.true_depth,
                    &mut out.ambiguous_4dcs,
                    &mut out.ambiguous_2dcs,
                    &mut out.ambiguous_low_4dcs,
                ] {
                    if let Some(inner) = m.as_ref() {
                        *m = Some(flip_map(inner, op)?);
                    }
                }
            }
            AugmentOp::Brightness { offset } => {
                out.gray = map_gray(&out.gray, |g| g + f64::from(offset))?;
            }
            AugmentOp::Contrast { gain } => {
                if !(gain.is_finite() && gain >= 0.0) {
                    return Err(Error::Domain(format!("contrast gain must be non-negative, got {gain}")));
                }
                out.gray = map_gray(&out.gray, |g| g * gain)?;
            }
        }
    }
    Ok(out)
}
