use serde::{Deserialize, Serialize};

use super::{compensated_sum, joint_valid};
use crate::error::{check_shape, Error, Result};
use crate::types::DepthMap;

/// Standard depth-completion error measures, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KittiMetrics {
    pub rmse: f64,
    pub irmse: f64,
    pub sq_rel: f64,
    pub abs_rel: f64,
    pub valid_pixels: u64,
}

/// RMSE and relative errors over jointly valid pixels.
///
/// Pixels with zero ground truth are left out of the relative terms, and
/// pixels where either depth is zero are left out of iRMSE.
pub fn kitti_metrics(gt: &DepthMap, pred: &DepthMap) -> Result<KittiMetrics> {
    check_shape(gt.shape(), pred.shape())?;
    let idx = joint_valid(gt, pred);
    if idx.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    let (g, p) = (gt.depths(), pred.depths());
    let mean = |v: Vec<f64>| {
        if v.is_empty() {
            0.0
        } else {
            let n = v.len() as f64;
            compensated_sum(v) / n
        }
    };
    let rmse = mean(idx.iter().map(|&i| (g[i] - p[i]).powi(2)).collect()).sqrt();
    let positive_gt: Vec<usize> = idx.iter().copied().filter(|&i| g[i] > 0.0).collect();
    let irmse = mean(
        positive_gt
            .iter()
            .filter(|&&i| p[i] > 0.0)
            .map(|&i| (1.0 / g[i] - 1.0 / p[i]).powi(2))
            .collect(),
    )
    .sqrt();
    let sq_rel = mean(positive_gt.iter().map(|&i| (g[i] - p[i]).powi(2) / g[i]).collect());
    let abs_rel = mean(positive_gt.iter().map(|&i| (g[i] - p[i]).abs() / g[i]).collect());
    Ok(KittiMetrics {
        rmse,
        irmse,
        sq_rel,
        abs_rel,
        valid_pixels: idx.len() as u64,
    })
}

/// Percentage of pixels within `threshold` of ground truth, and a precision
/// score `100·(1 − σ(error) / mean(gt))` clamped to [0, 100].
pub fn accuracy_precision(gt: &DepthMap, test: &DepthMap, threshold: f64) -> Result<(f64, f64)> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
    }
    check_shape(gt.shape(), test.shape())?;
    let idx = joint_valid(gt, test);
    if idx.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    let (g, t) = (gt.depths(), test.depths());
    let n = idx.len() as f64;
    let hits = idx.iter().filter(|&&i| (g[i] - t[i]).abs() < threshold).count();
    let accuracy = 100.0 * hits as f64 / n;

    let err: Vec<f64> = idx.iter().map(|&i| t[i] - g[i]).collect();
    let mean_err = compensated_sum(err.iter().copied()) / n;
    let sigma = (compensated_sum(err.iter().map(|e| (e - mean_err).powi(2))) / n).sqrt();
    let mean_gt = compensated_sum(idx.iter().map(|&i| g[i])) / n;
    let precision = if mean_gt > 0.0 {
        (100.0 * (1.0 - sigma / mean_gt)).clamp(0.0, 100.0)
    } else if sigma == 0.0 {
        100.0
    } else {
        0.0
    };
    Ok((accuracy, precision))
}
