//! Training losses, their analytic gradients, and depth-map metrics.
//!
//! All reductions run serially in pixel order, so results do not depend on
//! how callers schedule work.

mod gradcheck;
mod loss;
mod metrics;
mod report;
mod ssim;

pub use gradcheck::{check_depth_loss, gradient_check, GRADIENT_FLOOR};
pub use loss::{
    composite_regression_loss, cross_entropy_gradient, cross_entropy_loss, default_top_n,
    depth_guided_loss, scale_invariant_loss, CompositeLoss, DepthGuided, DepthLoss, LossComponents,
    LossWeights, Logits, ScaleInvariant,
};
pub use metrics::{accuracy_precision, kitti_metrics, KittiMetrics};
pub use report::{parse_kv, MetricReport};
pub use ssim::{ssim_loss, SsimLoss, SsimParams};

use crate::types::DepthMap;

/// Indices where both maps hold valid pixels.
pub(crate) fn joint_valid(gt: &DepthMap, pred: &DepthMap) -> Vec<usize> {
    gt.flags()
        .iter()
        .zip(pred.flags())
        .enumerate()
        .filter(|(_, (a, b))| a.is_valid() && b.is_valid())
        .map(|(i, _)| i)
        .collect()
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
