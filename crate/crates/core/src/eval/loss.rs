use serde::{Deserialize, Serialize};

use super::joint_valid;
use super::ssim::{SsimLoss, SsimParams};
use crate::error::{check_shape, Error, Result};
use crate::types::{DepthBinMap, DepthMap};

/// A loss on a predicted depth map with an analytic gradient.
///
/// Gradients are taken with respect to every pixel of `pred`; pixels the loss
/// ignores get a zero entry.
pub trait DepthLoss {
    fn value(&self, gt: &DepthMap, pred: &DepthMap) -> Result<f64>;
    fn gradient(&self, gt: &DepthMap, pred: &DepthMap) -> Result<Vec<f64>>;
}

fn valid_pixels(gt: &DepthMap, pred: &DepthMap) -> Result<Vec<usize>> {
    check_shape(gt.shape(), pred.shape())?;
    let idx = joint_valid(gt, pred);
    if idx.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    Ok(idx)
}

/// Variance of `gt − pred` over jointly valid pixels:
/// `(1/n)·Σd² − (1/n²)·(Σd)²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaleInvariant;

impl ScaleInvariant {
    fn diffs(gt: &DepthMap, pred: &DepthMap) -> Result<(Vec<usize>, Vec<f64>, f64)> {
        let idx = valid_pixels(gt, pred)?;
        let d: Vec<f64> = idx.iter().map(|&i| gt.depths()[i] - pred.depths()[i]).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        Ok((idx, d, mean))
    }
}

impl DepthLoss for ScaleInvariant {
    fn value(&self, gt: &DepthMap, pred: &DepthMap) -> Result<f64> {
        // Two-pass form of the same quantity; avoids cancellation for large offsets.
        let (_, d, mean) = Self::diffs(gt, pred)?;
        Ok(d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64)
    }

    fn gradient(&self, gt: &DepthMap, pred: &DepthMap) -> Result<Vec<f64>> {
        let (idx, d, mean) = Self::diffs(gt, pred)?;
        let n = d.len() as f64;
        let mut g = vec![0.0; gt.len()];
        for (&i, di) in idx.iter().zip(&d) {
            g[i] = -2.0 * (di - mean) / n;
        }
        Ok(g)
    }
}

pub fn scale_invariant_loss(gt: &DepthMap, pred: &DepthMap) -> Result<f64> {
    ScaleInvariant.value(gt, pred)
}

/// Top-N pixel count for a `width × height` frame: a (w/10, h/10) kernel,
/// at least one pixel.
pub fn default_top_n(width: usize, height: usize) -> usize {
    ((width / 10) * (height / 10)).max(1)
}

/// Mean squared error over the `n_top` deepest ground-truth pixels.
#[derive(Debug, Clone, Copy, Default)]
pub struct DepthGuided {
    /// `None` uses [`default_top_n`].
    pub n_top: Option<usize>,
}

impl DepthGuided {
    fn selection(&self, gt: &DepthMap, pred: &DepthMap) -> Result<Vec<usize>> {
        let mut idx = valid_pixels(gt, pred)?;
        let n = self.n_top.unwrap_or_else(|| default_top_n(gt.width(), gt.height()));
        if n == 0 {
            return Err(Error::Domain("depth-guided loss needs n_top >= 1".into()));
        }
        if n > idx.len() {
            return Err(Error::Contract(format!(
                "depth-guided loss needs {n} valid pixels, only {} available",
                idx.len()
            )));
        }
        // Stable sort: equal depths keep pixel-index order.
        idx.sort_by(|&a, &b| gt.depths()[b].total_cmp(&gt.depths()[a]));
        idx.truncate(n);
        Ok(idx)
    }
}

impl DepthLoss for DepthGuided {
    fn value(&self, gt: &DepthMap, pred: &DepthMap) -> Result<f64> {
        let idx = self.selection(gt, pred)?;
        let sse: f64 = idx
            .iter()
            .map(|&i| (gt.depths()[i] - pred.depths()[i]).powi(2))
            .sum();
        Ok(sse / idx.len() as f64)
    }

    fn gradient(&self, gt: &DepthMap, pred: &DepthMap) -> Result<Vec<f64>> {
        let idx = self.selection(gt, pred)?;
        let n = idx.len() as f64;
        let mut g = vec![0.0; gt.len()];
        for &i in &idx {
            g[i] = -2.0 * (gt.depths()[i] - pred.depths()[i]) / n;
        }
        Ok(g)
    }
}

pub fn depth_guided_loss(gt: &DepthMap, pred: &DepthMap, n_top: usize) -> Result<f64> {
    DepthGuided { n_top: Some(n_top) }.value(gt, pred)
}

/// Weights of the composite regression loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 0.5,
            beta: 0.4,
            gamma: 0.1,
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if [alpha, beta, gamma].iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain(format!(
                "loss weights must be non-negative, got ({alpha}, {beta}, {gamma})"
            )));
        }
        Ok(LossWeights { alpha, beta, gamma })
    }

    pub fn combine(&self, c: LossComponents) -> f64 {
        self.alpha * c.scale_invariant + self.beta * c.ssim + self.gamma * c.depth_guided
    }
}

/// Individual terms of the composite loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub scale_invariant: f64,
    pub ssim: f64,
    pub depth_guided: f64,
}

/// `α·L_SI + β·L_SSIM + γ·L_DG`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompositeLoss {
    pub weights: LossWeights,
    pub ssim: SsimParams,
    pub n_top: Option<usize>,
}

impl CompositeLoss {
    pub fn components(&self, gt: &DepthMap, pred: &DepthMap) -> Result<LossComponents> {
        Ok(LossComponents {
            scale_invariant: ScaleInvariant.value(gt, pred)?,
            ssim: SsimLoss(self.ssim).value(gt, pred)?,
            depth_guided: DepthGuided { n_top: self.n_top }.value(gt, pred)?,
        })
    }
}

impl DepthLoss for CompositeLoss {
    fn value(&self, gt: &DepthMap, pred: &DepthMap) -> Result<f64> {
        Ok(self.weights.combine(self.components(gt, pred)?))
    }

    fn gradient(&self, gt: &DepthMap, pred: &DepthMap) -> Result<Vec<f64>> {
        let w = self.weights;
        let mut g = vec![0.0; gt.len()];
        let terms: [(f64, &dyn DepthLoss); 3] = [
            (w.alpha, &ScaleInvariant),
            (w.beta, &SsimLoss(self.ssim)),
            (w.gamma, &DepthGuided { n_top: self.n_top }),
        ];
        for (weight, loss) in terms {
            if weight == 0.0 {
                continue;
            }
            for (gi, ti) in g.iter_mut().zip(loss.gradient(gt, pred)?) {
                *gi += weight * ti;
            }
        }
        Ok(g)
    }
}

pub fn composite_regression_loss(gt: &DepthMap, pred: &DepthMap, weights: LossWeights) -> Result<f64> {
    CompositeLoss {
        weights,
        ..CompositeLoss::default()
    }
    .value(gt, pred)
}

/// Per-pixel class scores laid out channel-major (`num_bins × height × width`).
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    width: usize,
    height: usize,
    num_bins: u32,
    data: Vec<f64>,
}

impl Logits {
    pub fn new(width: usize, height: usize, num_bins: u32, data: Vec<f64>) -> Result<Self> {
        let expected = width * height * num_bins as usize;
        if num_bins == 0 || width == 0 || height == 0 || data.len() != expected {
            return Err(Error::Contract(format!(
                "logits {num_bins}x{height}x{width} need {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("logits must be finite".into()));
        }
        Ok(Logits {
            width,
            height,
            num_bins,
            data,
        })
    }

    pub fn num_bins(&self) -> u32 {
        self.num_bins
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn pixel(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        let plane = self.width * self.height;
        (0..self.num_bins as usize).map(move |c| self.data[c * plane + i])
    }
}

fn log_softmax_terms(logits: &Logits, i: usize) -> (f64, f64) {
    let max = logits.pixel(i).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.pixel(i).map(|v| (v - max).exp()).sum();
    (max, sum.ln())
}

fn ce_pixels(gt_bins: &DepthBinMap, logits: &Logits) -> Result<Vec<usize>> {
    check_shape(gt_bins.shape(), (logits.width, logits.height))?;
    if gt_bins.num_bins() != logits.num_bins {
        return Err(Error::Contract(format!(
            "ground truth has {} bins, logits have {}",
            gt_bins.num_bins(),
            logits.num_bins
        )));
    }
    let idx: Vec<usize> = (0..gt_bins.bins().len())
        .filter(|&i| gt_bins.flags()[i].is_valid())
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    Ok(idx)
}

/// Mean negative log-softmax probability of the true bin.
pub fn cross_entropy_loss(gt_bins: &DepthBinMap, logits: &Logits) -> Result<f64> {
    let idx = ce_pixels(gt_bins, logits)?;
    let plane = logits.width * logits.height;
    let total: f64 = idx
        .iter()
        .map(|&i| {
            let (max, log_sum) = log_softmax_terms(logits, i);
            let true_logit = logits.data[gt_bins.bins()[i] as usize * plane + i];
            -(true_logit - max - log_sum)
        })
        .sum();
    Ok(total / idx.len() as f64)
}

/// Gradient of [`cross_entropy_loss`] with respect to every logit, same
/// layout as the logits.
pub fn cross_entropy_gradient(gt_bins: &DepthBinMap, logits: &Logits) -> Result<Vec<f64>> {
    let idx = ce_pixels(gt_bins, logits)?;
    let plane = logits.width * logits.height;
    let n = idx.len() as f64;
    let mut g = vec![0.0; logits.data.len()];
    for &i in &idx {
        let (max, log_sum) = log_softmax_terms(logits, i);
        for c in 0..logits.num_bins as usize {
            let p = (logits.data[c * plane + i] - max - log_sum).exp();
            let target = if c == gt_bins.bins()[i] as usize { 1.0 } else { 0.0 };
            g[c * plane + i] = (p - target) / n;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::PixelFlag;

    fn row(v: &[f64]) -> DepthMap {
        DepthMap::from_depths(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn si_examples() {
        let gt = row(&[1.0, 2.0, 5.0]);
        assert_eq!(scale_invariant_loss(&gt, &gt).unwrap(), 0.0);
        let shifted = row(&[2.0, 3.0, 6.0]);
        assert!(scale_invariant_loss(&gt, &shifted).unwrap().abs() < 1e-15);
        // gt − pred = [0, 2] → 1.0
        let l = scale_invariant_loss(&row(&[1.0, 3.0]), &row(&[1.0, 1.0])).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn si_empty_valid_set() {
        let gt = DepthMap::new(1, 1, vec![0.0], vec![PixelFlag::Invalid]).unwrap();
        assert!(matches!(scale_invariant_loss(&gt, &gt), Err(Error::EmptyValidSet)));
    }

    #[test]
    fn dg_examples() {
        let gt: Vec<f64> = (1..=10).map(f64::from).collect();
        let g = row(&gt);
        assert_eq!(depth_guided_loss(&g, &g, 3).unwrap(), 0.0);
        let mut p = gt.clone();
        p[9] += 2.0;
        assert_eq!(depth_guided_loss(&g, &row(&p), 1).unwrap(), 4.0);
        assert_eq!(default_top_n(320, 240), 768);
        assert!(depth_guided_loss(&g, &g, 11).is_err());
    }

    #[test]
    fn dg_ties_follow_index_order() {
        let gt = row(&[5.0, 5.0, 1.0]);
        let pred = row(&[5.0, 7.0, 1.0]);
        // Top-1 among equal depths is pixel 0.
        assert_eq!(depth_guided_loss(&gt, &pred, 1).unwrap(), 0.0);
        assert_eq!(depth_guided_loss(&gt, &pred, 2).unwrap(), 2.0);
    }

    #[test]
    fn dg_with_all_pixels_is_mse() {
        let gt = row(&[1.0, 4.0, 2.0, 8.0]);
        let pred = row(&[2.0, 3.0, 2.5, 8.0]);
        let mse = (1.0 + 1.0 + 0.25) / 4.0;
        assert!((depth_guided_loss(&gt, &pred, 4).unwrap() - mse).abs() < 1e-15);
    }

    #[test]
    fn composite_weighting() {
        let w = LossWeights::default();
        let c = LossComponents {
            scale_invariant: 1.0,
            ssim: 0.5,
            depth_guided: 2.0,
        };
        assert!((w.combine(c) - 0.9).abs() < 1e-15);
        let only_si = LossWeights::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(only_si.combine(c), 1.0);
        assert!(LossWeights::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn ce_examples() {
        let bins = DepthBinMap::new(1, 1, vec![0], 2, vec![PixelFlag::Valid]).unwrap();
        let l = cross_entropy_loss(&bins, &Logits::new(1, 1, 2, vec![0.0, 0.0]).unwrap()).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        let confident = Logits::new(1, 1, 2, vec![50.0, -50.0]).unwrap();
        assert!(cross_entropy_loss(&bins, &confident).unwrap() < 1e-40);
        let bins4 = DepthBinMap::new(2, 1, vec![1, 3], 4, vec![PixelFlag::Valid; 2]).unwrap();
        let uniform = Logits::new(2, 1, 4, vec![0.3; 8]).unwrap();
        assert!((cross_entropy_loss(&bins4, &uniform).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ce_bin_count_mismatch() {
        let bins = DepthBinMap::new(1, 1, vec![0], 3, vec![PixelFlag::Valid]).unwrap();
        assert!(cross_entropy_loss(&bins, &Logits::new(1, 1, 2, vec![0.0, 0.0]).unwrap()).is_err());
    }
}
