use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::joint_valid;
use super::loss::DepthLoss;
use crate::error::{Error, Result};
use crate::types::DepthMap;

/// Gradient magnitude below which errors are measured in absolute terms.
pub const GRADIENT_FLOOR: f64 = 1e-6;

/// Largest relative error between `analytic` and central differences of
/// `value` at `x`, over the coordinates in `indices`.
///
/// The relative error at a coordinate is
/// `|g_a − g_fd| / max(|g_a|, |g_fd|, GRADIENT_FLOOR)`.
pub fn gradient_check<F>(mut value: F, x: &[f64], analytic: &[f64], eps: f64, indices: &[usize]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {eps}")));
    }
    if analytic.len() != x.len() {
        return Err(Error::Contract(format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            x.len()
        )));
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for &i in indices {
        if i >= x.len() {
            return Err(Error::Contract(format!("index {i} out of range")));
        }
        probe[i] = x[i] + eps;
        let up = value(&probe)?;
        probe[i] = x[i] - eps;
        let down = value(&probe)?;
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(fd.abs()).max(GRADIENT_FLOOR);
        worst = worst.max((analytic[i] - fd).abs() / denom);
    }
    Ok(worst)
}

/// Runs [`gradient_check`] on a depth loss, perturbing up to `samples`
/// jointly valid pixels of `pred` chosen with `seed`.
pub fn check_depth_loss(
    loss: &dyn DepthLoss,
    gt: &DepthMap,
    pred: &DepthMap,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let analytic = loss.gradient(gt, pred)?;
    let valid = joint_valid(gt, pred);
    let indices: Vec<usize> = if samples >= valid.len() {
        valid
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = sample(&mut rng, valid.len(), samples)
            .into_iter()
            .map(|k| valid[k])
            .collect();
        picked.sort_unstable();
        picked
    };
    let flags = pred.flags().to_vec();
    let (w, h) = pred.shape();
    gradient_check(
        |x| {
            let p = DepthMap::new(w, h, x.to_vec(), flags.clone())?;
            loss.value(gt, &p)
        },
        pred.depths(),
        &analytic,
        eps,
        &indices,
    )
}
