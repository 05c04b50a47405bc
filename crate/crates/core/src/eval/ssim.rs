//! Structural similarity with a uniform square window, evaluated at every
//! window placement that fits inside the image (no padding).

use super::loss::DepthLoss;
use crate::error::{check_shape, Error, Result};
use crate::types::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    /// Side length of the square window, in pixels.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range R of the inputs; c1 = (k1·R)², c2 = (k2·R)².
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }
}

/// `1 − mean SSIM` as a [`DepthLoss`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SsimLoss(pub SsimParams);

struct WindowStats {
    x0: usize,
    y0: usize,
    ssim: f64,
    // dS/dμ_pred, dS/dσ_xy and dS/dσ²_pred
    d_mu: f64,
    d_cov: f64,
    d_var: f64,
    mu_gt: f64,
    mu_pred: f64,
}

fn windows(gt: &DepthMap, pred: &DepthMap, p: &SsimParams, with_grad: bool) -> Result<Vec<WindowStats>> {
    check_shape(gt.shape(), pred.shape())?;
    let (w, h, k) = (gt.width(), gt.height(), p.window);
    if k == 0 || k > w || k > h {
        return Err(Error::Contract(format!("SSIM window {k} does not fit a {w}x{h} image")));
    }
    let valid: Vec<bool> = gt
        .flags()
        .iter()
        .zip(pred.flags())
        .map(|(a, b)| a.is_valid() && b.is_valid())
        .collect();
    let (x, y) = (gt.depths(), pred.depths());
    let (c1, c2) = (p.c1(), p.c2());
    let n = (k * k) as f64;
    let mut out = Vec::with_capacity((w - k + 1) * (h - k + 1));
    for y0 in 0..=h - k {
        'win: for x0 in 0..=w - k {
            let rows = || (y0..y0 + k).map(move |r| r * w + x0..r * w + x0 + k);
            let (mut sx, mut sy) = (0.0, 0.0);
            for r in rows() {
                for i in r {
                    if !valid[i] {
                        continue 'win;
                    }
                    sx += x[i];
                    sy += y[i];
                }
            }
            let (mx, my) = (sx / n, sy / n);
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for r in rows() {
                for i in r {
                    let (dx, dy) = (x[i] - mx, y[i] - my);
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            }
            let (vx, vy, cxy) = (vx / n, vy / n, cxy / n);
            let a1 = 2.0 * mx * my + c1;
            let a2 = 2.0 * cxy + c2;
            let b1 = mx * mx + my * my + c1;
            let b2 = vx + vy + c2;
            let ssim = a1 * a2 / (b1 * b2);
            let (d_mu, d_cov, d_var) = if with_grad {
                (
                    2.0 * mx * a2 / (b1 * b2) - ssim * 2.0 * my / b1,
                    2.0 * a1 / (b1 * b2),
                    -ssim / b2,
                )
            } else {
                (0.0, 0.0, 0.0)
            };
            out.push(WindowStats {
                x0,
                y0,
                ssim,
                d_mu,
                d_cov,
                d_var,
                mu_gt: mx,
                mu_pred: my,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    Ok(out)
}

impl DepthLoss for SsimLoss {
    fn value(&self, gt: &DepthMap, pred: &DepthMap) -> Result<f64> {
        let ws = windows(gt, pred, &self.0, false)?;
        let mean = ws.iter().map(|s| s.ssim).sum::<f64>() / ws.len() as f64;
        Ok(1.0 - mean)
    }

    fn gradient(&self, gt: &DepthMap, pred: &DepthMap) -> Result<Vec<f64>> {
        let ws = windows(gt, pred, &self.0, true)?;
        let (w, k) = (gt.width(), self.0.window);
        let n = (k * k) as f64;
        let scale = -1.0 / (ws.len() as f64 * n);
        let (x, y) = (gt.depths(), pred.depths());
        let mut g = vec![0.0; gt.len()];
        for s in &ws {
            for r in s.y0..s.y0 + k {
                for i in r * w + s.x0..r * w + s.x0 + k {
                    let dsdy = s.d_mu + s.d_cov * (x[i] - s.mu_gt) + 2.0 * s.d_var * (y[i] - s.mu_pred);
                    g[i] += scale * dsdy;
                }
            }
        }
        Ok(g)
    }
}

/// `1 − mean local SSIM` over windows whose pixels are all jointly valid.
pub fn ssim_loss(gt: &DepthMap, pred: &DepthMap, params: &SsimParams) -> Result<f64> {
    SsimLoss(*params).value(gt, pred)
}
