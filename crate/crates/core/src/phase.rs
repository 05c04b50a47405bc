//! Phase extraction from correlation samples and the phase/depth relation.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::types::{pixel_count, DcsFrameSet, DepthMap, ModulationConfig, PixelFlag};

/// Per-pixel phase in [0, 2π) with correlation amplitude and validity.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    width: usize,
    height: usize,
    phase: Vec<f64>,
    amplitude: Vec<f64>,
    flags: Vec<PixelFlag>,
}

impl PhaseMap {
    pub fn new(
        width: usize,
        height: usize,
        phase: Vec<f64>,
        amplitude: Vec<f64>,
        flags: Vec<PixelFlag>,
    ) -> Result<Self> {
        let n = pixel_count(width, height)?;
        if phase.len() != n || amplitude.len() != n || flags.len() != n {
            return Err(Error::Contract(format!("phase map planes must hold {n} pixels")));
        }
        for i in 0..n {
            if !(amplitude[i] >= 0.0) {
                return Err(Error::Contract(format!("negative amplitude at pixel {i}")));
            }
            if flags[i] != PixelFlag::Invalid && !(0.0..TAU).contains(&phase[i]) {
                return Err(Error::Contract(format!(
                    "phase {} at pixel {i} outside [0, 2pi)",
                    phase[i]
                )));
            }
        }
        Ok(PhaseMap {
            width,
            height,
            phase,
            amplitude,
            flags,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn phases(&self) -> &[f64] {
        &self.phase
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn flags(&self) -> &[PixelFlag] {
        &self.flags
    }
}

/// Maps any finite angle into [0, 2π).
pub fn normalize_phase(angle: f64) -> f64 {
    let p = angle.rem_euclid(TAU);
    // rem_euclid of a tiny negative angle rounds up to exactly 2π.
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// `x mod modulus` in [0, modulus).
pub(crate) fn wrap_into(x: f64, modulus: f64) -> f64 {
    let r = x.rem_euclid(modulus);
    if r >= modulus {
        0.0
    } else {
        r
    }
}

fn saturated(dcs: &DcsFrameSet, i: usize) -> bool {
    match dcs.full_scale() {
        Some(fs) => dcs.samples().iter().any(|plane| plane[i].abs() >= fs),
        None => false,
    }
}

/// Quadrature estimator over the (0°, 90°, 180°, 270°) planes:
/// φ = atan2(S90 − S270, S0 − S180), amplitude = ½·|(S0 − S180, S90 − S270)|.
pub fn phase_from_4dcs(dcs: &DcsFrameSet) -> Result<PhaseMap> {
    if dcs.num_samples() != 4 {
        return Err(Error::Contract(format!(
            "four-sample estimator needs 4 planes, got {}",
            dcs.num_samples()
        )));
    }
    let [s0, s90, s180, s270] = [
        &dcs.samples()[0],
        &dcs.samples()[1],
        &dcs.samples()[2],
        &dcs.samples()[3],
    ];
    let n = s0.len();
    let mut phase = vec![0.0; n];
    let mut amplitude = vec![0.0; n];
    let mut flags = vec![PixelFlag::Valid; n];
    for i in 0..n {
        let in_phase = s0[i] - s180[i];
        let quadrature = s90[i] - s270[i];
        fill_pixel(dcs, i, quadrature, in_phase, 0.5, &mut phase, &mut amplitude, &mut flags);
    }
    PhaseMap::new(dcs.width(), dcs.height(), phase, amplitude, flags)
}

/// Two-sample estimator φ = tan⁻¹(S2 / S3), extended to the full circle with
/// the signs of both samples. S2 is the 90° plane and S3 the 0° plane.
pub fn phase_from_2dcs(dcs: &DcsFrameSet) -> Result<PhaseMap> {
    if dcs.num_samples() != 2 {
        return Err(Error::Contract(format!(
            "two-sample estimator needs 2 planes, got {}",
            dcs.num_samples()
        )));
    }
    let (s2, s3) = (&dcs.samples()[0], &dcs.samples()[1]);
    let n = s2.len();
    let mut phase = vec![0.0; n];
    let mut amplitude = vec![0.0; n];
    let mut flags = vec![PixelFlag::Valid; n];
    for i in 0..n {
        fill_pixel(dcs, i, s2[i], s3[i], 1.0, &mut phase, &mut amplitude, &mut flags);
    }
    PhaseMap::new(dcs.width(), dcs.height(), phase, amplitude, flags)
}

/// Dispatches on the plane count.
pub fn phase_from_dcs(dcs: &DcsFrameSet) -> Result<PhaseMap> {
    match dcs.num_samples() {
        4 => phase_from_4dcs(dcs),
        _ => phase_from_2dcs(dcs),
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn fill_pixel(
    dcs: &DcsFrameSet,
    i: usize,
    quadrature: f64,
    in_phase: f64,
    amplitude_scale: f64,
    phase: &mut [f64],
    amplitude: &mut [f64],
    flags: &mut [PixelFlag],
) {
    if !(quadrature.is_finite() && in_phase.is_finite()) || (quadrature == 0.0 && in_phase == 0.0) {
        flags[i] = PixelFlag::Invalid;
        return;
    }
    phase[i] = normalize_phase(quadrature.atan2(in_phase));
    amplitude[i] = amplitude_scale * quadrature.hypot(in_phase);
    if saturated(dcs, i) {
        flags[i] = PixelFlag::Saturated;
    }
}

/// d = φ / 2π · d_u. Output depths lie in [0, d_u); flags carry over.
pub fn depth_from_phase(phase: &PhaseMap, config: &ModulationConfig) -> Result<DepthMap> {
    let d_u = config.unambiguous_range();
    let depth = phase
        .phase
        .iter()
        .zip(&phase.flags)
        .map(|(p, f)| match f {
            PixelFlag::Invalid => 0.0,
            _ => wrap_into(p / TAU * d_u, d_u),
        })
        .collect();
    DepthMap::new(phase.width, phase.height, depth, phase.flags.clone())
}

/// Forward model of range ambiguity: every depth is reduced modulo d_u.
/// Flags are left untouched.
pub fn wrap_depth(true_depth: &DepthMap, config: &ModulationConfig) -> Result<DepthMap> {
    let d_u = config.unambiguous_range();
    let depth = true_depth
        .depths()
        .iter()
        .zip(true_depth.flags())
        .map(|(d, f)| {
            if *f == PixelFlag::Invalid || !d.is_finite() {
                0.0
            } else {
                wrap_into(*d, d_u)
            }
        })
        .collect();
    DepthMap::new(
        true_depth.width(),
        true_depth.height(),
        depth,
        true_depth.flags().to_vec(),
    )
}
