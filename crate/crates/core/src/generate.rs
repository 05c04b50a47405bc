//! Synthetic dataset generation.
//!
//! Each frame draws a scene, renders it and simulates single-shot 4-sample
//! captures at both carriers plus an optional 2-sample capture at the high
//! carrier. The reference depth comes from the dual-frequency unwrapper run
//! on a separate pair of captures averaged over `reference_averaging`
//! exposures, so far surfaces keep a usable reference. All captures are
//! quantized to the storage scale before use; without noise the reference
//! is reproducible bit for bit from the stored ambiguous planes.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dualfreq::{consistency_unwrap, UnwrapParams};
use crate::error::{Error, Result};
use crate::io::manifest::{write_frame, FrameData, Manifest, MANIFEST_FILE};
use crate::io::planes::{quantize, DepthScale};
use crate::io::split::{split_assignment, SplitRatios};
use crate::phase::{depth_from_phase, phase_from_dcs, wrap_depth};
use crate::sim::{frame_rng, render_scene, simulate_dcs, NoiseModel, SceneDistribution};
use crate::types::{DepthMap, ModulationConfig};

/// Which high-frequency ambiguous planes are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcsSelection {
    Four,
    Two,
    Both,
}

impl DcsSelection {
    pub fn four(self) -> bool {
        matches!(self, DcsSelection::Four | DcsSelection::Both)
    }

    pub fn two(self) -> bool {
        matches!(self, DcsSelection::Two | DcsSelection::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub n_frames: usize,
    pub distribution: SceneDistribution,
    pub config_high: ModulationConfig,
    pub config_low: ModulationConfig,
    pub noise: NoiseModel,
    pub depth_scale: DepthScale,
    pub dcs: DcsSelection,
    pub seed: u64,
    /// Exposures averaged for the reference captures.
    pub reference_averaging: u32,
    /// Residual tolerance of the reference unwrap. When absent it is three
    /// times the reference low-carrier noise of a 0.5-reflectivity surface at
    /// the distribution's maximum depth.
    pub unwrap_tolerance: Option<f64>,
}

impl GenerateConfig {
    pub fn new(n_frames: usize, seed: u64) -> Result<Self> {
        Ok(GenerateConfig {
            n_frames,
            distribution: SceneDistribution::default(),
            config_high: ModulationConfig::new(24e6)?,
            config_low: ModulationConfig::new(10e6)?,
            noise: NoiseModel::default(),
            depth_scale: DepthScale::default(),
            dcs: DcsSelection::Both,
            seed,
            reference_averaging: 16,
            unwrap_tolerance: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        self.noise.validate()?;
        if self.config_high.frequency() <= self.config_low.frequency() {
            return Err(Error::Contract("high carrier must exceed the low carrier".into()));
        }
        if self.distribution.max_depth > self.depth_scale.max_depth_m {
            return Err(Error::Contract(format!(
                "scenes reach {} m but depth planes store at most {} m",
                self.distribution.max_depth, self.depth_scale.max_depth_m
            )));
        }
        Ok(())
    }

    /// Number of depth classes covering the scene range at the high carrier.
    pub fn num_bins(&self) -> u32 {
        ((self.distribution.max_depth / self.config_high.unambiguous_range()).ceil() as u32).max(1)
    }

    fn reference_noise(&self) -> NoiseModel {
        self.noise.averaged(self.reference_averaging)
    }

    fn unwrap_params(&self) -> UnwrapParams {
        match self.unwrap_tolerance {
            Some(t) => UnwrapParams::with_tolerance(t),
            None => UnwrapParams::from_noise_at(
                &self.reference_noise(),
                &self.config_low,
                self.distribution.max_depth,
                0.5,
            ),
        }
    }
}

fn ambiguous(
    truth: &DepthMap,
    reflectivity: &[f64],
    config: &ModulationConfig,
    noise: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<DepthMap> {
    let dcs = simulate_dcs(truth, reflectivity, config, noise, samples, seed)?;
    depth_from_phase(&phase_from_dcs(&dcs)?, config)
}

/// Quantizes a wrapped map, folding readings that round up to `d_u` back
/// to the start of the cycle.
fn quantize_wrapped(map: &DepthMap, scale: &DepthScale, config: &ModulationConfig) -> Result<DepthMap> {
    let q = quantize(map, scale)?;
    quantize(&wrap_depth(&q, config)?, scale)
}

/// Simulates frame `index` in memory. Depth planes are already quantized to
/// the storage scale.
pub fn simulate_frame(cfg: &GenerateConfig, index: u64) -> Result<FrameData> {
    let mut rng = frame_rng(cfg.seed, index);
    let mut spec = cfg.distribution.sample(&mut rng);
    spec.rng_seed = rng.gen();
    let scene = render_scene(&spec)?;
    let (truth, refl) = (&scene.ground_truth, &scene.reflectivity);
    let seeds: [u64; 5] = rng.gen();
    let q = |m: DepthMap| quantize(&m, &cfg.depth_scale);
    let (hi, lo, scale) = (&cfg.config_high, &cfg.config_low, &cfg.depth_scale);
    let reference = cfg.reference_noise();
    let gt = consistency_unwrap(
        &quantize_wrapped(&ambiguous(truth, refl, hi, &reference, 4, seeds[0])?, scale, hi)?,
        &quantize_wrapped(&ambiguous(truth, refl, lo, &reference, 4, seeds[1])?, scale, lo)?,
        hi,
        lo,
        &cfg.unwrap_params(),
    )?;
    let amb4 = quantize_wrapped(&ambiguous(truth, refl, hi, &cfg.noise, 4, seeds[2])?, scale, hi)?;
    let amb_low = quantize_wrapped(&ambiguous(truth, refl, lo, &cfg.noise, 4, seeds[3])?, scale, lo)?;
    let amb2 = if cfg.dcs.two() {
        Some(quantize_wrapped(&ambiguous(truth, refl, hi, &cfg.noise, 2, seeds[4])?, scale, hi)?)
    } else {
        None
    };
    Ok(FrameData {
        gray: scene.ambient,
        gt_depth: q(gt)?,
        true_depth: Some(q(scene.ground_truth)?),
        ambiguous_4dcs: cfg.dcs.four().then_some(amb4),
        ambiguous_2dcs: amb2,
        ambiguous_low_4dcs: Some(amb_low),
    })
}

pub fn frame_id(index: usize) -> String {
    format!("{index:06}")
}

/// Writes `cfg.n_frames` frames and `manifest.json` under `out_dir`. Frames
/// are generated in parallel; the result does not depend on scheduling.
pub fn generate_dataset(cfg: &GenerateConfig, ratios: &SplitRatios, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let splits = split_assignment(cfg.n_frames, ratios, cfg.seed)?;
    let records = (0..cfg.n_frames)
        .into_par_iter()
        .map(|i| {
            let frame = simulate_frame(cfg, i as u64)?;
            write_frame(out_dir, &frame_id(i), splits[i], &frame, &cfg.depth_scale)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = Manifest::new(
        cfg.distribution.width,
        cfg.distribution.height,
        cfg.depth_scale,
        cfg.config_high,
        cfg.config_low,
        cfg.num_bins(),
        cfg.seed,
    );
    manifest.frames = records;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
