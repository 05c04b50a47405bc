//! Synthetic scenes and forward simulation of correlation captures.
//!
//! Scenes are built from a handful of analytic primitives drawn with a
//! z-buffer. Correlation planes follow the fundamental-harmonic model
//! `A·cos(φ − ψ)` with Gaussian read noise and a signal-proportional shot
//! noise term, clipped at the ADC rail.

use std::f64::consts::TAU;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::wrap_into;
use crate::types::{
    DcsFrameSet, DepthMap, GrayImage, ModulationConfig, PixelFlag, FOUR_PHASE_ORDER,
    GRAY_MAX, TWO_PHASE_ORDER,
};

/// Distance below which the inverse-square signal falloff is held constant.
const MIN_SIGNAL_DISTANCE: f64 = 0.1;

/// Distance at which ambient intensity drops to half of its near-field value.
const AMBIENT_HALF_DISTANCE: f64 = 10.0;

/// Axis-aligned region in normalized image coordinates, `0 <= x0 < x1 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub const FULL: Region = Region {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    fn validate(&self) -> Result<()> {
        let ok = |a: f64, b: f64| (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a < b;
        if !(ok(self.x0, self.x1) && ok(self.y0, self.y1)) {
            return Err(Error::Contract(format!("bad region {self:?}")));
        }
        Ok(())
    }

    /// Local coordinates in [0, 1)² if the point lies inside.
    fn local(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        if u < self.x0 || u >= self.x1 || v < self.y0 || v >= self.y1 {
            return None;
        }
        Some(((u - self.x0) / (self.x1 - self.x0), (v - self.y0) / (self.y1 - self.y0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Shape {
    /// Slanted plane, depth linear from `depth_near` (left) to `depth_far` (right).
    Plane,
    /// Fronto-parallel face at `depth_near`.
    Box,
    /// Cap inscribed in the region, apex at `depth_near`, rim at `depth_far`.
    SphereCap,
    /// `steps` flat treads, depth increasing left to right.
    Staircase { steps: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub region: Region,
    pub depth_near: f64,
    pub depth_far: f64,
    pub reflectivity: f64,
}

impl Primitive {
    fn depth_at(&self, u: f64, v: f64) -> Option<f64> {
        let (s, t) = self.region.local(u, v)?;
        let span = self.depth_far - self.depth_near;
        match self.shape {
            Shape::Plane => Some(self.depth_near + span * s),
            Shape::Box => Some(self.depth_near),
            Shape::SphereCap => {
                let (dx, dy) = (2.0 * s - 1.0, 2.0 * t - 1.0);
                let r2 = dx * dx + dy * dy;
                (r2 <= 1.0).then(|| self.depth_far - span * (1.0 - r2).sqrt())
            }
            Shape::Staircase { steps } => {
                let steps = steps.max(1);
                let k = ((s * f64::from(steps)) as u32).min(steps - 1);
                let frac = if steps == 1 {
                    0.0
                } else {
                    f64::from(k) / f64::from(steps - 1)
                };
                Some(self.depth_near + span * frac)
            }
        }
    }
}

/// Full description of one synthetic scene. Rendering is a pure function of
/// this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub primitives: Vec<Primitive>,
    pub max_depth: f64,
    pub ambient_level: f64,
    /// Gaussian noise on the gray image, in 12-bit counts.
    #[serde(default)]
    pub gray_noise_sigma: f64,
    pub rng_seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Contract("scene must have a non-empty frame".into()));
        }
        if self.primitives.is_empty() {
            return Err(Error::Contract("scene has no primitives".into()));
        }
        if !(self.max_depth.is_finite() && self.max_depth > 0.0) {
            return Err(Error::Domain(format!("max_depth {} must be positive", self.max_depth)));
        }
        if !(0.0..=1.0).contains(&self.ambient_level) {
            return Err(Error::Domain("ambient_level must lie in [0, 1]".into()));
        }
        if !(self.gray_noise_sigma >= 0.0) {
            return Err(Error::Domain("gray noise must be non-negative".into()));
        }
        for p in &self.primitives {
            p.region.validate()?;
            let in_range = |d: f64| d > 0.0 && d <= self.max_depth;
            if !(in_range(p.depth_near) && in_range(p.depth_far) && p.depth_near <= p.depth_far) {
                return Err(Error::Contract(format!(
                    "primitive depths {}..{} outside (0, {}]",
                    p.depth_near, p.depth_far, self.max_depth
                )));
            }
            if !(0.0..=1.0).contains(&p.reflectivity) {
                return Err(Error::Contract("reflectivity must lie in [0, 1]".into()));
            }
            if let Shape::Staircase { steps: 0 } = p.shape {
                return Err(Error::Contract("staircase needs at least one step".into()));
            }
        }
        Ok(())
    }
}

/// Output of [`render_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    /// True depth. Pixels no primitive covers are invalid (no return) and
    /// hold `max_depth`.
    pub ground_truth: DepthMap,
    pub ambient: GrayImage,
    pub reflectivity: Vec<f64>,
}

pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut depth = vec![spec.max_depth; w * h];
    let mut flags = vec![PixelFlag::Invalid; w * h];
    let mut reflectivity = vec![0.0; w * h];
    for y in 0..h {
        let v = (y as f64 + 0.5) / h as f64;
        for x in 0..w {
            let u = (x as f64 + 0.5) / w as f64;
            let i = y * w + x;
            for p in &spec.primitives {
                if let Some(d) = p.depth_at(u, v) {
                    if flags[i] == PixelFlag::Invalid || d < depth[i] {
                        depth[i] = d;
                        flags[i] = PixelFlag::Valid;
                        reflectivity[i] = p.reflectivity;
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let gray_noise = Normal::new(0.0, spec.gray_noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let intensity = depth
        .iter()
        .zip(&reflectivity)
        .map(|(d, rho)| {
            let falloff = 1.0 / (1.0 + (d / AMBIENT_HALF_DISTANCE).powi(2));
            let mut v = f64::from(GRAY_MAX) * spec.ambient_level * rho * falloff;
            if spec.gray_noise_sigma > 0.0 {
                v += gray_noise.sample(&mut rng);
            }
            v.round().clamp(0.0, f64::from(GRAY_MAX)) as u16
        })
        .collect();

    Ok(RenderedScene {
        ground_truth: DepthMap::new(w, h, depth, flags)?,
        ambient: GrayImage::new(w, h, intensity)?,
        reflectivity,
    })
}

/// Sensor noise and saturation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Shot noise standard deviation per √(signal count).
    pub shot_noise_scale: f64,
    /// Additive Gaussian read noise, in correlation counts.
    pub read_noise_sigma: f64,
    /// Surfaces with reflectivity above this behave as retro-reflectors and
    /// drive the pixel into the ADC rail.
    pub saturation_reflectivity_threshold: f64,
    /// Correlation amplitude of a unit-reflectivity surface at 1 m.
    pub signal_gain: f64,
    /// ADC rail; samples are clipped to ±full_scale.
    pub full_scale: f64,
}

impl Default for NoiseModel {
    /// SNR ≈ 100 for a 0.5-reflectivity surface at 5 m.
    fn default() -> Self {
        NoiseModel {
            shot_noise_scale: 0.03,
            read_noise_sigma: 0.1,
            saturation_reflectivity_threshold: 0.95,
            signal_gain: 1000.0,
            full_scale: 2000.0,
        }
    }
}

impl NoiseModel {
    /// Ideal sensor: no noise, no clipping, no retro-reflectors.
    pub fn noise_free() -> Self {
        NoiseModel {
            shot_noise_scale: 0.0,
            read_noise_sigma: 0.0,
            saturation_reflectivity_threshold: 1.0,
            full_scale: f64::MAX,
            ..NoiseModel::default()
        }
    }

    /// Noise of the mean of `frames` independent captures.
    pub fn averaged(&self, frames: u32) -> Self {
        let k = 1.0 / f64::from(frames.max(1)).sqrt();
        NoiseModel {
            shot_noise_scale: self.shot_noise_scale * k,
            read_noise_sigma: self.read_noise_sigma * k,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.shot_noise_scale,
            self.read_noise_sigma,
            self.saturation_reflectivity_threshold,
            self.signal_gain,
            self.full_scale,
        ];
        if fields.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("noise parameters must be non-negative: {self:?}")));
        }
        if self.saturation_reflectivity_threshold > 1.0 {
            return Err(Error::Domain("saturation reflectivity threshold must lie in [0, 1]".into()));
        }
        if self.full_scale == 0.0 {
            return Err(Error::Domain("full scale must be positive".into()));
        }
        Ok(())
    }

    /// Correlation amplitude of a surface, before clipping.
    pub fn amplitude(&self, depth: f64, reflectivity: f64) -> f64 {
        if reflectivity > self.saturation_reflectivity_threshold {
            return 4.0 * self.full_scale;
        }
        let d = depth.max(MIN_SIGNAL_DISTANCE);
        self.signal_gain * reflectivity / (d * d)
    }

    /// Per-sample noise standard deviation at a given amplitude.
    pub fn sample_sigma(&self, amplitude: f64) -> f64 {
        (self.read_noise_sigma.powi(2) + self.shot_noise_scale.powi(2) * amplitude).sqrt()
    }

    /// First-order depth noise of an unsaturated pixel.
    pub fn depth_sigma(
        &self,
        depth: f64,
        reflectivity: f64,
        config: &ModulationConfig,
        num_samples: usize,
    ) -> f64 {
        let a = self.amplitude(depth, reflectivity);
        if a == 0.0 {
            return f64::INFINITY;
        }
        let sigma = self.sample_sigma(a);
        // Differential pairs double the signal and add the noise of two samples.
        let phase_sigma = if num_samples == 4 {
            sigma / (std::f64::consts::SQRT_2 * a)
        } else {
            sigma / a
        };
        config.unambiguous_range() / TAU * phase_sigma
    }
}

/// Forward-simulates one capture of `num_samples` correlation planes.
pub fn simulate_dcs(
    ground_truth: &DepthMap,
    reflectivity: &[f64],
    config: &ModulationConfig,
    noise: &NoiseModel,
    num_samples: usize,
    rng_seed: u64,
) -> Result<DcsFrameSet> {
    let phases = match num_samples {
        4 => FOUR_PHASE_ORDER.to_vec(),
        2 => TWO_PHASE_ORDER.to_vec(),
        k => return Err(Error::Contract(format!("DCS captures use 2 or 4 samples, got {k}"))),
    };
    if reflectivity.len() != ground_truth.len() {
        return Err(Error::Contract(format!(
            "reflectivity has {} values for {} pixels",
            reflectivity.len(),
            ground_truth.len()
        )));
    }
    noise.validate()?;
    let d_u = config.unambiguous_range();
    let n = ground_truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut planes = vec![vec![0.0; n]; num_samples];
    // cos ψ and sin ψ for each plane, exact at the cardinal angles.
    let trig: Vec<(f64, f64)> = phases
        .iter()
        .map(|p| match p.degrees() {
            0 => (1.0, 0.0),
            90 => (0.0, 1.0),
            180 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        })
        .collect();
    for i in 0..n {
        let (d, flag) = (ground_truth.depths()[i], ground_truth.flags()[i]);
        let (amplitude, phi) = if flag == PixelFlag::Invalid {
            (0.0, 0.0)
        } else {
            (noise.amplitude(d, reflectivity[i]), TAU * wrap_into(d, d_u) / d_u)
        };
        let (cos_phi, sin_phi) = (phi.cos(), phi.sin());
        let sigma = noise.sample_sigma(amplitude);
        for (plane, (cos_psi, sin_psi)) in planes.iter_mut().zip(&trig) {
            let clean = amplitude * (cos_phi * cos_psi + sin_phi * sin_psi);
            let noisy = if sigma > 0.0 {
                clean + sigma * standard_normal(&mut rng)
            } else {
                clean
            };
            plane[i] = noisy.clamp(-noise.full_scale, noise.full_scale);
        }
    }
    DcsFrameSet::new(
        ground_truth.width(),
        ground_truth.height(),
        planes,
        config.frequency(),
        phases,
        Some(noise.full_scale),
    )
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Seeded RNG stream for frame `index` of a run with `master_seed`.
/// Streams are independent of generation order, so parallel and serial
/// generation agree.
pub fn frame_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Random scene family used by dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDistribution {
    pub width: usize,
    pub height: usize,
    /// Deepest surface the distribution places.
    pub max_depth: f64,
    pub min_depth: f64,
    pub min_objects: usize,
    pub max_objects: usize,
    /// Probability that a frame contains one retro-reflective object.
    pub retro_probability: f64,
    pub gray_noise_sigma: f64,
}

impl Default for SceneDistribution {
    fn default() -> Self {
        SceneDistribution {
            width: 320,
            height: 240,
            max_depth: 22.0,
            min_depth: 0.8,
            min_objects: 3,
            max_objects: 7,
            retro_probability: 0.2,
            gray_noise_sigma: 4.0,
        }
    }
}

impl SceneDistribution {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Contract("scene distribution needs a non-empty frame".into()));
        }
        if !(self.min_depth > 0.0 && self.min_depth < self.max_depth) {
            return Err(Error::Domain("need 0 < min_depth < max_depth".into()));
        }
        if self.min_objects > self.max_objects {
            return Err(Error::Domain("min_objects exceeds max_objects".into()));
        }
        if !(0.0..=1.0).contains(&self.retro_probability) {
            return Err(Error::Domain("retro probability must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Draws one scene: a far background wall plus a random set of objects.
    pub fn sample(&self, rng: &mut impl RngCore) -> SceneSpec {
        let (lo, hi) = (self.min_depth, self.max_depth);
        let mut primitives = Vec::new();
        let wall_near = rng.gen_range(0.55 * hi..0.9 * hi);
        let wall_far = rng.gen_range(wall_near..=hi);
        primitives.push(Primitive {
            shape: Shape::Plane,
            region: Region::FULL,
            depth_near: wall_near,
            depth_far: wall_far,
            reflectivity: rng.gen_range(0.3..0.8),
        });
        let count = rng.gen_range(self.min_objects..=self.max_objects);
        for _ in 0..count {
            let shape = match rng.gen_range(0..4) {
                0 => Shape::Plane,
                1 => Shape::Box,
                2 => Shape::SphereCap,
                _ => Shape::Staircase {
                    steps: rng.gen_range(2..=6),
                },
            };
            let w = rng.gen_range(0.1..0.5);
            let h = rng.gen_range(0.1..0.6);
            let x0 = rng.gen_range(0.0..1.0 - w);
            let y0 = rng.gen_range(0.0..1.0 - h);
            let near = rng.gen_range(lo..hi * 0.85);
            let far = (near + rng.gen_range(0.0..0.5 * (hi - near))).min(hi);
            primitives.push(Primitive {
                shape,
                region: Region {
                    x0,
                    y0,
                    x1: x0 + w,
                    y1: y0 + h,
                },
                depth_near: near,
                depth_far: far,
                reflectivity: rng.gen_range(0.2..0.9),
            });
        }
        if rng.gen_bool(self.retro_probability) {
            let (w, h) = (rng.gen_range(0.03..0.1), rng.gen_range(0.03..0.1));
            let x0 = rng.gen_range(0.0..1.0 - w);
            let y0 = rng.gen_range(0.0..1.0 - h);
            let d = rng.gen_range(lo..hi * 0.6);
            primitives.push(Primitive {
                shape: Shape::Box,
                region: Region {
                    x0,
                    y0,
                    x1: x0 + w,
                    y1: y0 + h,
                },
                depth_near: d,
                depth_far: d,
                reflectivity: 1.0,
            });
        }
        SceneSpec {
            width: self.width,
            height: self.height,
            primitives,
            max_depth: hi,
            ambient_level: rng.gen_range(0.5..1.0),
            gray_noise_sigma: self.gray_noise_sigma,
            rng_seed: rng.next_u64(),
        }
    }
}
