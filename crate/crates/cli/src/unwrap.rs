use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use itof_core::dualfreq::{consistency_unwrap, UnwrapParams};
use itof_core::io::{
    decode_bins, read_depth, read_pgm, write_depth, DepthScale, FrameRecord, Manifest, PlanePaths, MANIFEST_FILE,
};
use itof_core::merge::{bin_depth, regression_merge, segmentation_merge, MergeSummary};
use itof_core::oracle::OraclePredictor;
use itof_core::phase::wrap_depth;
use itof_core::sim::NoiseModel;
use itof_core::{DepthBinMap, DepthMap, ModulationConfig, PixelFlag};

use crate::error::{CliError, CliResult};
use crate::run::{write_json, write_run_manifest, RUN_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dualfreq,
    Regmerge,
    Segmerge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Source {
    #[value(name = "4")]
    Four,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Args, Serialize)]
pub struct UnwrapArgs {
    /// Dataset directory holding manifest.json.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Prediction directory with `<id>/pred_depth.pgm` (plus optional
    /// `<id>/pred_flags.pgm`) or `<id>/pred_bins.pgm`.
    #[arg(long, conflicts_with = "oracle")]
    pred: Option<PathBuf>,
    /// Built-in predictor: exact, binned or noisy:<sigma>.
    #[arg(long)]
    oracle: Option<String>,
    /// High-frequency capture to correct.
    #[arg(long, value_enum, default_value = "4")]
    source: Source,
    /// Output directory for corrected planes.
    #[arg(long)]
    out: PathBuf,
    /// Number of cycle classes for segmentation; defaults to the manifest's.
    #[arg(long)]
    num_bins: Option<u32>,
    /// Residual tolerance of the dual-frequency check, meters.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Saturation threshold d_sat override, meters.
    #[arg(long)]
    saturation_threshold: Option<f64>,
    /// Seed for noisy oracles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Per-frame entry of `corrected.json`.
#[derive(Debug, Serialize)]
struct CorrectedFrame {
    id: String,
    depth: PlanePaths,
    prediction: Option<PlanePaths>,
    report: MergeSummary,
}

#[derive(Debug, Serialize)]
struct CorrectedIndex {
    method: Method,
    frames: Vec<CorrectedFrame>,
}

pub const CORRECTED_INDEX: &str = "corrected.json";

enum Prediction {
    Depth(DepthMap),
    Bins(DepthBinMap),
}

pub fn load_dataset(dir: &Path) -> CliResult<Manifest> {
    let m = Manifest::load(&dir.join(MANIFEST_FILE))?;
    Ok(m)
}

fn ambiguous_paths(rec: &FrameRecord, source: Source) -> CliResult<&PlanePaths> {
    let p = match source {
        Source::Four => rec.ambiguous_4dcs.as_ref(),
        Source::Two => rec.ambiguous_2dcs.as_ref(),
    };
    p.ok_or_else(|| {
        CliError::Usage(format!(
            "frame {} has no {}-sample ambiguous plane",
            rec.id,
            if source == Source::Four { 4 } else { 2 }
        ))
    })
}

fn read_wrapped(root: &Path, p: &PlanePaths, scale: &DepthScale, cfg: &ModulationConfig) -> CliResult<DepthMap> {
    // Readings stored at the top of the range fold back into [0, d_u).
    Ok(wrap_depth(&read_depth(root, p, scale)?, cfg)?)
}

fn external_prediction(dir: &Path, rec: &FrameRecord, method: Method, m: &Manifest, num_bins: u32) -> CliResult<Prediction> {
    let frame_dir = dir.join(&rec.id);
    let shape_err = |what: &str, got: (usize, usize)| {
        CliError::Usage(format!(
            "{what} for frame {} is {}x{}, dataset is {}x{}",
            rec.id, got.0, got.1, m.width, m.height
        ))
    };
    if method == Method::Segmerge {
        let img = read_pgm(&frame_dir.join("pred_bins.pgm"))?;
        if img.shape() != m.shape() {
            return Err(shape_err("pred_bins.pgm", img.shape()));
        }
        return Ok(Prediction::Bins(decode_bins(&img, num_bins)?));
    }
    let depth_path = frame_dir.join("pred_depth.pgm");
    let flags_path = frame_dir.join("pred_flags.pgm");
    let depth = if flags_path.exists() {
        read_depth(
            &frame_dir,
            &PlanePaths {
                depth: "pred_depth.pgm".into(),
                flags: "pred_flags.pgm".into(),
            },
            &m.depth_scale,
        )?
    } else {
        let img = read_pgm(&depth_path)?;
        let flags = itof_core::io::PgmImage::new(img.width(), img.height(), 255, vec![0; img.width() * img.height()])
            .map_err(itof_core::Error::from)?;
        itof_core::io::decode_depth(&img, &flags, &m.depth_scale)?
    };
    if depth.shape() != m.shape() {
        return Err(shape_err("pred_depth.pgm", depth.shape()));
    }
    Ok(Prediction::Depth(depth))
}

fn histogram(depth: &DepthMap, d_u: f64) -> MergeSummary {
    let mut hist: Vec<u64> = Vec::new();
    let (mut invalid, mut saturated) = (0, 0);
    for (d, f) in depth.depths().iter().zip(depth.flags()) {
        match f {
            PixelFlag::Invalid => invalid += 1,
            _ => {
                if *f == PixelFlag::Saturated {
                    saturated += 1;
                }
                let c = (d / d_u).floor().max(0.0) as usize;
                if hist.len() <= c {
                    hist.resize(c + 1, 0);
                }
                hist[c] += 1;
            }
        }
    }
    MergeSummary {
        cycle_histogram: hist,
        saturated_pixel_count: saturated,
        invalid_pixel_count: invalid,
        fallback_pixel_count: 0,
    }
}

struct Context<'a> {
    args: &'a UnwrapArgs,
    manifest: &'a Manifest,
    high: ModulationConfig,
    oracle: Option<OraclePredictor>,
    num_bins: u32,
}

fn process(ctx: &Context, index: usize, rec: &FrameRecord) -> CliResult<CorrectedFrame> {
    let (args, m) = (ctx.args, ctx.manifest);
    let root = args.dataset.as_path();
    let scale = &m.depth_scale;
    let amb = read_wrapped(root, ambiguous_paths(rec, args.source)?, scale, &ctx.high)?;
    let frame_dir = args.out.join(&rec.id);
    let depth_paths = PlanePaths {
        depth: format!("{}/corrected_depth.pgm", rec.id),
        flags: format!("{}/corrected_flags.pgm", rec.id),
    };
    let mut prediction_paths = None;
    let (corrected, report) = if args.method == Method::Dualfreq {
        let low_paths = rec
            .ambiguous_low_4dcs
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("frame {} has no low-frequency plane", rec.id)))?;
        let low = read_wrapped(root, low_paths, scale, &m.config_low)?;
        let params = match args.tolerance {
            Some(t) => UnwrapParams::with_tolerance(t),
            None => UnwrapParams::from_noise(&NoiseModel::default(), &m.config_low),
        };
        let out = consistency_unwrap(&amb, &low, &ctx.high, &m.config_low, &params)?;
        let report = histogram(&out, ctx.high.unambiguous_range());
        (out, report)
    } else {
        let prediction = match (&args.pred, ctx.oracle) {
            (Some(dir), _) => external_prediction(dir, rec, args.method, m, ctx.num_bins)?,
            (None, Some(oracle)) => {
                let gt = read_depth(root, &rec.gt_depth, scale)?;
                let depth = oracle.predict(&gt, &ctx.high, args.seed.wrapping_add(index as u64))?;
                match args.method {
                    Method::Segmerge => Prediction::Bins(bin_depth(&depth, &ctx.high, ctx.num_bins)?),
                    _ => Prediction::Depth(depth),
                }
            }
            (None, None) => unreachable!("checked before processing"),
        };
        let merged = match &prediction {
            Prediction::Depth(p) => regression_merge(p, &amb, &ctx.high)?,
            Prediction::Bins(b) => segmentation_merge(b, &amb, &ctx.high)?,
        };
        // Keep the prediction as a depth map so evaluation can score it.
        let as_depth = match prediction {
            Prediction::Depth(p) => p,
            Prediction::Bins(b) => bins_to_depth(&b, &ctx.high)?,
        };
        let p = PlanePaths {
            depth: format!("{}/prediction_depth.pgm", rec.id),
            flags: format!("{}/prediction_flags.pgm", rec.id),
        };
        write_depth(&args.out, &p, &clamp_to_scale(&as_depth, scale)?, scale)?;
        prediction_paths = Some(p);
        (merged.corrected.clone(), merged.summary())
    };
    write_depth(&args.out, &depth_paths, &clamp_to_scale(&corrected, scale)?, scale)?;
    write_json(&frame_dir.join("merge_report.json"), &report)?;
    Ok(CorrectedFrame {
        id: rec.id.clone(),
        depth: depth_paths,
        prediction: prediction_paths,
        report,
    })
}

fn bins_to_depth(bins: &DepthBinMap, cfg: &ModulationConfig) -> CliResult<DepthMap> {
    let depth = bins
        .bins()
        .iter()
        .map(|b| itof_core::merge::bin_center(*b, cfg))
        .collect();
    Ok(DepthMap::new(bins.width(), bins.height(), depth, bins.flags().to_vec())?)
}

/// Depths beyond the storage range become invalid rather than failing the run.
fn clamp_to_scale(map: &DepthMap, scale: &DepthScale) -> CliResult<DepthMap> {
    let (w, h, depth, mut flags) = map.clone().into_parts();
    for (d, f) in depth.iter().zip(flags.iter_mut()) {
        if *d > scale.max_depth_m {
            *f = PixelFlag::Invalid;
        }
    }
    let depth = depth
        .iter()
        .zip(&flags)
        .map(|(d, f)| if *f == PixelFlag::Invalid { 0.0 } else { *d })
        .collect();
    Ok(DepthMap::new(w, h, depth, flags)?)
}

pub fn run(args: &UnwrapArgs) -> CliResult<()> {
    let manifest = load_dataset(&args.dataset)?;
    let mut high = manifest.config_high;
    if let Some(d_sat) = args.saturation_threshold {
        high = high.with_saturation_threshold(d_sat)?;
    }
    let oracle = args.oracle.as_deref().map(str::parse::<OraclePredictor>).transpose()?;
    if args.method != Method::Dualfreq && args.pred.is_none() && oracle.is_none() {
        return Err(CliError::Usage(format!(
            "--method {:?} needs --pred DIR or --oracle SPEC",
            args.method
        )));
    }
    let num_bins = args.num_bins.unwrap_or(manifest.num_bins);
    let ctx = Context {
        args,
        manifest: &manifest,
        high,
        oracle,
        num_bins,
    };
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    write_run_manifest(&args.out.join(RUN_FILE), "unwrap", args)?;
    let frames = manifest
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, rec)| process(&ctx, i, rec))
        .collect::<CliResult<Vec<_>>>()?;
    let index = CorrectedIndex {
        method: args.method,
        frames,
    };
    write_json(&args.out.join(CORRECTED_INDEX), &index)?;
    println!("{}", args.out.join(CORRECTED_INDEX).display());
    Ok(())
}
