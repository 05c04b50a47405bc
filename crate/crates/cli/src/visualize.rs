//! Side-by-side 8-bit PGM panels: gray image, reference depth, ambiguous
//! depth and (optionally) corrected depth.
//!
//! Depth panels use a fixed linear ramp over [0, max_depth]: near is bright,
//! far is dark, and pixels without a reading are black.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use itof_core::io::{decode_gray, read_depth, read_pgm, write_pgm, PgmImage, PlanePaths};
use itof_core::{DepthMap, GrayImage, PixelFlag, GRAY_MAX};

use crate::error::{CliError, CliResult};
use crate::run::write_run_manifest;
use crate::unwrap::load_dataset;

const GAP: usize = 4;

#[derive(Debug, Args, Serialize)]
pub struct VisualizeArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Frame id; defaults to the first frame.
    #[arg(long)]
    frame: Option<String>,
    /// Output directory of `unwrap`, to add the corrected panel.
    #[arg(long)]
    corrected: Option<PathBuf>,
    /// Depth mapped to the darkest ramp value, meters.
    #[arg(long, default_value_t = 25.0)]
    max_depth: f64,
    /// Output PGM file.
    #[arg(long)]
    out: PathBuf,
}

/// Ramp value of one depth pixel.
pub fn ramp(depth: f64, flag: PixelFlag, max_depth: f64) -> u16 {
    if flag == PixelFlag::Invalid {
        return 0;
    }
    let t = (depth / max_depth).clamp(0.0, 1.0);
    (255.0 - 254.0 * t).round() as u16
}

fn depth_panel(map: &DepthMap, max_depth: f64) -> Vec<u16> {
    map.depths()
        .iter()
        .zip(map.flags())
        .map(|(d, f)| ramp(*d, *f, max_depth))
        .collect()
}

fn gray_panel(g: &GrayImage) -> Vec<u16> {
    g.intensities()
        .iter()
        .map(|v| (u32::from(*v) * 255 / u32::from(GRAY_MAX)) as u16)
        .collect()
}

pub fn run(args: &VisualizeArgs) -> CliResult<()> {
    if !(args.max_depth.is_finite() && args.max_depth > 0.0) {
        return Err(CliError::Usage("--max-depth must be positive".into()));
    }
    let m = load_dataset(&args.dataset)?;
    let rec = match &args.frame {
        Some(id) => m.frames.iter().find(|f| &f.id == id),
        None => m.frames.first(),
    }
    .ok_or_else(|| CliError::Usage("frame not found in manifest".into()))?;
    let root = args.dataset.as_path();
    let scale = &m.depth_scale;
    let mut panels = vec![gray_panel(&decode_gray(&read_pgm(&root.join(&rec.gray))?)?)];
    panels.push(depth_panel(&read_depth(root, &rec.gt_depth, scale)?, args.max_depth));
    if let Some(p) = rec.ambiguous_4dcs.as_ref().or(rec.ambiguous_2dcs.as_ref()) {
        panels.push(depth_panel(&read_depth(root, p, scale)?, args.max_depth));
    }
    if let Some(dir) = &args.corrected {
        let p = PlanePaths {
            depth: format!("{}/corrected_depth.pgm", rec.id),
            flags: format!("{}/corrected_flags.pgm", rec.id),
        };
        panels.push(depth_panel(&read_depth(dir, &p, scale)?, args.max_depth));
    }
    let (w, h) = m.shape();
    let total_w = panels.len() * w + (panels.len() - 1) * GAP;
    let mut canvas = vec![0u16; total_w * h];
    for (k, panel) in panels.iter().enumerate() {
        let x0 = k * (w + GAP);
        for y in 0..h {
            canvas[y * total_w + x0..y * total_w + x0 + w].copy_from_slice(&panel[y * w..(y + 1) * w]);
        }
    }
    let img = PgmImage::new(total_w, h, 255, canvas).map_err(itof_core::Error::from)?;
    write_pgm(&args.out, &img)?;
    write_run_manifest(&args.out.with_extension("run.json"), "visualize", args)?;
    println!("{}", args.out.display());
    Ok(())
}
