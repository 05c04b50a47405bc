use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use itof_core::eval::{accuracy_precision, kitti_metrics, MetricReport};
use itof_core::io::{read_depth, FrameRecord, Manifest, PlanePaths, Split};
use itof_core::{DepthMap, Error};

use crate::error::{CliError, CliResult};
use crate::run::{write_json, write_run_manifest};
use crate::unwrap::{load_dataset, Source};

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Output directory of `unwrap`.
    #[arg(long, required_unless_present = "baseline", conflicts_with = "baseline")]
    corrected: Option<PathBuf>,
    /// Score an ambiguous capture directly, without correction.
    #[arg(long, value_enum)]
    baseline: Option<Source>,
    /// Report file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Error bound for correction accuracy, meters.
    #[arg(long, default_value_t = 0.05)]
    correction_threshold: f64,
    /// Error bound for prediction accuracy, meters; defaults to half the
    /// unambiguous range (the prediction picks the right cycle).
    #[arg(long)]
    prediction_threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    splits: BTreeMap<String, MetricReport>,
    aggregate: Option<MetricReport>,
    frames_scored: usize,
    frames_skipped: Vec<String>,
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Val => "val",
        Split::Test => "test",
    }
}

struct Thresholds {
    correction: f64,
    prediction: f64,
}

fn score_frame(
    args: &EvaluateArgs,
    m: &Manifest,
    rec: &FrameRecord,
    t: &Thresholds,
) -> CliResult<Option<MetricReport>> {
    let root = args.dataset.as_path();
    let gt = read_depth(root, &rec.gt_depth, &m.depth_scale)?;
    let (test, prediction): (DepthMap, Option<DepthMap>) = match (&args.corrected, args.baseline) {
        (Some(dir), _) => {
            let test = read_depth(dir, &plane(&rec.id, "corrected"), &m.depth_scale)?;
            let pp = plane(&rec.id, "prediction");
            let prediction = if dir.join(&pp.depth).exists() {
                Some(read_depth(dir, &pp, &m.depth_scale)?)
            } else {
                None
            };
            (test, prediction)
        }
        (None, Some(source)) => {
            let p = match source {
                Source::Four => rec.ambiguous_4dcs.as_ref(),
                Source::Two => rec.ambiguous_2dcs.as_ref(),
            }
            .ok_or_else(|| CliError::Usage(format!("frame {} lacks the requested ambiguous plane", rec.id)))?;
            (read_depth(root, p, &m.depth_scale)?, None)
        }
        (None, None) => unreachable!("clap requires one of --corrected/--baseline"),
    };
    if test.shape() != gt.shape() {
        return Err(CliError::Usage(format!("frame {}: corrected plane has the wrong shape", rec.id)));
    }
    let kitti = match kitti_metrics(&gt, &test) {
        Ok(k) => k,
        Err(Error::EmptyValidSet) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let correction = accuracy_precision(&gt, &test, t.correction)?;
    let prediction = match prediction {
        Some(p) => match accuracy_precision(&gt, &p, t.prediction) {
            Ok(v) => Some(v),
            Err(Error::EmptyValidSet) => None,
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    Ok(Some(MetricReport::new(kitti, correction, prediction)))
}

fn plane(id: &str, name: &str) -> PlanePaths {
    PlanePaths {
        depth: format!("{id}/{name}_depth.pgm"),
        flags: format!("{id}/{name}_flags.pgm"),
    }
}

fn print_table(report: &EvaluationReport) {
    let opt = |v: Option<f64>| v.map_or("na".to_string(), |v| format!("{v:.2}"));
    println!(
        "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>10}",
        "split", "rmse", "irmse", "sq_rel", "abs_rel", "pred_acc", "pred_prec", "corr_acc", "corr_prec", "pixels"
    );
    let rows = report
        .splits
        .iter()
        .map(|(k, v)| (k.as_str(), v))
        .chain(report.aggregate.as_ref().map(|a| ("all", a)));
    for (name, r) in rows {
        println!(
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>9} {:>9.2} {:>9.2} {:>10}",
            name,
            r.rmse,
            r.irmse,
            r.sq_rel,
            r.abs_rel,
            opt(r.prediction_accuracy),
            opt(r.prediction_precision),
            r.correction_accuracy,
            r.correction_precision,
            r.valid_pixels
        );
    }
}

fn kv_path(out: &Path) -> PathBuf {
    out.with_extension("kv")
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let m = load_dataset(&args.dataset)?;
    let t = Thresholds {
        correction: args.correction_threshold,
        prediction: args
            .prediction_threshold
            .unwrap_or(m.config_high.unambiguous_range() / 2.0),
    };
    let scored = m
        .frames
        .par_iter()
        .map(|rec| score_frame(args, &m, rec, &t).map(|r| (rec, r)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut by_split: BTreeMap<String, Vec<MetricReport>> = BTreeMap::new();
    let mut all = Vec::new();
    let mut skipped = Vec::new();
    for (rec, r) in scored {
        match r {
            Some(r) => {
                by_split.entry(split_name(rec.split).to_string()).or_default().push(r);
                all.push(r);
            }
            None => skipped.push(rec.id.clone()),
        }
    }
    let report = EvaluationReport {
        splits: by_split
            .into_iter()
            .filter_map(|(k, v)| MetricReport::aggregate(&v).map(|a| (k, a)))
            .collect(),
        aggregate: MetricReport::aggregate(&all),
        frames_scored: all.len(),
        frames_skipped: skipped,
    };
    write_json(&args.out, &report)?;
    if let Some(a) = &report.aggregate {
        let kv = kv_path(&args.out);
        std::fs::write(&kv, a.to_kv()).map_err(|e| CliError::io(&kv, e))?;
    }
    write_run_manifest(&args.out.with_extension("run.json"), "evaluate", args)?;
    print_table(&report);
    Ok(())
}
