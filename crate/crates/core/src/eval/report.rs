//! Metric report and its line-oriented `key=value` text form.
//!
//! ```text
//! rmse=0.0123
//! irmse=0.0011
//! sq_rel=0.0004
//! abs_rel=0.0019
//! prediction_accuracy=na
//! prediction_precision=na
//! correction_accuracy=99.1
//! correction_precision=98.7
//! valid_pixels=76800
//! ```
//!
//! Keys appear in the column order of the results table. `na` marks a column
//! with nothing to score. Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::KittiMetrics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub irmse: f64,
    pub sq_rel: f64,
    pub abs_rel: f64,
    pub prediction_accuracy: Option<f64>,
    pub prediction_precision: Option<f64>,
    pub correction_accuracy: f64,
    pub correction_precision: f64,
    pub valid_pixels: u64,
}

const KEYS: [&str; 9] = [
    "rmse",
    "irmse",
    "sq_rel",
    "abs_rel",
    "prediction_accuracy",
    "prediction_precision",
    "correction_accuracy",
    "correction_precision",
    "valid_pixels",
];

impl MetricReport {
    pub fn new(kitti: KittiMetrics, correction: (f64, f64), prediction: Option<(f64, f64)>) -> Self {
        MetricReport {
            rmse: kitti.rmse,
            irmse: kitti.irmse,
            sq_rel: kitti.sq_rel,
            abs_rel: kitti.abs_rel,
            prediction_accuracy: prediction.map(|p| p.0),
            prediction_precision: prediction.map(|p| p.1),
            correction_accuracy: correction.0,
            correction_precision: correction.1,
            valid_pixels: kitti.valid_pixels,
        }
    }

    /// Pixel-weighted mean of several reports. Optional columns are averaged
    /// over the reports that have them.
    pub fn aggregate(reports: &[MetricReport]) -> Option<MetricReport> {
        let total: u64 = reports.iter().map(|r| r.valid_pixels).sum();
        if total == 0 {
            return None;
        }
        let wmean = |f: &dyn Fn(&MetricReport) -> f64| {
            reports.iter().map(|r| f(r) * r.valid_pixels as f64).sum::<f64>() / total as f64
        };
        let wmean_opt = |f: &dyn Fn(&MetricReport) -> Option<f64>| {
            let (mut s, mut n) = (0.0, 0u64);
            for r in reports {
                if let Some(v) = f(r) {
                    s += v * r.valid_pixels as f64;
                    n += r.valid_pixels;
                }
            }
            (n > 0).then(|| s / n as f64)
        };
        // Root-mean-square columns are pooled on the squared scale.
        Some(MetricReport {
            rmse: wmean(&|r| r.rmse * r.rmse).sqrt(),
            irmse: wmean(&|r| r.irmse * r.irmse).sqrt(),
            sq_rel: wmean(&|r| r.sq_rel),
            abs_rel: wmean(&|r| r.abs_rel),
            prediction_accuracy: wmean_opt(&|r| r.prediction_accuracy),
            prediction_precision: wmean_opt(&|r| r.prediction_precision),
            correction_accuracy: wmean(&|r| r.correction_accuracy),
            correction_precision: wmean(&|r| r.correction_precision),
            valid_pixels: total,
        })
    }

    fn values(&self) -> [Option<f64>; 8] {
        [
            Some(self.rmse),
            Some(self.irmse),
            Some(self.sq_rel),
            Some(self.abs_rel),
            self.prediction_accuracy,
            self.prediction_precision,
            Some(self.correction_accuracy),
            Some(self.correction_precision),
        ]
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in KEYS.iter().zip(self.values()) {
            match v {
                Some(v) => writeln!(s, "{k}={v}").unwrap(),
                None => writeln!(s, "{k}=na").unwrap(),
            }
        }
        writeln!(s, "valid_pixels={}", self.valid_pixels).unwrap();
        s
    }
}

/// Parses the text form written by [`MetricReport::to_kv`].
pub fn parse_kv(text: &str) -> Result<MetricReport> {
    let mut seen: HashMap<&str, &str> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("line {}: expected key=value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Domain(format!("line {}: unknown key '{k}'", lineno + 1)));
        }
        if seen.insert(k, v).is_some() {
            return Err(Error::Domain(format!("line {}: duplicate key '{k}'", lineno + 1)));
        }
    }
    let get = |k: &str| seen.get(k).copied().ok_or_else(|| Error::Domain(format!("missing key '{k}'")));
    let num = |k: &str| -> Result<f64> {
        let raw = get(k)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::Domain(format!("{k}: '{raw}' is not a number")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Domain(format!("{k}: {v} must be finite and non-negative")));
        }
        Ok(v)
    };
    let opt = |k: &str| -> Result<Option<f64>> {
        if get(k)? == "na" {
            Ok(None)
        } else {
            num(k).map(Some)
        }
    };
    let pixels_raw = get("valid_pixels")?;
    let valid_pixels = pixels_raw
        .parse()
        .map_err(|_| Error::Domain(format!("valid_pixels: '{pixels_raw}' is not a count")))?;
    Ok(MetricReport {
        rmse: num("rmse")?,
        irmse: num("irmse")?,
        sq_rel: num("sq_rel")?,
        abs_rel: num("abs_rel")?,
        prediction_accuracy: opt("prediction_accuracy")?,
        prediction_precision: opt("prediction_precision")?,
        correction_accuracy: num("correction_accuracy")?,
        correction_precision: num("correction_precision")?,
        valid_pixels,
    })
}
