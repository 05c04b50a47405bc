//! Dataset manifest (`manifest.json`) and per-frame plane files.
//!
//! All paths in a manifest are relative to the directory holding it and may
//! not climb out of it.

use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pgm::{self, PgmImage};
use super::planes::{decode_depth, decode_gray, encode_depth, encode_gray, DepthScale};
use crate::error::{check_shape, Error, Result};
use crate::types::{DepthMap, GrayImage, ModulationConfig};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Depth plane plus its flag plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanePaths {
    pub depth: String,
    pub flags: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub id: String,
    pub split: Split,
    pub gray: String,
    /// Dual-frequency reference depth.
    pub gt_depth: PlanePaths,
    /// Rendered scene depth before any sensor effects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_depth: Option<PlanePaths>,
    /// High-frequency ambiguous depth from four samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguous_4dcs: Option<PlanePaths>,
    /// High-frequency ambiguous depth from two samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguous_2dcs: Option<PlanePaths>,
    /// Low-frequency ambiguous depth from four samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguous_low_4dcs: Option<PlanePaths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_bins: Option<String>,
}

impl FrameRecord {
    fn paths(&self) -> Vec<&str> {
        let mut v = vec![self.gray.as_str(), &self.gt_depth.depth, &self.gt_depth.flags];
        for p in [
            &self.true_depth,
            &self.ambiguous_4dcs,
            &self.ambiguous_2dcs,
            &self.ambiguous_low_4dcs,
        ]
        .into_iter()
        .flatten()
        {
            v.push(&p.depth);
            v.push(&p.flags);
        }
        v.extend(self.predicted_depth.as_deref());
        v.extend(self.predicted_bins.as_deref());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub width: usize,
    pub height: usize,
    pub depth_scale: DepthScale,
    /// Redundant with `depth_scale`; kept so readers need no arithmetic.
    pub meters_per_count: f64,
    pub gray_bits: u32,
    pub config_high: ModulationConfig,
    pub config_low: ModulationConfig,
    pub num_bins: u32,
    pub seed: u64,
    pub frames: Vec<FrameRecord>,
}

impl Manifest {
    pub fn new(
        width: usize,
        height: usize,
        depth_scale: DepthScale,
        config_high: ModulationConfig,
        config_low: ModulationConfig,
        num_bins: u32,
        seed: u64,
    ) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            width,
            height,
            depth_scale,
            meters_per_count: depth_scale.meters_per_count(),
            gray_bits: 12,
            config_high,
            config_low,
            num_bins,
            seed,
            frames: Vec::new(),
        }
    }

    /// Parses and checks everything that does not need the filesystem.
    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Manifest(msg));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("unsupported format version {}", self.format_version));
        }
        if self.width == 0 || self.height == 0 || self.width > pgm::MAX_DIMENSION || self.height > pgm::MAX_DIMENSION {
            return bad(format!("bad frame size {}x{}", self.width, self.height));
        }
        DepthScale::new(self.depth_scale.max_depth_m)?;
        let mpc = self.depth_scale.meters_per_count();
        if !((self.meters_per_count - mpc).abs() <= 1e-12 * mpc) {
            return bad(format!(
                "meters_per_count {} disagrees with max depth {}",
                self.meters_per_count, self.depth_scale.max_depth_m
            ));
        }
        if self.gray_bits != 12 {
            return bad(format!("gray_bits must be 12, got {}", self.gray_bits));
        }
        if self.config_high.frequency() <= self.config_low.frequency() {
            return bad("config_high must use the higher frequency".into());
        }
        if self.num_bins == 0 || self.num_bins > 256 {
            return bad(format!("num_bins {} outside 1..=256", self.num_bins));
        }
        let mut ids = std::collections::HashSet::new();
        for f in &self.frames {
            if f.id.is_empty() || !f.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("frame id '{}' must be [A-Za-z0-9_-]+", f.id));
            }
            if !ids.insert(f.id.as_str()) {
                return bad(format!("duplicate frame id '{}'", f.id));
            }
            for p in f.paths() {
                check_relative(p)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        write_file(path, text.as_bytes())
    }

    /// Checked, pretty-printed JSON.
    pub fn to_json(&self) -> Result<String> {
        self.check()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Decodes every referenced plane and checks its shape against the
    /// manifest.
    pub fn validate_files(&self, root: &Path) -> Result<()> {
        for f in &self.frames {
            for p in f.paths() {
                let img = read_pgm(&root.join(p))?;
                if img.shape() != self.shape() {
                    return Err(Error::Manifest(format!(
                        "frame {}: {p} is {}x{}, manifest says {}x{}",
                        f.id,
                        img.width(),
                        img.height(),
                        self.width,
                        self.height
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn frames_in(&self, split: Split) -> impl Iterator<Item = &FrameRecord> {
        self.frames.iter().filter(move |f| f.split == split)
    }
}

fn check_relative(p: &str) -> Result<()> {
    let path = Path::new(p);
    let ok = !p.is_empty()
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
    if !ok {
        return Err(Error::Manifest(format!("path '{p}' must be relative and stay inside the dataset")));
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(pgm::decode(&bytes)?)
}

pub fn write_pgm(path: &Path, img: &PgmImage) -> Result<()> {
    write_file(path, &pgm::encode(img))
}

pub fn write_depth(root: &Path, paths: &PlanePaths, map: &DepthMap, scale: &DepthScale) -> Result<()> {
    let (d, f) = encode_depth(map, scale)?;
    write_pgm(&root.join(&paths.depth), &d)?;
    write_pgm(&root.join(&paths.flags), &f)
}

pub fn read_depth(root: &Path, paths: &PlanePaths, scale: &DepthScale) -> Result<DepthMap> {
    let d = read_pgm(&root.join(&paths.depth))?;
    let f = read_pgm(&root.join(&paths.flags))?;
    decode_depth(&d, &f, scale)
}

/// In-memory planes of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    pub gray: GrayImage,
    pub gt_depth: DepthMap,
    pub true_depth: Option<DepthMap>,
    pub ambiguous_4dcs: Option<DepthMap>,
    pub ambiguous_2dcs: Option<DepthMap>,
    pub ambiguous_low_4dcs: Option<DepthMap>,
}

impl FrameData {
    pub fn shape(&self) -> (usize, usize) {
        self.gray.shape()
    }

    fn check_shapes(&self) -> Result<()> {
        let s = self.shape();
        check_shape(s, self.gt_depth.shape())?;
        for m in self.optional_maps().into_iter().flatten() {
            check_shape(s, m.shape())?;
        }
        Ok(())
    }

    fn optional_maps(&self) -> [Option<&DepthMap>; 4] {
        [
            self.true_depth.as_ref(),
            self.ambiguous_4dcs.as_ref(),
            self.ambiguous_2dcs.as_ref(),
            self.ambiguous_low_4dcs.as_ref(),
        ]
    }
}

fn plane_paths(dir: &str, name: &str) -> PlanePaths {
    PlanePaths {
        depth: format!("{dir}/{name}_depth.pgm"),
        flags: format!("{dir}/{name}_flags.pgm"),
    }
}

/// Writes a frame under `root/frames/<id>/` and returns its record.
pub fn write_frame(root: &Path, id: &str, split: Split, frame: &FrameData, scale: &DepthScale) -> Result<FrameRecord> {
    frame.check_shapes()?;
    let dir = format!("frames/{id}");
    let gray = format!("{dir}/gray.pgm");
    write_pgm(&root.join(&gray), &encode_gray(&frame.gray)?)?;
    let write_opt = |name: &str, map: Option<&DepthMap>| -> Result<Option<PlanePaths>> {
        match map {
            None => Ok(None),
            Some(m) => {
                let p = plane_paths(&dir, name);
                write_depth(root, &p, m, scale)?;
                Ok(Some(p))
            }
        }
    };
    let gt_depth = write_opt("gt", Some(&frame.gt_depth))?.expect("gt plane always written");
    let record = FrameRecord {
        id: id.to_string(),
        split,
        gray,
        gt_depth,
        true_depth: write_opt("true", frame.true_depth.as_ref())?,
        ambiguous_4dcs: write_opt("amb4", frame.ambiguous_4dcs.as_ref())?,
        ambiguous_2dcs: write_opt("amb2", frame.ambiguous_2dcs.as_ref())?,
        ambiguous_low_4dcs: write_opt("amb_low4", frame.ambiguous_low_4dcs.as_ref())?,
        predicted_depth: None,
        predicted_bins: None,
    };
    check_relative(&record.gray)?;
    Ok(record)
}

/// Reads every plane of a record and checks shapes against `expected`.
pub fn read_frame(root: &Path, record: &FrameRecord, scale: &DepthScale, expected: (usize, usize)) -> Result<FrameData> {
    let gray = decode_gray(&read_pgm(&root.join(&record.gray))?)?;
    let read_opt = |p: &Option<PlanePaths>| -> Result<Option<DepthMap>> {
        p.as_ref().map(|p| read_depth(root, p, scale)).transpose()
    };
    let frame = FrameData {
        gray,
        gt_depth: read_depth(root, &record.gt_depth, scale)?,
        true_depth: read_opt(&record.true_depth)?,
        ambiguous_4dcs: read_opt(&record.ambiguous_4dcs)?,
        ambiguous_2dcs: read_opt(&record.ambiguous_2dcs)?,
        ambiguous_low_4dcs: read_opt(&record.ambiguous_low_4dcs)?,
    };
    check_shape(expected, frame.shape())?;
    frame.check_shapes()?;
    Ok(frame)
}

/// Directory holding a manifest file.
pub fn dataset_root(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
