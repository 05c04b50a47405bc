use std::path::PathBuf;

use clap::{Args, ValueEnum};
use itof_core::generate::{generate_dataset, DcsSelection, GenerateConfig};
use itof_core::io::{DepthScale, SplitRatios, MANIFEST_FILE};
use itof_core::sim::NoiseModel;
use itof_core::ModulationConfig;

use crate::error::CliResult;
use crate::run::{write_run_manifest, RUN_FILE};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DcsArg {
    #[value(name = "2")]
    Two,
    #[value(name = "4")]
    Four,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of frames.
    #[arg(long)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 24e6)]
    freq_high: f64,
    #[arg(long, default_value_t = 10e6)]
    freq_low: f64,
    /// High-frequency captures to write.
    #[arg(long, value_enum, default_value = "both")]
    dcs: DcsArg,
    #[arg(long, default_value_t = 320)]
    width: usize,
    #[arg(long, default_value_t = 240)]
    height: usize,
    /// Deepest depth representable in the stored planes, meters.
    #[arg(long, default_value_t = 100.0)]
    storage_max_depth: f64,
    /// Ideal sensor: no noise, clipping or retro-reflectors.
    #[arg(long)]
    noise_free: bool,
    /// Per-sample read noise override.
    #[arg(long)]
    read_noise: Option<f64>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = GenerateConfig::new(args.frames, args.seed)?;
    cfg.config_high = ModulationConfig::new(args.freq_high)?;
    cfg.config_low = ModulationConfig::new(args.freq_low)?;
    cfg.distribution.width = args.width;
    cfg.distribution.height = args.height;
    cfg.depth_scale = DepthScale::new(args.storage_max_depth)?;
    cfg.dcs = match args.dcs {
        DcsArg::Two => DcsSelection::Two,
        DcsArg::Four => DcsSelection::Four,
        DcsArg::Both => DcsSelection::Both,
    };
    if args.noise_free {
        cfg.noise = NoiseModel::noise_free();
    }
    if let Some(r) = args.read_noise {
        cfg.noise.read_noise_sigma = r;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&args.out).map_err(|e| crate::error::CliError::io(&args.out, e))?;
    write_run_manifest(&args.out.join(RUN_FILE), "simulate", &cfg)?;
    generate_dataset(&cfg, &SplitRatios::default(), &args.out)?;
    println!("{}", args.out.join(MANIFEST_FILE).display());
    Ok(())
}
