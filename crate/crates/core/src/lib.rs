//! Amplitude-modulated continuous-wave indirect time-of-flight toolkit.
//!
//! * [`phase`]: phase, amplitude and wrapped depth from 2 or 4 correlation
//!   samples;
//! * [`sim`]: synthetic scenes and a noisy, saturating sensor model;
//! * [`dualfreq`]: two-carrier consistency unwrapping;
//! * [`merge`]: single-carrier correction from a coarse depth estimate;
//! * [`eval`]: training losses, gradient checks and depth metrics;
//! * [`io`]: PGM planes, dataset manifest, splits and augmentation;
//! * [`generate`]: end-to-end synthetic dataset generation.

pub mod dualfreq;
pub mod error;
pub mod eval;
pub mod generate;
pub mod io;
pub mod merge;
pub mod oracle;
pub mod phase;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    unambiguous_range, unambiguous_range_for, DcsFrameSet, DepthBinMap, DepthMap, GrayImage, ModulationConfig,
    PixelFlag, SamplePhase, GRAY_MAX, SPEED_OF_LIGHT,
};
