//! On-disk dataset: PGM planes, JSON manifest, splits and augmentation.

pub mod augment;
pub mod manifest;
pub mod pgm;
pub mod planes;
pub mod split;

pub use augment::{augment, AugmentOp};
pub use manifest::{
    dataset_root, read_depth, read_frame, read_pgm, write_depth, write_frame, write_pgm, FrameData, FrameRecord,
    Manifest, PlanePaths, Split, FORMAT_VERSION, MANIFEST_FILE,
};
pub use pgm::{PgmError, PgmImage};
pub use planes::{
    decode_bins, decode_depth, decode_depth_bytes, decode_gray, encode_bins, encode_depth, encode_gray, quantize,
    DepthScale,
};
pub use split::{split_assignment, split_counts, split_dataset, SplitRatios};
