//! On-disk formats and dataset bookkeeping: the BEVR raster container,
//! mask and image PNGs, point-cloud files, sealed JSONL manifests and
//! event logs, and trajectory-based splits.

mod bevr;
mod fsutil;
mod jsonl;
mod manifest;
mod png;
mod pointcloud;
mod reader;
mod split;

pub use bevr::{
    bevr_to_binary, bevr_to_label_image, bevr_to_lidar, bevr_to_mask, bevr_to_probs, bevr_to_sparse, binary_to_bevr, decode_bevr, encode_bevr, label_image_to_bevr, lidar_to_bevr, mask_to_bevr, probs_to_bevr, sparse_to_bevr, BevrError, BevrRaster, Channel,
    ChannelData, Dtype, BEVR_MAGIC, BEVR_VERSION,
};
pub use fsutil::write_atomic;
pub use jsonl::{read_sealed, read_sealed_bytes, write_sealed, JsonlError};
pub use manifest::{
    read_event_log, read_manifest, validate_manifest, write_event_log, write_manifest, FileEntry, ManifestIssue, SampleManifest, ValidationLimits,
};
pub use png::{
    decode_mask_png, decode_rgb_png, encode_mask_png, encode_rgb_png, encode_rgba_png, mask_palette, PngError, GRID_KEYWORD, VOID_RGB,
};
pub use pointcloud::{decode_point_cloud, encode_point_cloud, PointCloudError, PCLD_MAGIC, PCLD_VERSION};
pub use reader::ReadError;
pub use split::{cumulative_path, split_by_trajectory, Segment, Split, SplitAssignment, SplitError, SplitParams};
