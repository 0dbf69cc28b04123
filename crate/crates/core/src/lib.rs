//! Core library for cross-view BEV supervision: shared types, the synthetic
//! scene oracle, cross-view alignment, BEV rasterization, label fusion,
//! evaluation metrics and on-disk formats.

pub mod datasetio;
pub mod evalmetrics;
pub mod grid;
pub mod bevraster;
pub mod crossview;
pub mod imaging;
pub mod labelfuse;
pub mod raster;
pub mod recon;
pub mod sensors;
pub mod synthworld;
pub mod taxonomy;

pub use grid::{BevGridSpec, Pose2D};
pub use raster::{BinaryMask, ProbabilityMap, Raster, ScalarMap, SemanticMask};
pub use taxonomy::ClassId;
