pub mod align;
pub mod eval;
pub mod fuse;
pub mod rasterize;
pub mod records;
pub mod report;
pub mod split;
pub mod synth;
