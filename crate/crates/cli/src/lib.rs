//! Stage orchestration for the goldbev pipeline: configuration, the
//! content-addressed output store and the `synth → align → rasterize →
//! fuse → split → eval → report` stages.

pub mod config;
pub mod pipeline;
pub mod serve;
pub mod stages;
pub mod store;

pub use config::{ConfigError, PipelineConfig};
pub use pipeline::{Pipeline, StageOutcome};
pub use store::{Layout, Stage, StoreError};
