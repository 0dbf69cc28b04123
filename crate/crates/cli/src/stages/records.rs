//! Records exchanged between stages.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use goldbev_core::crossview::Rejection;
use goldbev_core::evalmetrics::{AggregateReport, ConfusionMatrix, Decibels, IoUReport};
use goldbev_core::sensors::CameraPose;
use goldbev_core::synthworld::{AerialShot, Trajectory};

pub const EVENTS: &str = "events.jsonl";
pub const AERIAL: &str = "aerial.jsonl";
pub const ORACLE: &str = "oracle.json";
pub const WORLD: &str = "world.json";
pub const SAMPLES: &str = "samples.jsonl";
pub const DISCARDS: &str = "discards.jsonl";
pub const MANIFEST: &str = "manifest.jsonl";
pub const ASSIGNMENT: &str = "assignment.json";
pub const EVAL_SAMPLES: &str = "samples.jsonl";
pub const AGGREGATE: &str = "aggregate.json";
pub const REPORT_MD: &str = "report.md";

/// One aerial exposure as recorded by the aerial platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AerialRecord {
    pub t_us: i64,
    pub recorded_cam: CameraPose,
    pub gsd_m: f64,
    pub width: usize,
    pub height: usize,
    pub image: String,
    pub gt: String,
}

/// Simulator truth kept beside the recorded data for checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    pub trajectory: Trajectory,
    pub shots: Vec<AerialShot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discard {
    pub anchor_t_us: i64,
    pub reason: Rejection,
}

/// Per-sample files written by the align stage, relative to the run root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignFiles {
    pub crop: String,
    pub valid: String,
    pub gt: String,
    pub vehicle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub psnr_db: Decibels,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub sample_id: String,
    pub split: Option<String>,
    pub protocols: BTreeMap<String, IoUReport>,
    pub confusion: BTreeMap<String, ConfusionMatrix>,
    pub recon: BTreeMap<String, Quality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub mean_psnr_db: Decibels,
    pub mean_ssim: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAggregate {
    pub samples: usize,
    pub protocols: BTreeMap<String, AggregateReport>,
    pub recon: BTreeMap<String, QualitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalAggregate {
    pub config_hash: String,
    pub config: serde_json::Value,
    pub splits: BTreeMap<String, SplitAggregate>,
}

/// Protocol names, in report order.
pub const PROTOCOLS: [&str; 4] = ["full", "cone", "cone_visible", "lidar_holdout"];
pub const RECON_VIEWS: [&str; 2] = ["recon_a", "recon_b"];
