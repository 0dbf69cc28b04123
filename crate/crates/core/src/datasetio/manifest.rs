use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::jsonl::{read_sealed, write_sealed, JsonlError};
use super::split::Split;
use crate::grid::{BevGridSpec, Pose2D};
use crate::sensors::SensorEvent;

/// A file written by the pipeline, relative to the run root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub crc32: String,
}

impl FileEntry {
    pub fn of(path: impl Into<String>, bytes: &[u8]) -> Self {
        FileEntry {
            path: path.into(),
            crc32: format!("{:08x}", crc32fast::hash(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub sample_id: String,
    pub split: Option<Split>,
    pub files: BTreeMap<String, FileEntry>,
    pub offsets_us: BTreeMap<String, i64>,
    pub ego_pose: Pose2D,
    pub ego_pixel: [f64; 2],
    pub match_confidence: f64,
    pub grid: BevGridSpec,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationLimits {
    pub max_offset_us: i64,
    pub min_conf: f64,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ManifestIssue {
    DuplicateId { sample_id: String },
    MissingFile { sample_id: String, key: String, path: String },
    FileChecksum { sample_id: String, key: String, expected: String, actual: String },
    ConfigHash { sample_id: String, expected: String, found: String },
    Offset { sample_id: String, stream: String, offset_us: i64 },
    Confidence { sample_id: String, value: f64 },
}

/// Every problem found in `records`, with file paths resolved under `root`.
pub fn validate_manifest(root: &Path, records: &[SampleManifest], limits: &ValidationLimits) -> Vec<ManifestIssue> {
    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    for m in records {
        let id = || m.sample_id.clone();
        if !seen.insert(&m.sample_id) {
            issues.push(ManifestIssue::DuplicateId { sample_id: id() });
        }
        if let Some(expected) = &limits.config_hash {
            if *expected != m.config_hash {
                issues.push(ManifestIssue::ConfigHash {
                    sample_id: id(),
                    expected: expected.clone(),
                    found: m.config_hash.clone(),
                });
            }
        }
        for (stream, &offset_us) in &m.offsets_us {
            if offset_us.abs() > limits.max_offset_us {
                issues.push(ManifestIssue::Offset {
                    sample_id: id(),
                    stream: stream.clone(),
                    offset_us,
                });
            }
        }
        if !(m.match_confidence >= limits.min_conf) {
            issues.push(ManifestIssue::Confidence {
                sample_id: id(),
                value: m.match_confidence,
            });
        }
        for (key, f) in &m.files {
            match std::fs::read(root.join(&f.path)) {
                Err(_) => issues.push(ManifestIssue::MissingFile {
                    sample_id: id(),
                    key: key.clone(),
                    path: f.path.clone(),
                }),
                Ok(bytes) => {
                    let actual = format!("{:08x}", crc32fast::hash(&bytes));
                    if actual != f.crc32 {
                        issues.push(ManifestIssue::FileChecksum {
                            sample_id: id(),
                            key: key.clone(),
                            expected: f.crc32.clone(),
                            actual,
                        });
                    }
                }
            }
        }
    }
    issues
}

pub fn write_manifest(records: &[SampleManifest]) -> Result<String, JsonlError> {
    write_sealed(records)
}

pub fn read_manifest(text: &str) -> Result<Vec<SampleManifest>, JsonlError> {
    read_sealed(text)
}

pub fn write_event_log(events: &[SensorEvent]) -> Result<String, JsonlError> {
    write_sealed(events)
}

pub fn read_event_log(text: &str) -> Result<Vec<SensorEvent>, JsonlError> {
    read_sealed(text)
}
