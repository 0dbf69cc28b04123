//! Content-addressed stage directories under the output root.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::config::{digest, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Align,
    Rasterize,
    Fuse,
    Split,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Synth,
        Stage::Align,
        Stage::Rasterize,
        Stage::Fuse,
        Stage::Split,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Align => "align",
            Stage::Rasterize => "rasterize",
            Stage::Fuse => "fuse",
            Stage::Split => "split",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn upstream(self) -> Option<Stage> {
        let i = Stage::ALL.iter().position(|s| *s == self).expect("listed");
        i.checked_sub(1).map(|j| Stage::ALL[j])
    }

    /// The configuration fields this stage reads.
    fn slice(self, cfg: &PipelineConfig) -> serde_json::Value {
        use serde_json::json;
        match self {
            Stage::Synth => json!({ "seed": cfg.seed, "synth": cfg.synth, "marker": cfg.align.marker }),
            Stage::Align => json!({ "grid": cfg.grid, "clock": cfg.clock, "align": cfg.align }),
            Stage::Rasterize => json!({ "raster": cfg.raster }),
            Stage::Fuse => json!({ "teacher": cfg.teacher, "fusion": cfg.fusion, "blur": cfg.eval.recon_blur_px }),
            Stage::Split => json!({ "split": cfg.split }),
            Stage::Eval => json!({ "eval": cfg.eval }),
            Stage::Report => json!({}),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("stage {stage} needs {upstream} output at {path}; run `goldbev {upstream}` first")]
    MissingUpstream {
        stage: &'static str,
        upstream: &'static str,
        path: String,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

pub fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> StoreError {
    let context = context.into();
    move |source| StoreError::Io { context, source }
}

/// Per-stage keys chained through upstream keys, so a config change
/// re-runs the stage that reads it and everything downstream.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
    pub config_hash: String,
    keys: Vec<(Stage, String)>,
}

impl Layout {
    pub fn new(root: &Path, cfg: &PipelineConfig) -> Self {
        let mut keys = Vec::new();
        let mut prev = String::new();
        for s in Stage::ALL {
            let slice = serde_json::to_vec(&s.slice(cfg)).expect("slice serializes");
            let key = digest(&[s.name().as_bytes(), prev.as_bytes(), &slice]);
            keys.push((s, key.clone()));
            prev = key;
        }
        Layout {
            root: root.to_path_buf(),
            config_hash: cfg.hash(),
            keys,
        }
    }

    pub fn key(&self, stage: Stage) -> &str {
        &self.keys.iter().find(|(s, _)| *s == stage).expect("all stages keyed").1
    }

    /// Directory name relative to the root.
    pub fn dir_name(&self, stage: Stage) -> String {
        format!("{}-{}", stage.name(), &self.key(stage)[..16])
    }

    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.root.join(self.dir_name(stage))
    }

    pub fn is_done(&self, stage: Stage) -> bool {
        self.dir(stage).join(STAGE_RECORD).is_file()
    }
}

pub const STAGE_RECORD: &str = "stage.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub key: String,
    pub config_hash: String,
    pub upstream: Option<String>,
    pub summary: serde_json::Value,
}

/// A stage being written into a private temp directory. Files are addressed
/// by their final relative path so manifests can reference them before the
/// directory is committed.
pub struct StageWriter {
    pub stage: Stage,
    tmp: PathBuf,
    final_name: String,
}

impl StageWriter {
    pub fn begin(layout: &Layout, stage: Stage) -> Result<Self, StoreError> {
        std::fs::create_dir_all(&layout.root).map_err(io_err(format!("creating {}", layout.root.display())))?;
        let final_name = layout.dir_name(stage);
        let tmp = layout.root.join(format!(".tmp-{}-{}", final_name, std::process::id()));
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(io_err(format!("clearing {}", tmp.display())))?;
        }
        std::fs::create_dir_all(&tmp).map_err(io_err(format!("creating {}", tmp.display())))?;
        Ok(StageWriter { stage, tmp, final_name })
    }

    /// Path relative to the output root for a file of this stage.
    pub fn rel(&self, name: &str) -> String {
        format!("{}/{}", self.final_name, name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<String, StoreError> {
        let path = self.tmp.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(format!("creating {}", parent.display())))?;
        }
        std::fs::write(&path, bytes).map_err(io_err(format!("writing {}", path.display())))?;
        Ok(self.rel(name))
    }

    /// Writes the stage record and renames the directory into place.
    pub fn commit(self, layout: &Layout, summary: serde_json::Value) -> Result<PathBuf, StoreError> {
        let record = StageRecord {
            stage: self.stage,
            key: layout.key(self.stage).to_string(),
            config_hash: layout.config_hash.clone(),
            upstream: self.stage.upstream().map(|u| layout.key(u).to_string()),
            summary,
        };
        let json = serde_json::to_vec_pretty(&record).expect("record serializes");
        self.write(STAGE_RECORD, &json)?;
        let dest = layout.dir(self.stage);
        std::fs::rename(&self.tmp, &dest).map_err(io_err(format!("committing {}", dest.display())))?;
        Ok(dest)
    }
}

impl Drop for StageWriter {
    fn drop(&mut self) {
        if self.tmp.exists() {
            let _ = std::fs::remove_dir_all(&self.tmp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_chain_downstream_only() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.fusion.tau_c = 0.7;
        let (la, lb) = (Layout::new(Path::new("o"), &a), Layout::new(Path::new("o"), &b));
        for s in [Stage::Synth, Stage::Align, Stage::Rasterize] {
            assert_eq!(la.key(s), lb.key(s));
        }
        for s in [Stage::Fuse, Stage::Split, Stage::Eval, Stage::Report] {
            assert_ne!(la.key(s), lb.key(s));
        }
    }

    #[test]
    fn commit_is_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path(), &PipelineConfig::default());
        {
            let w = StageWriter::begin(&layout, Stage::Synth).unwrap();
            w.write("a/b.txt", b"x").unwrap();
        }
        assert!(!layout.is_done(Stage::Synth));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        let w = StageWriter::begin(&layout, Stage::Synth).unwrap();
        assert_eq!(w.rel("a/b.txt"), format!("{}/a/b.txt", layout.dir_name(Stage::Synth)));
        w.write("a/b.txt", b"x").unwrap();
        w.commit(&layout, serde_json::json!({})).unwrap();
        assert!(layout.is_done(Stage::Synth));
        assert_eq!(std::fs::read(layout.dir(Stage::Synth).join("a/b.txt")).unwrap(), b"x");
    }
}
