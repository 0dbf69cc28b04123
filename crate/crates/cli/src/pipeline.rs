//! Stage execution: upstream checks, no-op reruns and per-sample parallelism.

use anyhow::{Context, Result};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

use crate::config::PipelineConfig;
use crate::stages;
use crate::store::{Layout, Stage, StageWriter, StoreError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub dir: PathBuf,
    /// The output already existed and nothing was written.
    pub reused: bool,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub layout: Layout,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    /// Validates `cfg` before anything touches the output root.
    pub fn new(cfg: PipelineConfig, out: &Path, threads: Option<usize>) -> Result<Self> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .context("building thread pool")?;
        let layout = Layout::new(out, &cfg);
        Ok(Pipeline { cfg, layout, pool })
    }

    pub fn run(&self, stage: Stage) -> Result<StageOutcome> {
        let dir = self.layout.dir(stage);
        if self.layout.is_done(stage) {
            return Ok(StageOutcome {
                stage,
                dir,
                reused: true,
            });
        }
        if let Some(up) = stage.upstream() {
            if !self.layout.is_done(up) {
                return Err(StoreError::MissingUpstream {
                    stage: stage.name(),
                    upstream: up.name(),
                    path: self.layout.dir(up).display().to_string(),
                }
                .into());
            }
        }
        let w = StageWriter::begin(&self.layout, stage)?;
        let summary = match stage {
            Stage::Synth => stages::synth::run(self, &w),
            Stage::Align => stages::align::run(self, &w),
            Stage::Rasterize => stages::rasterize::run(self, &w),
            Stage::Fuse => stages::fuse::run(self, &w),
            Stage::Split => stages::split::run(self, &w),
            Stage::Eval => stages::eval::run(self, &w),
            Stage::Report => stages::report::run(self, &w),
        }
        .with_context(|| format!("stage {}", stage.name()))?;
        let dir = w.commit(&self.layout, summary)?;
        Ok(StageOutcome {
            stage,
            dir,
            reused: false,
        })
    }

    /// Runs every stage up to and including `last`, reusing finished ones.
    pub fn run_through(&self, last: Stage) -> Result<Vec<StageOutcome>> {
        let mut out = Vec::new();
        for s in Stage::ALL {
            out.push(self.run(s)?);
            if s == last {
                break;
            }
        }
        Ok(out)
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.layout.root.join(rel)
    }

    pub fn read(&self, rel: &str) -> Result<Vec<u8>> {
        std::fs::read(self.path(rel)).with_context(|| format!("reading {rel}"))
    }

    pub fn read_text(&self, stage: Stage, name: &str) -> Result<String> {
        let rel = format!("{}/{}", self.layout.dir_name(stage), name);
        String::from_utf8(self.read(&rel)?).with_context(|| format!("{rel} is not UTF-8"))
    }

    /// Ordered parallel map on the pipeline's pool.
    pub fn par_map<T: Sync, U: Send>(&self, items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}
