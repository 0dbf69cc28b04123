//! Task store and the annotation state machine, independent of HTTP.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

use goldbev_core::datasetio::{encode_mask_png, write_atomic, write_sealed, FileEntry};
use goldbev_core::evalmetrics::{confusion, iou_report, IoUReport};
use goldbev_core::imaging::RgbImage;
use goldbev_core::labelfuse::fuse_annotations_strict;
use goldbev_core::{BevGridSpec, ClassId, Raster, SemanticMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    RealBev,
    ReconA,
    ReconB,
}

impl View {
    pub fn name(self) -> &'static str {
        match self {
            View::RealBev => "real_bev",
            View::ReconA => "recon_a",
            View::ReconB => "recon_b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Submitted,
}

/// Everything the service knows about one sample. Source images are never
/// modified.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSource {
    pub sample_id: String,
    pub grid: BevGridSpec,
    pub images: BTreeMap<View, RgbImage>,
    pub lidar_counts: Raster<u32>,
    pub reference: Option<SemanticMask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: String,
    pub sample_id: String,
    pub view: View,
    pub status: TaskStatus,
    pub annotator_id: Option<String>,
    pub version: u64,
}

#[derive(Debug, Clone)]
struct Task {
    summary: TaskSummary,
    mask: Option<SemanticMask>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubmitError {
    UnknownTask(String),
    Conflict { current_version: u64 },
    InvalidCodes(Vec<u8>),
    Grid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fusion {
    pub sample_id: String,
    /// Tasks whose latest masks entered the fusion.
    pub contributing: Vec<String>,
    /// `None` until every view of the sample has a submission.
    pub mask: Option<SemanticMask>,
}

impl Fusion {
    pub fn void_fraction(&self) -> Option<f64> {
        self.mask.as_ref().map(|m| m.void_fraction())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub sample_id: String,
    pub reference_available: bool,
    pub fusion: Option<IoUReport>,
    pub views: BTreeMap<String, IoUReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub sample_id: String,
    pub mask: FileEntry,
    pub void_fraction: f64,
    pub contributing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub dir: String,
    pub exported: Vec<String>,
    pub skipped: Vec<String>,
}

/// Frames per batch in the default annotation preset.
pub const PRESET_BATCH: usize = 10;

pub struct AnnoState {
    frames: BTreeMap<String, FrameSource>,
    tasks: BTreeMap<String, Task>,
    views: Vec<View>,
    export_root: PathBuf,
    exports: usize,
}

pub fn task_id(sample_id: &str, view: View) -> String {
    format!("{sample_id}.{}", view.name())
}

impl AnnoState {
    /// One task per frame and annotated view.
    pub fn new(frames: Vec<FrameSource>, views: &[View], export_root: PathBuf) -> Self {
        let mut tasks = BTreeMap::new();
        for f in &frames {
            for &view in views {
                let id = task_id(&f.sample_id, view);
                tasks.insert(
                    id.clone(),
                    Task {
                        summary: TaskSummary {
                            task_id: id,
                            sample_id: f.sample_id.clone(),
                            view,
                            status: TaskStatus::Open,
                            annotator_id: None,
                            version: 0,
                        },
                        mask: None,
                    },
                );
            }
        }
        AnnoState {
            frames: frames.into_iter().map(|f| (f.sample_id.clone(), f)).collect(),
            tasks,
            views: views.to_vec(),
            export_root,
            exports: 0,
        }
    }

    /// The first [`PRESET_BATCH`] frames, each labeled once per
    /// reconstruction view.
    pub fn preset(mut frames: Vec<FrameSource>, export_root: PathBuf) -> Self {
        frames.truncate(PRESET_BATCH);
        AnnoState::new(frames, &[View::ReconA, View::ReconB], export_root)
    }

    pub fn tasks(&self) -> Vec<TaskSummary> {
        self.tasks.values().map(|t| t.summary.clone()).collect()
    }

    pub fn task(&self, id: &str) -> Option<(&TaskSummary, Option<&SemanticMask>)> {
        self.tasks.get(id).map(|t| (&t.summary, t.mask.as_ref()))
    }

    pub fn frame(&self, sample_id: &str) -> Option<&FrameSource> {
        self.frames.get(sample_id)
    }

    /// Accepts `mask` only when `expected_version` is the task's current
    /// version; a rejected write leaves the state untouched.
    pub fn submit(&mut self, id: &str, annotator_id: &str, mask: SemanticMask, expected_version: u64) -> Result<u64, SubmitError> {
        let task = self.tasks.get_mut(id).ok_or_else(|| SubmitError::UnknownTask(id.into()))?;
        if task.summary.version != expected_version {
            return Err(SubmitError::Conflict {
                current_version: task.summary.version,
            });
        }
        let grid = self.frames[&task.summary.sample_id].grid;
        if *mask.grid() != grid {
            return Err(SubmitError::Grid(format!(
                "mask grid {:?} differs from frame grid {:?}",
                mask.grid(),
                grid
            )));
        }
        let mut bad: Vec<u8> = mask
            .data()
            .iter()
            .filter(|c| !(c.is_trainable() || c.is_ignore()))
            .map(|c| c.code())
            .collect();
        if !bad.is_empty() {
            bad.sort_unstable();
            bad.dedup();
            return Err(SubmitError::InvalidCodes(bad));
        }
        task.mask = Some(mask);
        task.summary.version += 1;
        task.summary.status = TaskStatus::Submitted;
        task.summary.annotator_id = Some(annotator_id.into());
        Ok(task.summary.version)
    }

    /// Strict agreement over the latest mask of every view of the sample.
    pub fn fusion(&self, sample_id: &str) -> Option<Fusion> {
        self.frames.get(sample_id)?;
        let mut contributing = Vec::new();
        let mut masks = Vec::new();
        for &view in &self.views {
            if let Some(m) = self.tasks.get(&task_id(sample_id, view)).and_then(|t| t.mask.as_ref()) {
                contributing.push(task_id(sample_id, view));
                masks.push(m);
            }
        }
        let complete = !masks.is_empty() && masks.len() == self.views.len();
        let mask = complete.then(|| {
            masks[1..].iter().fold(masks[0].clone(), |acc, m| {
                fuse_annotations_strict(&acc, m).expect("masks share the frame grid")
            })
        });
        Some(Fusion {
            sample_id: sample_id.into(),
            contributing,
            mask,
        })
    }

    pub fn report(&self, sample_id: &str) -> Option<SampleReport> {
        let frame = self.frames.get(sample_id)?;
        let fusion = self.fusion(sample_id)?;
        let Some(reference) = &frame.reference else {
            return Some(SampleReport {
                sample_id: sample_id.into(),
                reference_available: false,
                fusion: None,
                views: BTreeMap::new(),
            });
        };
        let score = |m: &SemanticMask| iou_report(&confusion(m, reference, None).expect("masks share the frame grid"));
        let views = self
            .views
            .iter()
            .filter_map(|&v| {
                let mask = self.tasks.get(&task_id(sample_id, v))?.mask.as_ref()?;
                Some((v.name().to_string(), score(mask)))
            })
            .collect();
        Some(SampleReport {
            sample_id: sample_id.into(),
            reference_available: true,
            fusion: fusion.mask.as_ref().map(score),
            views,
        })
    }

    /// Writes the fused mask of every complete sample in `sample_ids` (all
    /// samples when `None`) plus a sealed manifest into a fresh batch
    /// directory.
    pub fn export(&mut self, sample_ids: Option<&[String]>) -> std::io::Result<ExportSummary> {
        let ids: Vec<String> = match sample_ids {
            Some(ids) => ids.to_vec(),
            None => self.frames.keys().cloned().collect(),
        };
        self.exports += 1;
        let name = format!("export-{:04}", self.exports);
        let dir = self.export_root.join(&name);
        std::fs::create_dir_all(dir.join("masks"))?;
        let mut records = Vec::new();
        let mut skipped = Vec::new();
        for id in ids {
            let Some(Fusion {
                mask: Some(mask),
                contributing,
                ..
            }) = self.fusion(&id)
            else {
                skipped.push(id);
                continue;
            };
            let bytes = encode_mask_png(&mask).map_err(std::io::Error::other)?;
            let rel = format!("masks/{id}.png");
            write_atomic(&dir.join(&rel), &bytes)?;
            records.push(ExportRecord {
                sample_id: id,
                mask: FileEntry::of(rel, &bytes),
                void_fraction: mask.void_fraction(),
                contributing,
            });
        }
        let manifest = write_sealed(&records).map_err(std::io::Error::other)?;
        write_atomic(&dir.join("manifest.jsonl"), manifest.as_bytes())?;
        Ok(ExportSummary {
            dir: dir.display().to_string(),
            exported: records.into_iter().map(|r| r.sample_id).collect(),
            skipped,
        })
    }
}

/// Red, opaque wherever the cell has LiDAR returns; transparent elsewhere.
pub fn lidar_overlay_rgba(counts: &Raster<u32>) -> Vec<u8> {
    counts
        .data()
        .iter()
        .flat_map(|&n| if n > 0 { [255, 0, 0, 255] } else { [0, 0, 0, 0] })
        .collect()
}

pub fn blank_mask(grid: BevGridSpec) -> SemanticMask {
    Raster::filled(grid, ClassId::VOID)
}
