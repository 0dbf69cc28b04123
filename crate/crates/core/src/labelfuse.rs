//! Dense pseudo-label fusion from teacher outputs, and strict-agreement
//! fusion of two independent annotations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{check_grids, BinaryMask, ProbabilityMap, Raster, RasterError, ScalarMap, SemanticMask};
use crate::taxonomy::ClassId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
    #[error("probability map has {k} channels but {classes} classes were named")]
    ClassCount { k: usize, classes: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionThresholds {
    pub tau_ped_hi: f64,
    pub tau_ped_lo: f64,
    pub tau_c: f64,
}

impl Default for FusionThresholds {
    fn default() -> Self {
        FusionThresholds {
            tau_ped_hi: 0.9,
            tau_ped_lo: 0.3,
            tau_c: 0.8,
        }
    }
}

impl FusionThresholds {
    pub fn validate(&self) -> Result<(), FusionError> {
        let t = self;
        let mut bad = Vec::new();
        if !(t.tau_ped_hi > 0.0 && t.tau_ped_hi <= 1.0) {
            bad.push(format!("tau_ped_hi {} not in (0, 1]", t.tau_ped_hi));
        }
        if !(t.tau_ped_lo >= 0.0 && t.tau_ped_lo < 1.0) {
            bad.push(format!("tau_ped_lo {} not in [0, 1)", t.tau_ped_lo));
        }
        if !(t.tau_c >= 0.0 && t.tau_c <= 1.0) {
            bad.push(format!("tau_c {} not in [0, 1]", t.tau_c));
        }
        if !(t.tau_ped_lo < t.tau_ped_hi) {
            bad.push(format!("tau_ped_lo {} must be below tau_ped_hi {}", t.tau_ped_lo, t.tau_ped_hi));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(FusionError::Thresholds(bad.join("; ")))
        }
    }
}

/// Per-cell argmax label and its probability. `classes[j]` names channel
/// `j`; ties resolve to the lowest class code.
pub fn argmax_confidence(probs: &ProbabilityMap, classes: &[ClassId]) -> Result<(SemanticMask, ScalarMap), FusionError> {
    let k = probs.k();
    if classes.len() != k {
        return Err(FusionError::ClassCount {
            k,
            classes: classes.len(),
        });
    }
    let grid = *probs.grid();
    let mut labels = Vec::with_capacity(grid.len());
    let mut conf = Vec::with_capacity(grid.len());
    for cell in probs.data().chunks_exact(k) {
        let mut best = 0;
        for j in 1..k {
            if cell[j] > cell[best] || (cell[j] == cell[best] && classes[j] < classes[best]) {
                best = j;
            }
        }
        labels.push(classes[best]);
        conf.push(cell[best]);
    }
    Ok((
        Raster::from_vec(grid, labels)?,
        ScalarMap::new(Raster::from_vec(grid, conf)?)?,
    ))
}

/// Cells whose structural label is the teacher-only tree class.
pub fn tree_mask(label: &SemanticMask) -> BinaryMask {
    label.map(|c| c == ClassId::TREE)
}

/// The three-way policy for a single cell, before the tree override.
/// Thresholds are compared at the f32 precision the maps are stored in, so
/// a probability written as exactly a threshold value sits on the boundary.
pub fn fuse_cell(p_ped: f32, conf: f32, label: ClassId, t: &FusionThresholds) -> ClassId {
    if p_ped >= t.tau_ped_hi as f32 {
        ClassId::VRU
    } else if p_ped <= t.tau_ped_lo as f32 && conf >= t.tau_c as f32 && label.is_trainable() {
        label
    } else {
        ClassId::IGNORE
    }
}

/// Pedestrian-first fusion of structural and pedestrian teachers. Cells
/// under `trees` are always IGNORE.
pub fn fuse_pseudo_labels(
    label: &SemanticMask,
    conf: &ScalarMap,
    ped: &ScalarMap,
    thresholds: &FusionThresholds,
    trees: Option<&BinaryMask>,
) -> Result<SemanticMask, FusionError> {
    thresholds.validate()?;
    check_grids(label.grid(), conf.grid())?;
    check_grids(label.grid(), ped.grid())?;
    if let Some(t) = trees {
        check_grids(label.grid(), t.grid())?;
    }
    let data = (0..label.data().len())
        .map(|i| {
            if trees.is_some_and(|t| t.data()[i]) {
                ClassId::IGNORE
            } else {
                fuse_cell(ped.data()[i], conf.data()[i], label.data()[i], thresholds)
            }
        })
        .collect();
    Ok(Raster::from_vec(*label.grid(), data)?)
}

/// Forces IGNORE wherever `trees` is set.
pub fn apply_tree_mask(mask: &SemanticMask, trees: &BinaryMask) -> Result<SemanticMask, FusionError> {
    check_grids(mask.grid(), trees.grid())?;
    let data = mask
        .data()
        .iter()
        .zip(trees.data())
        .map(|(&c, &t)| if t { ClassId::IGNORE } else { c })
        .collect();
    Ok(Raster::from_vec(*mask.grid(), data)?)
}

/// Keeps a cell only where both annotations carry the same trainable class.
pub fn fuse_annotations_strict(a: &SemanticMask, b: &SemanticMask) -> Result<SemanticMask, FusionError> {
    check_grids(a.grid(), b.grid())?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| if x == y && x.is_trainable() { x } else { ClassId::VOID })
        .collect();
    Ok(Raster::from_vec(*a.grid(), data)?)
}
