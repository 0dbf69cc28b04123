use thiserror::Error;

use crate::grid::BevGridSpec;
use crate::raster::{Raster, SemanticMask};
use crate::sensors::LidarPoint;
use crate::taxonomy::{ClassId, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("point {index} carries non-trainable class {class}")]
pub struct SparseLabelError {
    pub index: usize,
    pub class: ClassId,
}

/// Per-cell majority label of labeled LiDAR points; IGNORE where no point fell.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLabelRaster {
    pub label: SemanticMask,
    pub support: Raster<u32>,
}

impl SparseLabelRaster {
    pub fn grid(&self) -> &BevGridSpec {
        self.label.grid()
    }

    pub fn supervised(&self) -> Raster<bool> {
        self.label.map(|c| !c.is_ignore())
    }
}

/// Majority winner of per-class votes. Ties go to a dynamic class, then to
/// the lower code.
pub fn majority(votes: &[u32; NUM_CLASSES]) -> Option<ClassId> {
    let mut best: Option<(usize, u32)> = None;
    for (k, &n) in votes.iter().enumerate() {
        if n == 0 {
            continue;
        }
        best = match best {
            None => Some((k, n)),
            Some((bk, bn)) => {
                let dyn_k = ClassId::from_index(k).unwrap().is_dynamic();
                let dyn_b = ClassId::from_index(bk).unwrap().is_dynamic();
                if n > bn || (n == bn && dyn_k && !dyn_b) {
                    Some((k, n))
                } else {
                    Some((bk, bn))
                }
            }
        };
    }
    best.map(|(k, _)| ClassId::from_index(k).unwrap())
}

/// Rasterizes ego-frame labeled points onto `grid`.
pub fn rasterize_sparse_labels(points: &[LidarPoint], grid: BevGridSpec) -> Result<SparseLabelRaster, SparseLabelError> {
    let mut votes = vec![[0u32; NUM_CLASSES]; grid.len()];
    for (index, p) in points.iter().enumerate() {
        let Some(k) = p.class.index().filter(|_| p.class.is_trainable()) else {
            return Err(SparseLabelError { index, class: p.class });
        };
        if !(p.x.is_finite() && p.y.is_finite()) {
            continue;
        }
        if let Some((r, c)) = grid.cell_of_offset(p.x as f64, -(p.y as f64)) {
            votes[grid.index(r, c)][k] += 1;
        }
    }
    let label = votes.iter().map(|v| majority(v).unwrap_or(ClassId::IGNORE)).collect();
    let support = votes.iter().map(|v| v.iter().sum()).collect();
    Ok(SparseLabelRaster {
        label: Raster::from_vec(grid, label).expect("grid-sized"),
        support: Raster::from_vec(grid, support).expect("grid-sized"),
    })
}
