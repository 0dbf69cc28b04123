//! Grid-aligned raster containers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::BevGridSpec;
use crate::taxonomy::ClassId;

/// Tolerance on per-cell probability sums.
pub const PROB_SUM_TOL: f32 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("expected {expected} values for the grid, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch {
        left: BevGridSpec,
        right: BevGridSpec,
    },
    #[error("value {value} at cell {index} outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f32 },
    #[error("probabilities at cell {index} sum to {sum}")]
    NotNormalized { index: usize, sum: f32 },
    #[error("probability map needs at least one class")]
    NoClasses,
}

/// A `size_px × size_px` row-major raster on a BEV grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster<T> {
    grid: BevGridSpec,
    data: Vec<T>,
}

pub type SemanticMask = Raster<ClassId>;
pub type BinaryMask = Raster<bool>;

impl<T: Copy> Raster<T> {
    pub fn filled(grid: BevGridSpec, value: T) -> Self {
        Raster {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: BevGridSpec, data: Vec<T>) -> Result<Self, RasterError> {
        if data.len() != grid.len() {
            return Err(RasterError::Shape {
                expected: grid.len(),
                actual: data.len(),
            });
        }
        Ok(Raster { grid, data })
    }

    pub fn from_fn(grid: BevGridSpec, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let n = grid.size_px();
        let mut data = Vec::with_capacity(grid.len());
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Raster { grid, data }
    }

    pub fn grid(&self) -> &BevGridSpec {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.grid.size_px()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.grid.size_px() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let n = self.grid.size_px();
        self.data[row * n + col] = value;
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Raster<U> {
        Raster {
            grid: self.grid,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    pub fn ensure_same_grid<U>(&self, other: &Raster<U>) -> Result<(), RasterError> {
        check_grids(&self.grid, &other.grid)
    }
}

impl Raster<bool> {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

impl Raster<ClassId> {
    /// Fraction of cells holding IGNORE/VOID.
    pub fn void_fraction(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let n = self.data.iter().filter(|c| c.is_ignore()).count();
        n as f64 / self.data.len() as f64
    }
}

pub fn check_grids(a: &BevGridSpec, b: &BevGridSpec) -> Result<(), RasterError> {
    if a == b {
        Ok(())
    } else {
        Err(RasterError::GridMismatch {
            left: *a,
            right: *b,
        })
    }
}

/// Per-cell scalar in `[0, 1]`, e.g. a pedestrian probability or confidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarMap(Raster<f32>);

impl ScalarMap {
    pub fn new(raster: Raster<f32>) -> Result<Self, RasterError> {
        for (index, &value) in raster.data().iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(RasterError::OutOfUnitRange { index, value });
            }
        }
        Ok(ScalarMap(raster))
    }

    pub fn filled(grid: BevGridSpec, value: f32) -> Result<Self, RasterError> {
        Self::new(Raster::filled(grid, value))
    }

    pub fn raster(&self) -> &Raster<f32> {
        &self.0
    }

    pub fn grid(&self) -> &BevGridSpec {
        self.0.grid()
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.0.get(row, col)
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    pub fn into_raster(self) -> Raster<f32> {
        self.0
    }
}

impl<'de> Deserialize<'de> for ScalarMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raster = Raster::<f32>::deserialize(d)?;
        ScalarMap::new(raster).map_err(serde::de::Error::custom)
    }
}

/// Per-cell class distribution over `k` classes, stored cell-major
/// (`data[cell * k + class]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityMap {
    grid: BevGridSpec,
    k: usize,
    data: Vec<f32>,
}

#[derive(Deserialize)]
struct RawProbabilityMap {
    grid: BevGridSpec,
    k: usize,
    data: Vec<f32>,
}

impl<'de> Deserialize<'de> for ProbabilityMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawProbabilityMap::deserialize(d)?;
        ProbabilityMap::new(raw.grid, raw.k, raw.data).map_err(serde::de::Error::custom)
    }
}

impl ProbabilityMap {
    pub fn new(grid: BevGridSpec, k: usize, data: Vec<f32>) -> Result<Self, RasterError> {
        if k == 0 {
            return Err(RasterError::NoClasses);
        }
        if data.len() != grid.len() * k {
            return Err(RasterError::Shape {
                expected: grid.len() * k,
                actual: data.len(),
            });
        }
        for (cell, probs) in data.chunks_exact(k).enumerate() {
            let mut sum = 0.0f64;
            for (j, &p) in probs.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(RasterError::OutOfUnitRange {
                        index: cell * k + j,
                        value: p,
                    });
                }
                sum += p as f64;
            }
            if (sum - 1.0).abs() > PROB_SUM_TOL as f64 {
                return Err(RasterError::NotNormalized {
                    index: cell,
                    sum: sum as f32,
                });
            }
        }
        Ok(ProbabilityMap { grid, k, data })
    }

    pub fn grid(&self) -> &BevGridSpec {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f32] {
        let i = self.grid.index(row, col) * self.k;
        &self.data[i..i + self.k]
    }

    /// Channel-major planes, one per class.
    pub fn planes(&self) -> Vec<Vec<f32>> {
        (0..self.k)
            .map(|j| self.data.iter().skip(j).step_by(self.k).copied().collect())
            .collect()
    }

    pub fn from_planes(grid: BevGridSpec, planes: &[Vec<f32>]) -> Result<Self, RasterError> {
        let k = planes.len();
        let mut data = Vec::with_capacity(grid.len() * k);
        for i in 0..grid.len() {
            for p in planes {
                data.push(*p.get(i).ok_or(RasterError::Shape {
                    expected: grid.len(),
                    actual: p.len(),
                })?);
            }
        }
        Self::new(grid, k, data)
    }
}
