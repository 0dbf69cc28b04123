//! Metric BEV raster frame and ego poses.
//!
//! The grid is heading-up: the vehicle's forward direction points toward
//! decreasing row index and its right-hand side toward increasing column.
//! The ego reference point sits at the top-left corner of
//! [`BevGridSpec::ego_cell`], i.e. at continuous cell coordinate
//! `(size_px / 2, size_px / 2)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid extent must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("grid size must be positive")]
    ZeroSize,
    #[error("cell ({row}, {col}) outside a {size}x{size} grid")]
    OutOfRange { row: usize, col: usize, size: usize },
}

/// A planar pose in the local east-north frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    /// Meters east.
    pub x: f64,
    /// Meters north.
    pub y: f64,
    /// Radians counter-clockwise from east, normalized to `[0, 2π)`.
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2D {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    /// Unit vector along the heading.
    pub fn forward(&self) -> (f64, f64) {
        let (s, c) = snapped_sin_cos(self.heading);
        (c, s)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `sin_cos` that returns exact values at multiples of π/2.
pub fn snapped_sin_cos(a: f64) -> (f64, f64) {
    let quarter = a / FRAC_PI_2;
    let k = quarter.round();
    if (quarter - k).abs() < 1e-12 {
        match (k as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        a.sin_cos()
    }
}

/// Smallest signed difference `a - b` wrapped to `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawGrid {
    extent_m: f64,
    size_px: usize,
}

/// Square metric raster centered on the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct BevGridSpec {
    extent_m: f64,
    size_px: usize,
}

impl TryFrom<RawGrid> for BevGridSpec {
    type Error = GridError;

    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        BevGridSpec::new(raw.extent_m, raw.size_px)
    }
}

impl From<BevGridSpec> for RawGrid {
    fn from(g: BevGridSpec) -> Self {
        RawGrid {
            extent_m: g.extent_m,
            size_px: g.size_px,
        }
    }
}

impl Default for BevGridSpec {
    /// 42 m at 600 cells, 0.07 m per cell.
    fn default() -> Self {
        BevGridSpec {
            extent_m: 42.0,
            size_px: 600,
        }
    }
}

impl BevGridSpec {
    pub fn new(extent_m: f64, size_px: usize) -> Result<Self, GridError> {
        if !(extent_m.is_finite() && extent_m > 0.0) {
            return Err(GridError::BadExtent(extent_m));
        }
        if size_px == 0 {
            return Err(GridError::ZeroSize);
        }
        Ok(BevGridSpec { extent_m, size_px })
    }

    pub fn extent_m(&self) -> f64 {
        self.extent_m
    }

    pub fn size_px(&self) -> usize {
        self.size_px
    }

    pub fn cell_m(&self) -> f64 {
        self.extent_m / self.size_px as f64
    }

    pub fn len(&self) -> usize {
        self.size_px * self.size_px
    }

    pub fn is_empty(&self) -> bool {
        self.size_px == 0
    }

    /// Cell whose top-left corner is the ego reference point.
    pub fn ego_cell(&self) -> (usize, usize) {
        (self.size_px / 2, self.size_px / 2)
    }

    /// Continuous (row, col) coordinate of the ego reference point.
    pub fn ego_point(&self) -> (f64, f64) {
        let h = self.size_px as f64 / 2.0;
        (h, h)
    }

    /// Half of the grid diagonal in meters.
    pub fn half_diagonal_m(&self) -> f64 {
        self.extent_m / 2.0 * std::f64::consts::SQRT_2
    }

    /// Ego-frame offset `(forward, right)` in meters of a cell center.
    pub fn cell_center_offset(&self, row: usize, col: usize) -> (f64, f64) {
        let (er, ec) = self.ego_point();
        let forward = (er - (row as f64 + 0.5)) * self.extent_m / self.size_px as f64;
        let right = ((col as f64 + 0.5) - ec) * self.extent_m / self.size_px as f64;
        (forward, right)
    }

    /// Cell containing an ego-frame offset `(forward, right)`, if inside.
    pub fn cell_of_offset(&self, forward: f64, right: f64) -> Option<(usize, usize)> {
        let n = self.size_px as f64;
        let (er, ec) = self.ego_point();
        let row = er - forward * n / self.extent_m;
        let col = ec + right * n / self.extent_m;
        if row >= 0.0 && row < n && col >= 0.0 && col < n {
            Some((row as usize, col as usize))
        } else {
            None
        }
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.size_px + col
    }

    /// Precomputed transform from world points to cells for one ego pose.
    pub fn locator(&self, ego: &Pose2D) -> CellLocator {
        let (s, c) = snapped_sin_cos(ego.heading);
        CellLocator {
            grid: *self,
            x: ego.x,
            y: ego.y,
            sin: s,
            cos: c,
        }
    }
}

/// World/cell transform for a fixed grid and ego pose.
#[derive(Debug, Clone, Copy)]
pub struct CellLocator {
    grid: BevGridSpec,
    x: f64,
    y: f64,
    sin: f64,
    cos: f64,
}

impl CellLocator {
    /// Ego-frame `(forward, right)` of a world point.
    pub fn to_ego(&self, px: f64, py: f64) -> (f64, f64) {
        let dx = px - self.x;
        let dy = py - self.y;
        (dx * self.cos + dy * self.sin, dx * self.sin - dy * self.cos)
    }

    pub fn to_world(&self, forward: f64, right: f64) -> (f64, f64) {
        (
            self.x + forward * self.cos + right * self.sin,
            self.y + forward * self.sin - right * self.cos,
        )
    }

    pub fn cell(&self, px: f64, py: f64) -> Option<(usize, usize)> {
        let (f, r) = self.to_ego(px, py);
        self.grid.cell_of_offset(f, r)
    }
}

/// Cell containing world point `p` in the heading-up frame of `ego`.
pub fn world_to_cell(grid: &BevGridSpec, ego: &Pose2D, p: (f64, f64)) -> Option<(usize, usize)> {
    grid.locator(ego).cell(p.0, p.1)
}

/// World coordinates of the center of cell `(row, col)`.
pub fn cell_to_world(
    grid: &BevGridSpec,
    ego: &Pose2D,
    row: usize,
    col: usize,
) -> Result<(f64, f64), GridError> {
    let n = grid.size_px();
    if row >= n || col >= n {
        return Err(GridError::OutOfRange { row, col, size: n });
    }
    let (f, r) = grid.cell_center_offset(row, col);
    Ok(grid.locator(ego).to_world(f, r))
}
