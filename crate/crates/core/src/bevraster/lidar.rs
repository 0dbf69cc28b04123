use serde::{Deserialize, Serialize};

use crate::grid::BevGridSpec;
use crate::raster::Raster;
use crate::sensors::LidarPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarRasterParams {
    /// Heights (meters above ego ground) mapped to 0 and 1.
    pub height_min_m: f64,
    pub height_max_m: f64,
    /// Count at which density saturates.
    pub density_cap: u32,
}

impl Default for LidarRasterParams {
    fn default() -> Self {
        LidarRasterParams {
            height_min_m: -2.0,
            height_max_m: 4.0,
            density_cap: 64,
        }
    }
}

impl LidarRasterParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.height_min_m < self.height_max_m) {
            return Err(format!(
                "height range [{}, {}] is empty",
                self.height_min_m, self.height_max_m
            ));
        }
        if self.density_cap == 0 {
            return Err("density_cap must be positive".into());
        }
        Ok(())
    }

    pub fn normalize_height(&self, z: f32) -> f32 {
        let z = (z as f64).clamp(self.height_min_m, self.height_max_m);
        ((z - self.height_min_m) / (self.height_max_m - self.height_min_m)) as f32
    }

    pub fn density(&self, count: u32) -> f32 {
        let d = (1.0 + count as f64).ln() / (1.0 + self.density_cap as f64).ln();
        d.min(1.0) as f32
    }
}

/// Per-cell return count and maximum height. Both reductions are order
/// independent, so partial accumulators merge exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarAccumulator {
    grid: BevGridSpec,
    counts: Vec<u32>,
    max_z: Vec<f32>,
}

impl LidarAccumulator {
    pub fn new(grid: BevGridSpec) -> Self {
        LidarAccumulator {
            grid,
            counts: vec![0; grid.len()],
            max_z: vec![f32::NEG_INFINITY; grid.len()],
        }
    }

    /// Adds ego-frame points (x forward, y left); points outside the grid
    /// or with non-finite coordinates are skipped.
    pub fn add(&mut self, points: &[LidarPoint]) {
        for p in points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                continue;
            }
            if let Some((r, c)) = self.grid.cell_of_offset(p.x as f64, -(p.y as f64)) {
                let i = self.grid.index(r, c);
                self.counts[i] += 1;
                self.max_z[i] = self.max_z[i].max(p.z);
            }
        }
    }

    pub fn merge(&mut self, other: &LidarAccumulator) {
        assert_eq!(self.grid, other.grid, "merging accumulators on different grids");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.max_z.iter_mut().zip(&other.max_z) {
            *a = a.max(*b);
        }
    }

    pub fn finish(&self, params: &LidarRasterParams) -> LidarBevRaster {
        let g = self.grid;
        let occupancy = self.counts.iter().map(|&n| if n > 0 { 1.0 } else { 0.0 }).collect();
        let height = self
            .counts
            .iter()
            .zip(&self.max_z)
            .map(|(&n, &z)| if n > 0 { params.normalize_height(z) } else { 0.0 })
            .collect();
        let density = self
            .counts
            .iter()
            .map(|&n| if n > 0 { params.density(n) } else { 0.0 })
            .collect();
        LidarBevRaster {
            params: *params,
            occupancy: Raster::from_vec(g, occupancy).expect("grid-sized"),
            height: Raster::from_vec(g, height).expect("grid-sized"),
            density: Raster::from_vec(g, density).expect("grid-sized"),
            counts: Raster::from_vec(g, self.counts.clone()).expect("grid-sized"),
        }
    }
}

/// Occupancy, normalized max height and log density per BEV cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarBevRaster {
    pub params: LidarRasterParams,
    pub occupancy: Raster<f32>,
    pub height: Raster<f32>,
    pub density: Raster<f32>,
    pub counts: Raster<u32>,
}

impl LidarBevRaster {
    pub fn grid(&self) -> &BevGridSpec {
        self.counts.grid()
    }
}

/// Rasterizes ego-frame sweeps onto `grid`.
pub fn rasterize_lidar<'a>(
    sweeps: impl IntoIterator<Item = &'a [LidarPoint]>,
    grid: BevGridSpec,
    params: &LidarRasterParams,
) -> LidarBevRaster {
    let mut acc = LidarAccumulator::new(grid);
    for s in sweeps {
        acc.add(s);
    }
    acc.finish(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::ClassId;

    fn pt(x: f32, y: f32, z: f32) -> LidarPoint {
        LidarPoint {
            x,
            y,
            z,
            intensity: 0.5,
            t_us: 0,
            class: ClassId::IGNORE,
        }
    }

    #[test]
    fn empty_is_all_zero() {
        let r = rasterize_lidar([&[][..]], BevGridSpec::default(), &LidarRasterParams::default());
        assert!(r.occupancy.data().iter().chain(r.height.data()).chain(r.density.data()).all(|&v| v == 0.0));
        assert!(r.counts.data().iter().all(|&n| n == 0));
    }

    #[test]
    fn single_point_ahead() {
        let pts = [pt(7.0, 0.0, 1.0)];
        let r = rasterize_lidar([&pts[..]], BevGridSpec::default(), &LidarRasterParams::default());
        assert_eq!(r.counts.get(200, 300), 1);
        assert_eq!(r.occupancy.get(200, 300), 1.0);
        assert_eq!(r.height.get(200, 300), 0.5);
        assert!((r.density.get(200, 300) as f64 - 2f64.ln() / 65f64.ln()).abs() < 1e-7);
        assert_eq!(r.counts.data().iter().sum::<u32>(), 1);
    }

    #[test]
    fn height_clamps_and_density_saturates() {
        let p = LidarRasterParams::default();
        assert_eq!(p.normalize_height(-10.0), 0.0);
        assert_eq!(p.normalize_height(10.0), 1.0);
        assert_eq!(p.density(64), 1.0);
        assert_eq!(p.density(1000), 1.0);
    }

    #[test]
    fn left_is_lower_column() {
        let pts = [pt(0.01, 1.0, 0.0)];
        let r = rasterize_lidar([&pts[..]], BevGridSpec::default(), &LidarRasterParams::default());
        assert_eq!(r.counts.get(299, 285), 1);
    }

    #[test]
    fn validation() {
        let bad = LidarRasterParams {
            height_min_m: 1.0,
            height_max_m: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(LidarRasterParams::default().validate().is_ok());
    }
}
