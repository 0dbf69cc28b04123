use thiserror::Error;

use crate::grid::BevGridSpec;
use crate::raster::{BinaryMask, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ConeError {
    #[error("horizontal field of view {0} deg is outside (0, 360]")]
    BadFov(f64),
    #[error("range {0} m is not positive")]
    BadRange(f64),
}

/// Cells whose centers lie within `±hfov/2` of vehicle-forward and within
/// `max_range_m` of the ego point. Range defaults to the grid half-diagonal.
pub fn visibility_cone_mask(grid: BevGridSpec, hfov_deg: f64, max_range_m: Option<f64>) -> Result<BinaryMask, ConeError> {
    if !(hfov_deg > 0.0 && hfov_deg <= 360.0) {
        return Err(ConeError::BadFov(hfov_deg));
    }
    let range = max_range_m.unwrap_or_else(|| grid.half_diagonal_m());
    if !(range > 0.0) {
        return Err(ConeError::BadRange(range));
    }
    let half = hfov_deg.to_radians() / 2.0 + 1e-12;
    let (er, ec) = grid.ego_point();
    let cell = grid.cell_m();
    Ok(Raster::from_fn(grid, |r, c| {
        let f = (er - (r as f64 + 0.5)) * cell;
        let s = ((c as f64 + 0.5) - ec) * cell;
        s.abs().atan2(f) <= half && f.hypot(s) <= range + 1e-9
    }))
}
