use thiserror::Error;

use crate::sensors::AerialGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("projected point ({u:.1}, {v:.1}) is outside the aerial frame")]
pub struct OutOfFrame {
    pub u: f64,
    pub v: f64,
}

/// Pixel position of a world point under the nadir model.
pub fn project_gnss_to_pixel(aerial: &AerialGeometry, fix: (f64, f64)) -> Result<(f64, f64), OutOfFrame> {
    let (u, v) = aerial.project(fix.0, fix.1);
    if aerial.contains(u, v) {
        Ok((u, v))
    } else {
        Err(OutOfFrame { u, v })
    }
}
