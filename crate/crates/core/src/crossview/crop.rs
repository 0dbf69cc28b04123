//! Heading-up metric crops of an aerial frame around the ego pixel.

use crate::grid::{normalize_angle, snapped_sin_cos, BevGridSpec};
use crate::imaging::{quantize, RgbImage};
use crate::raster::{BinaryMask, Raster, SemanticMask};
use crate::sensors::AerialFrame;
use crate::taxonomy::ClassId;

#[derive(Debug, Clone, PartialEq)]
pub struct BevCrop {
    pub grid: BevGridSpec,
    /// Row-major `size_px × size_px`, zero on invalid cells.
    pub rgb: RgbImage,
    pub valid: BinaryMask,
    /// Nearest-neighbor semantic crop when the frame carries ground truth;
    /// IGNORE on invalid cells.
    pub gt: Option<SemanticMask>,
}

/// Vehicle heading measured counter-clockwise from the image's right axis,
/// given the heading from east and the camera yaw from north.
pub fn heading_in_image(vehicle_heading: f64, cam_yaw: f64) -> f64 {
    normalize_angle(vehicle_heading - cam_yaw)
}

/// Continuous aerial pixel under the center of BEV cell `(row, col)`.
pub fn cell_source_pixel(grid: &BevGridSpec, ego_pixel: (f64, f64), heading: f64, gsd_m: f64, row: usize, col: usize) -> (f64, f64) {
    let (s, c) = snapped_sin_cos(heading);
    let scale = grid.cell_m() / gsd_m;
    let (er, ec) = grid.ego_point();
    let f = er - (row as f64 + 0.5);
    let r = (col as f64 + 0.5) - ec;
    (
        ego_pixel.0 + (f * c + r * s) * scale,
        ego_pixel.1 + (r * c - f * s) * scale,
    )
}

/// Resamples the `extent_m` square centered on `ego_pixel` so the vehicle
/// heading points up. RGB is bilinear, semantics nearest-neighbor.
pub fn make_bev_crop(aerial: &AerialFrame, ego_pixel: (f64, f64), heading: f64, grid: BevGridSpec) -> BevCrop {
    let n = grid.size_px();
    let (s, c) = snapped_sin_cos(heading);
    let scale = grid.cell_m() / aerial.gsd_m;
    let (er, ec) = grid.ego_point();
    let mut rgb = RgbImage::new(n, n);
    let mut valid = vec![false; n * n];
    let mut gt = aerial.gt_semantics.as_ref().map(|_| vec![ClassId::IGNORE; n * n]);
    for row in 0..n {
        let f = er - (row as f64 + 0.5);
        for col in 0..n {
            let r = (col as f64 + 0.5) - ec;
            let u = ego_pixel.0 + (f * c + r * s) * scale;
            let v = ego_pixel.1 + (r * c - f * s) * scale;
            let Some(px) = aerial.image.bilinear(u, v) else {
                continue;
            };
            let i = row * n + col;
            valid[i] = true;
            rgb.put(col, row, px.map(quantize));
            if let (Some(out), Some(src)) = (gt.as_mut(), aerial.gt_semantics.as_ref()) {
                if let Some(cls) = src.nearest(u, v) {
                    out[i] = cls;
                }
            }
        }
    }
    BevCrop {
        grid,
        rgb,
        valid: Raster::from_vec(grid, valid).expect("grid-sized"),
        gt: gt.map(|g| Raster::from_vec(grid, g).expect("grid-sized")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::LabelImage;
    use crate::sensors::CameraPose;
    use std::f64::consts::FRAC_PI_2;

    fn frame(w: usize, h: usize, gsd: f64) -> AerialFrame {
        let image = RgbImage::from_raw(
            w,
            h,
            (0..w * h).flat_map(|i| [(i % 251) as u8, (i / w % 241) as u8, (i % w % 239) as u8]).collect(),
        )
        .unwrap();
        AerialFrame {
            image,
            gt_semantics: Some(LabelImage::from_fn(w, h, |c, r| ClassId::from_index((c + r) % 5).unwrap())),
            t_us: 0,
            cam_pose: CameraPose::default(),
            gsd_m: gsd,
        }
    }

    #[test]
    fn identity_crop_is_centered_block() {
        let grid = BevGridSpec::new(4.2, 60).unwrap();
        let f = frame(120, 100, 0.07);
        // image center (59.5, 49.5); heading up means pi/2 from the right axis
        let crop = make_bev_crop(&f, (59.5, 49.5), FRAC_PI_2, grid);
        assert_eq!(crop.valid.count_true(), 3600);
        for r in 0..60 {
            for c in 0..60 {
                assert_eq!(crop.rgb.get(c, r), f.image.get(c + 30, r + 20));
                assert_eq!(crop.gt.as_ref().unwrap().get(r, c), f.gt_semantics.as_ref().unwrap().get(c + 30, r + 20));
            }
        }
    }

    #[test]
    fn quarter_turn_heading_rotates_block() {
        let grid = BevGridSpec::new(4.2, 60).unwrap();
        let f = frame(120, 100, 0.07);
        // heading along the image right axis: forward is +u, right is +v
        let crop = make_bev_crop(&f, (59.5, 49.5), 0.0, grid);
        for r in 0..60 {
            for c in 0..60 {
                let u = 59.5 + (30.0 - r as f64 - 0.5);
                let v = 49.5 + (c as f64 + 0.5 - 30.0);
                assert_eq!(crop.rgb.get(c, r), f.image.get(u as usize, v as usize));
            }
        }
    }

    #[test]
    fn point_ahead_lands_ahead() {
        let grid = BevGridSpec::default();
        // 5 m ahead at 90 degrees off image-up: ahead is +u
        let (u, v) = cell_source_pixel(&grid, (599.5, 599.5), 0.0, 0.07, 300 - 72, 300);
        assert!((u - (599.5 + 71.5)).abs() < 1e-9 && (v - 600.0).abs() < 1e-9);
    }

    #[test]
    fn edge_leaves_invalid_wedge() {
        let grid = BevGridSpec::new(4.2, 60).unwrap();
        let f = frame(120, 100, 0.07);
        let crop = make_bev_crop(&f, (10.0, 49.5), FRAC_PI_2, grid);
        // columns whose source u < 0 are invalid and black
        for r in 0..60 {
            for c in 0..60 {
                let u = 10.0 + (c as f64 + 0.5 - 30.0);
                assert_eq!(crop.valid.get(r, c), u >= 0.0, "({r},{c})");
                if u < 0.0 {
                    assert_eq!(crop.rgb.get(c, r), [0, 0, 0]);
                    assert_eq!(crop.gt.as_ref().unwrap().get(r, c), ClassId::IGNORE);
                }
            }
        }
    }
}
