//! Stand-in BEV reconstructions used to exercise the image-quality metrics
//! and the two-view annotation workflow without a generative model.

use crate::imaging::{quantize, RgbImage};
use crate::raster::{BinaryMask, SemanticMask};
use crate::synthworld::class_color;

/// Separable box blur of the given radius with edge clamping. Cells outside
/// `valid` are black in the output.
pub fn blurred_view(rgb: &RgbImage, radius: usize, valid: Option<&BinaryMask>) -> RgbImage {
    let (w, h) = rgb.dims();
    let src = rgb.as_raw();
    let r = radius as isize;
    let n = (2 * r + 1) as f64;
    let mut tmp = vec![0.0f64; w * h * 3];
    for row in 0..h {
        for col in 0..w {
            for k in 0..3 {
                let mut acc = 0.0;
                for d in -r..=r {
                    let c = (col as isize + d).clamp(0, w as isize - 1) as usize;
                    acc += src[(row * w + c) * 3 + k] as f64;
                }
                tmp[(row * w + col) * 3 + k] = acc / n;
            }
        }
    }
    let mut out = RgbImage::new(w, h);
    for row in 0..h {
        for col in 0..w {
            if valid.is_some_and(|m| !m.get(row, col)) {
                continue;
            }
            let mut px = [0u8; 3];
            for (k, p) in px.iter_mut().enumerate() {
                let mut acc = 0.0;
                for d in -r..=r {
                    let rr = (row as isize + d).clamp(0, h as isize - 1) as usize;
                    acc += tmp[(rr * w + col) * 3 + k];
                }
                *p = quantize(acc / n);
            }
            out.put(col, row, px);
        }
    }
    out
}

/// Paints each cell with its class render color; ignored cells are black.
pub fn palette_view(mask: &SemanticMask) -> RgbImage {
    let n = mask.grid().size_px();
    let mut out = RgbImage::new(n, n);
    for row in 0..n {
        for col in 0..n {
            let c = mask.get(row, col);
            if c.is_trainable() {
                out.put(col, row, class_color(c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BevGridSpec;
    use crate::raster::Raster;
    use crate::taxonomy::ClassId;

    #[test]
    fn blur_of_constant_is_constant() {
        let img = RgbImage::filled(7, 5, [10, 20, 30]);
        assert_eq!(blurred_view(&img, 2, None), img);
    }

    #[test]
    fn blur_averages_window() {
        let mut img = RgbImage::new(5, 5);
        img.put(2, 2, [90, 90, 90]);
        let b = blurred_view(&img, 1, None);
        assert_eq!(b.get(2, 2), [10, 10, 10]);
        assert_eq!(b.get(1, 1), [10, 10, 10]);
        assert_eq!(b.get(0, 0), [0, 0, 0]);
    }

    #[test]
    fn palette_marks_ignore_black() {
        let g = BevGridSpec::new(0.2, 2).unwrap();
        let m = Raster::from_vec(g, vec![ClassId::ROAD, ClassId::IGNORE, ClassId::TREE, ClassId::VRU]).unwrap();
        let v = palette_view(&m);
        assert_eq!(v.get(0, 0), class_color(ClassId::ROAD));
        assert_eq!(v.get(1, 0), [0, 0, 0]);
        assert_eq!(v.get(0, 1), [0, 0, 0]);
        assert_eq!(v.get(1, 1), class_color(ClassId::VRU));
    }
}
