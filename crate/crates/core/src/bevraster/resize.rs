use crate::imaging::{quantize, ImageError, RgbImage};

/// Bilinear resize with half-pixel-center alignment. Same-size input is
/// returned unchanged.
pub fn resize_rgb(image: &RgbImage, width: usize, height: usize) -> Result<RgbImage, ImageError> {
    let (sw, sh) = image.dims();
    if sw == 0 || sh == 0 {
        return Err(ImageError::Empty { width: sw, height: sh });
    }
    if width == 0 || height == 0 {
        return Err(ImageError::Empty { width, height });
    }
    if (sw, sh) == (width, height) {
        return Ok(image.clone());
    }
    let axis = |n_src: usize, n_dst: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_src as f64 / n_dst as f64;
        (0..n_dst)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_src - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(sw, width);
    let ys = axis(sh, height);
    let src = image.as_raw();
    let mut out = Vec::with_capacity(width * height * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for k in 0..3 {
                let p = |x: usize, y: usize| src[(y * sw + x) * 3 + k] as f64;
                let top = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * fx;
                let bot = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * fx;
                out.push(quantize(top + (bot - top) * fy));
            }
        }
    }
    Ok(RgbImage::from_raw(width, height, out).expect("sized"))
}
