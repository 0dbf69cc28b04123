//! Plain image buffers. Pixel `(col, row)` has its center at continuous
//! coordinate `(u, v) = (col, row)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::ClassId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("expected {expected} bytes for {width}x{height}, got {actual}")]
    Shape {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("zero-sized image {width}x{height}")]
    Empty { width: usize, height: usize },
    #[error("image size mismatch: {a:?} vs {b:?}")]
    SizeMismatch { a: (usize, usize), b: (usize, usize) },
}

/// A generic single-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type GrayImage = Plane<f32>;
pub type LabelImage = Plane<ClassId>;

impl<T: Copy> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::Shape {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(c, r));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, col: usize, row: usize) -> T {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: T) {
        self.data[row * self.width + col] = v;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    /// Nearest pixel to a continuous coordinate, if inside.
    pub fn nearest(&self, u: f64, v: f64) -> Option<T> {
        let c = (u + 0.5).floor();
        let r = (v + 0.5).floor();
        if c >= 0.0 && r >= 0.0 && (c as usize) < self.width && (r as usize) < self.height {
            Some(self.get(c as usize, r as usize))
        } else {
            None
        }
    }
}

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        RgbImage {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != width * height * 3 {
            return Err(ImageError::Shape {
                width,
                height,
                expected: width * height * 3,
                actual: data.len(),
            });
        }
        Ok(RgbImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, col: usize, row: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, col: usize, row: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Bilinear sample; `None` unless the full 2x2 support is inside.
    pub fn bilinear(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let maxu = (self.width - 1) as f64;
        let maxv = (self.height - 1) as f64;
        if u > maxu || v > maxv {
            return None;
        }
        let c0 = (u.floor() as usize).min(self.width - 1);
        let r0 = (v.floor() as usize).min(self.height - 1);
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let fu = u - c0 as f64;
        let fv = v - r0 as f64;
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let p00 = self.data[(r0 * self.width + c0) * 3 + k] as f64;
            let p01 = self.data[(r0 * self.width + c1) * 3 + k] as f64;
            let p10 = self.data[(r1 * self.width + c0) * 3 + k] as f64;
            let p11 = self.data[(r1 * self.width + c1) * 3 + k] as f64;
            let top = p00 + (p01 - p00) * fu;
            let bot = p10 + (p11 - p10) * fu;
            *o = top + (bot - top) * fv;
        }
        Some(out)
    }

    /// Luma in `[0, 1]`.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) / 255.0)
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// One channel as `f64`.
    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.data.iter().skip(k).step_by(3).map(|&b| b as f64).collect()
    }
}

pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
