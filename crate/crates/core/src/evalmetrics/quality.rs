use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::imaging::RgbImage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("image sizes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("image {0:?} is smaller than the {1}px window")]
    TooSmall((usize, usize), usize),
}

/// PSNR in decibels; identical images give `+inf`, serialized as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Decibels(pub f64);

impl Decibels {
    pub fn is_infinite(&self) -> bool {
        self.0 == f64::INFINITY
    }
}

impl Serialize for Decibels {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Decibels {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tok(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Decibels(v)),
            Raw::Tok(t) if t == "inf" => Ok(Decibels(f64::INFINITY)),
            Raw::Tok(t) => Err(serde::de::Error::custom(format!("unexpected PSNR token {t:?}"))),
        }
    }
}

fn same_shape(a: &RgbImage, b: &RgbImage) -> Result<(), QualityError> {
    if a.dims() == b.dims() {
        Ok(())
    } else {
        Err(QualityError::ShapeMismatch(a.dims(), b.dims()))
    }
}

pub fn psnr(a: &RgbImage, b: &RgbImage, peak: f64) -> Result<Decibels, QualityError> {
    same_shape(a, b)?;
    let n = a.as_raw().len();
    let sse: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(Decibels(f64::INFINITY));
    }
    let mse = sse as f64 / n as f64;
    Ok(Decibels(10.0 * (peak * peak / mse).log10()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub peak: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            peak: 255.0,
        }
    }
}

/// Separable Gaussian filter keeping only fully supported positions.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut horiz = vec![0.0; ow * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for c in 0..ow {
            horiz[r * ow + c] = kernel.iter().zip(&row[c..c + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..k).map(|j| kernel[j] * horiz[(r + j) * ow + c]).sum();
        }
    }
    out
}

/// Mean Gaussian-weighted SSIM over valid windows, averaged across the
/// three color channels.
pub fn ssim(a: &RgbImage, b: &RgbImage, p: &SsimParams) -> Result<f64, QualityError> {
    same_shape(a, b)?;
    let (w, h) = a.dims();
    if w < p.window || h < p.window || p.window == 0 {
        return Err(QualityError::TooSmall((w, h), p.window));
    }
    let half = (p.window as f64 - 1.0) / 2.0;
    let mut kernel: Vec<f64> = (0..p.window)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * p.sigma * p.sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= total);
    let c1 = (p.k1 * p.peak).powi(2);
    let c2 = (p.k2 * p.peak).powi(2);

    let mut acc = 0.0;
    for k in 0..3 {
        let x = a.channel(k);
        let y = b.channel(k);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();
        let mx = filter_valid(&x, w, h, &kernel);
        let my = filter_valid(&y, w, h, &kernel);
        let sxx = filter_valid(&xx, w, h, &kernel);
        let syy = filter_valid(&yy, w, h, &kernel);
        let sxy = filter_valid(&xy, w, h, &kernel);
        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (m1, m2) = (mx[i], my[i]);
            let v1 = sxx[i] - m1 * m1;
            let v2 = syy[i] - m2 * m2;
            let cov = sxy[i] - m1 * m2;
            sum += ((2.0 * m1 * m2 + c1) * (2.0 * cov + c2)) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
        }
        acc += sum / mx.len() as f64;
    }
    Ok(acc / 3.0)
}
