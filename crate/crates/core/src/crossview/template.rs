//! Zero-mean normalized cross-correlation search with coarse-to-fine
//! refinement and a parabolic sub-pixel peak.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("template has zero variance")]
    Degenerate,
    #[error("template {tw}x{th} does not fit in image {iw}x{ih}")]
    TooLarge { tw: usize, th: usize, iw: usize, ih: usize },
    #[error("template sides must be odd, got {0}x{1}")]
    EvenSize(usize, usize),
}

/// Affine map from NCC to a `[0, 1]` confidence: `(ncc - lo) / (hi - lo)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceMapping {
    pub ncc_lo: f64,
    pub ncc_hi: f64,
}

impl Default for ConfidenceMapping {
    fn default() -> Self {
        ConfidenceMapping {
            ncc_lo: -1.0,
            ncc_hi: 1.0,
        }
    }
}

impl ConfidenceMapping {
    pub fn apply(&self, ncc: f64) -> f64 {
        ((ncc - self.ncc_lo) / (self.ncc_hi - self.ncc_lo)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Search radius around the prior, in pixels.
    pub window_px: usize,
    pub min_conf: f64,
    pub mapping: ConfidenceMapping,
    /// Downsampling factor of the coarse pass; 1 searches exhaustively.
    pub coarse_factor: usize,
    /// Coarse local maxima refined at full resolution.
    pub coarse_candidates: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            window_px: 160,
            min_conf: 0.65,
            mapping: ConfidenceMapping::default(),
            coarse_factor: 4,
            coarse_candidates: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateMatch {
    /// Sub-pixel position of the template center.
    pub u: f64,
    pub v: f64,
    pub ncc: f64,
    pub confidence: f64,
}

/// Zero-mean template with its energy, plus image integral tables.
struct Correlator<'a> {
    image: &'a GrayImage,
    sum: Vec<f64>,
    sum2: Vec<f64>,
    tmpl: Vec<f64>,
    tw: usize,
    th: usize,
    t_norm: f64,
}

impl<'a> Correlator<'a> {
    fn new(image: &'a GrayImage, template: &GrayImage) -> Result<Self, TemplateError> {
        let (tw, th) = (template.width(), template.height());
        let n = (tw * th) as f64;
        let mean = template.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let tmpl: Vec<f64> = template.data().iter().map(|&v| v as f64 - mean).collect();
        let energy: f64 = tmpl.iter().map(|v| v * v).sum();
        if energy <= 1e-12 * n {
            return Err(TemplateError::Degenerate);
        }
        let (w, h) = (image.width(), image.height());
        let mut sum = vec![0.0; (w + 1) * (h + 1)];
        let mut sum2 = vec![0.0; (w + 1) * (h + 1)];
        for r in 0..h {
            let (mut rs, mut rs2) = (0.0, 0.0);
            for (c, &v) in image.row(r).iter().enumerate() {
                let v = v as f64;
                rs += v;
                rs2 += v * v;
                let i = (r + 1) * (w + 1) + c + 1;
                sum[i] = sum[i - (w + 1)] + rs;
                sum2[i] = sum2[i - (w + 1)] + rs2;
            }
        }
        Ok(Correlator {
            image,
            sum,
            sum2,
            tmpl,
            tw,
            th,
            t_norm: energy.sqrt(),
        })
    }

    fn rect(&self, table: &[f64], x: usize, y: usize) -> f64 {
        let w1 = self.image.width() + 1;
        let (x1, y1) = (x + self.tw, y + self.th);
        table[y1 * w1 + x1] - table[y * w1 + x1] - table[y1 * w1 + x] + table[y * w1 + x]
    }

    /// NCC with the template's top-left corner at `(x, y)`. Flat image
    /// windows score 0.
    fn ncc(&self, x: usize, y: usize) -> f64 {
        let n = (self.tw * self.th) as f64;
        let s = self.rect(&self.sum, x, y);
        let var = self.rect(&self.sum2, x, y) - s * s / n;
        if var <= 1e-9 * n {
            return 0.0;
        }
        let w = self.image.width();
        let data = self.image.data();
        let mut dot = 0.0;
        for r in 0..self.th {
            let row = &data[(y + r) * w + x..(y + r) * w + x + self.tw];
            let t = &self.tmpl[r * self.tw..(r + 1) * self.tw];
            dot += row.iter().zip(t).map(|(&a, &b)| a as f64 * b).sum::<f64>();
        }
        (dot / (var.sqrt() * self.t_norm)).clamp(-1.0, 1.0)
    }
}

/// Inclusive range of top-left positions whose template center lies within
/// `radius` of `center`, clipped so the template stays inside `limit`.
fn span(center: f64, radius: usize, half: usize, t: usize, limit: usize) -> Option<(usize, usize)> {
    let lo = (center.round() - radius as f64 - half as f64).max(0.0);
    let hi = (center.round() + radius as f64 - half as f64).min((limit - t) as f64);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

fn box_downsample(img: &GrayImage, f: usize) -> GrayImage {
    let (w, h) = (img.width() / f, img.height() / f);
    let inv = 1.0 / (f * f) as f32;
    GrayImage::from_fn(w, h, |c, r| {
        let mut s = 0.0;
        for dr in 0..f {
            s += img.row(r * f + dr)[c * f..(c + 1) * f].iter().sum::<f32>();
        }
        s * inv
    })
}

/// Scores a full grid of positions, row-major, over `xs × ys`.
fn score_grid(c: &Correlator, xs: (usize, usize), ys: (usize, usize)) -> Vec<f64> {
    let mut out = Vec::with_capacity((xs.1 - xs.0 + 1) * (ys.1 - ys.0 + 1));
    for y in ys.0..=ys.1 {
        for x in xs.0..=xs.1 {
            out.push(c.ncc(x, y));
        }
    }
    out
}

fn parabolic(l: f64, c: f64, r: f64) -> f64 {
    let d = l - 2.0 * c + r;
    if d < 0.0 {
        (0.5 * (l - r) / d).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Locates `template` near `prior` in `image`. Returns `None` when the best
/// correlation maps below `params.min_conf`. Both template sides must be odd
/// so that its center is a pixel.
pub fn refine_by_template(
    image: &GrayImage,
    prior: (f64, f64),
    template: &GrayImage,
    params: &MatchParams,
) -> Result<Option<TemplateMatch>, TemplateError> {
    let (tw, th) = (template.width(), template.height());
    if tw % 2 == 0 || th % 2 == 0 {
        return Err(TemplateError::EvenSize(tw, th));
    }
    let (iw, ih) = (image.width(), image.height());
    if tw > iw || th > ih {
        return Err(TemplateError::TooLarge { tw, th, iw, ih });
    }
    let fine = Correlator::new(image, template)?;
    let (hx, hy) = (tw / 2, th / 2);
    let Some(xs) = span(prior.0, params.window_px, hx, tw, iw) else {
        return Ok(None);
    };
    let Some(ys) = span(prior.1, params.window_px, hy, th, ih) else {
        return Ok(None);
    };

    // Candidate top-left positions at full resolution, each searched within
    // `radius` pixels.
    let f = params.coarse_factor.max(1);
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    let mut radius = 0;
    if f > 1 && tw / f >= 3 && th / f >= 3 {
        let coarse_img = box_downsample(image, f);
        let coarse_tmpl = box_downsample(template, f);
        if let Ok(coarse) = Correlator::new(&coarse_img, &coarse_tmpl) {
            let (cw, ch) = (coarse_tmpl.width(), coarse_tmpl.height());
            let cx = (xs.0 / f, (xs.1 / f).min(coarse_img.width() - cw));
            let cy = (ys.0 / f, (ys.1 / f).min(coarse_img.height() - ch));
            if cx.0 <= cx.1 && cy.0 <= cy.1 {
                let gw = cx.1 - cx.0 + 1;
                let gh = cy.1 - cy.0 + 1;
                let scores = score_grid(&coarse, cx, cy);
                let mut peaks: Vec<(f64, usize)> = (0..scores.len())
                    .filter(|&i| {
                        let (gx, gy) = (i % gw, i / gw);
                        let s = scores[i];
                        (gy.saturating_sub(1)..=(gy + 1).min(gh - 1)).all(|yy| {
                            (gx.saturating_sub(1)..=(gx + 1).min(gw - 1))
                                .all(|xx| scores[yy * gw + xx] <= s)
                        })
                    })
                    .map(|i| (scores[i], i))
                    .collect();
                peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                seeds = peaks
                    .iter()
                    .take(params.coarse_candidates.max(1))
                    .map(|&(_, i)| ((cx.0 + i % gw) * f, (cy.0 + i / gw) * f))
                    .collect();
                radius = f + 1;
            }
        }
    }
    let regions: Vec<((usize, usize), (usize, usize))> = if seeds.is_empty() {
        vec![(xs, ys)]
    } else {
        seeds
            .iter()
            .map(|&(x, y)| {
                (
                    (x.saturating_sub(radius).max(xs.0), (x + radius).min(xs.1)),
                    (y.saturating_sub(radius).max(ys.0), (y + radius).min(ys.1)),
                )
            })
            .filter(|(a, b)| a.0 <= a.1 && b.0 <= b.1)
            .collect()
    };

    let mut best: Option<(f64, usize, usize)> = None;
    for (rx, ry) in regions {
        let scores = score_grid(&fine, rx, ry);
        let gw = rx.1 - rx.0 + 1;
        for (i, &s) in scores.iter().enumerate() {
            let (x, y) = (rx.0 + i % gw, ry.0 + i / gw);
            // strict comparison keeps the first maximum in scan order
            let better = match best {
                None => true,
                Some((b, bx, by)) => s > b || (s == b && (y, x) < (by, bx)),
            };
            if better {
                best = Some((s, x, y));
            }
        }
    }
    let Some((peak, x, y)) = best else {
        return Ok(None);
    };
    let confidence = params.mapping.apply(peak);
    if confidence < params.min_conf {
        return Ok(None);
    }
    let du = if x > xs.0 && x < xs.1 {
        parabolic(fine.ncc(x - 1, y), peak, fine.ncc(x + 1, y))
    } else {
        0.0
    };
    let dv = if y > ys.0 && y < ys.1 {
        parabolic(fine.ncc(x, y - 1), peak, fine.ncc(x, y + 1))
    } else {
        0.0
    };
    Ok(Some(TemplateMatch {
        u: (x + hx) as f64 + du,
        v: (y + hy) as f64 + dv,
        ncc: peak,
        confidence,
    }))
}
