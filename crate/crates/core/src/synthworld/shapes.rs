//! 2D primitive shapes with containment and ray-interval queries.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Aabb {
    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min_x <= o.max_x && o.min_x <= self.max_x && self.min_y <= o.max_y && o.min_y <= self.max_y
    }

    pub fn inflate(&self, d: f64) -> Aabb {
        Aabb {
            min_x: self.min_x - d,
            min_y: self.min_y - d,
            max_x: self.max_x + d,
            max_y: self.max_y + d,
        }
    }

    pub fn around(cx: f64, cy: f64, r: f64) -> Aabb {
        Aabb {
            min_x: cx - r,
            min_y: cy - r,
            max_x: cx + r,
            max_y: cy + r,
        }
    }

    pub fn from_points(pts: impl IntoIterator<Item = (f64, f64)>) -> Aabb {
        let mut b = Aabb {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for (x, y) in pts {
            b.min_x = b.min_x.min(x);
            b.min_y = b.min_y.min(y);
            b.max_x = b.max_x.max(x);
            b.max_y = b.max_y.max(y);
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Oriented rectangle; `half_len` runs along `angle` (radians CCW from east).
    Rect {
        cx: f64,
        cy: f64,
        half_len: f64,
        half_wid: f64,
        angle: f64,
    },
    Polyline { points: Vec<(f64, f64)>, width: f64 },
    Disc { cx: f64, cy: f64, radius: f64 },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.contains_tol(x, y, 0.0)
    }

    /// Containment with the boundary inflated by `tol` meters.
    pub fn contains_tol(&self, x: f64, y: f64, tol: f64) -> bool {
        match self {
            Shape::Rect {
                cx,
                cy,
                half_len,
                half_wid,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let dx = x - cx;
                let dy = y - cy;
                let a = dx * c + dy * s;
                let b = -dx * s + dy * c;
                a.abs() <= half_len + tol && b.abs() <= half_wid + tol
            }
            Shape::Polyline { points, width } => {
                let lim = width / 2.0 + tol;
                let lim2 = lim * lim;
                points
                    .windows(2)
                    .any(|w| point_segment_dist2((x, y), w[0], w[1]) <= lim2)
            }
            Shape::Disc { cx, cy, radius } => {
                let r = radius + tol;
                (x - cx).powi(2) + (y - cy).powi(2) <= r * r
            }
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Shape::Rect { .. } => Aabb::from_points(self.corners()),
            Shape::Polyline { points, width } => {
                Aabb::from_points(points.iter().copied()).inflate(width / 2.0)
            }
            Shape::Disc { cx, cy, radius } => Aabb::around(*cx, *cy, *radius),
        }
    }

    /// Corners of a rectangle (empty for other shapes), counter-clockwise.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        match self {
            Shape::Rect {
                cx,
                cy,
                half_len,
                half_wid,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
                    .iter()
                    .map(|(a, b)| {
                        let lx = a * half_len;
                        let ly = b * half_wid;
                        (cx + lx * c - ly * s, cy + lx * s + ly * c)
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Parameter interval `[t_in, t_out]` where the ray `o + t·d` (unit `d`)
    /// lies inside the shape. Rectangles and discs only.
    pub fn ray_interval(&self, o: (f64, f64), d: (f64, f64)) -> Option<(f64, f64)> {
        match self {
            Shape::Rect {
                cx,
                cy,
                half_len,
                half_wid,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let ox = o.0 - cx;
                let oy = o.1 - cy;
                let la = ox * c + oy * s;
                let lb = -ox * s + oy * c;
                let da = d.0 * c + d.1 * s;
                let db = -d.0 * s + d.1 * c;
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for (p, dd, h) in [(la, da, *half_len), (lb, db, *half_wid)] {
                    if dd.abs() < 1e-15 {
                        if p.abs() > h {
                            return None;
                        }
                    } else {
                        let a = (-h - p) / dd;
                        let b = (h - p) / dd;
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        t0 = t0.max(lo);
                        t1 = t1.min(hi);
                    }
                }
                (t0 <= t1).then_some((t0, t1))
            }
            Shape::Disc { cx, cy, radius } => {
                let ox = o.0 - cx;
                let oy = o.1 - cy;
                let b = ox * d.0 + oy * d.1;
                let c = ox * ox + oy * oy - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                Some((-b - sq, -b + sq))
            }
            Shape::Polyline { .. } => None,
        }
    }

    /// Minimum distance from a segment to this shape (0 when they touch).
    pub fn segment_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        match self {
            Shape::Rect { .. } => {
                let corners = self.corners();
                if self.contains(a.0, a.1) || self.contains(b.0, b.1) {
                    return 0.0;
                }
                let mut best = f64::INFINITY;
                for i in 0..4 {
                    let p = corners[i];
                    let q = corners[(i + 1) % 4];
                    if segments_intersect(a, b, p, q) {
                        return 0.0;
                    }
                    best = best
                        .min(point_segment_dist2(p, a, b))
                        .min(point_segment_dist2(a, p, q))
                        .min(point_segment_dist2(b, p, q));
                }
                best.sqrt()
            }
            Shape::Disc { cx, cy, radius } => {
                (point_segment_dist2((*cx, *cy), a, b).sqrt() - radius).max(0.0)
            }
            Shape::Polyline { points, width } => points
                .windows(2)
                .map(|w| (segment_segment_dist(a, b, w[0], w[1]) - width / 2.0).max(0.0))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

pub fn point_segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let abx = b.0 - a.0;
    let aby = b.1 - a.1;
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = a.0 + t * abx - p.0;
    let y = a.1 + t * aby - p.1;
    x * x + y * y
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub fn segment_segment_dist(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_dist2(a, c, d)
        .min(point_segment_dist2(b, c, d))
        .min(point_segment_dist2(c, a, b))
        .min(point_segment_dist2(d, a, b))
        .sqrt()
}

/// Separating-axis overlap test for two rectangles, with a clearance margin.
pub fn rects_overlap(a: &Shape, b: &Shape, margin: f64) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    if ca.len() != 4 || cb.len() != 4 {
        return false;
    }
    for poly in [&ca, &cb] {
        for i in 0..4 {
            let p = poly[i];
            let q = poly[(i + 1) % 4];
            let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
            let n = ((q.1 - p.1) / len, -(q.0 - p.0) / len);
            let proj = |pts: &[(f64, f64)]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
                    let v = x * n.0 + y * n.1;
                    (lo.min(v), hi.max(v))
                })
            };
            let (a0, a1) = proj(&ca);
            let (b0, b1) = proj(&cb);
            if a1 + margin < b0 || b1 + margin < a0 {
                return false;
            }
        }
    }
    true
}
