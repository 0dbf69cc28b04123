//! Deterministic 2.5D world generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::shapes::{rects_overlap, Aabb, Shape};
use crate::taxonomy::ClassId;

const MAX_ATTEMPTS: usize = 2000;

/// Lateral clearance kept free around the main road's centerline, where the
/// ego vehicle drives.
pub const EGO_LANE_CLEARANCE_M: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("world extent must be positive, got {0}")]
    BadExtent(f64),
    #[error("could not place {class} #{index} of {requested} after {MAX_ATTEMPTS} attempts")]
    Placement {
        class: ClassId,
        index: usize,
        requested: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub class: ClassId,
    pub height_m: f64,
    /// Per-primitive brightness offset used by the renderer.
    pub tone: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorldCounts {
    pub roads: usize,
    pub buildings: usize,
    pub vehicles: usize,
    pub vrus: usize,
}

/// A square world `[0, extent_m]²` in local east-north meters. Later
/// primitives occlude earlier ones in top-down rasterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub extent_m: f64,
    pub primitives: Vec<Primitive>,
    pub background: ClassId,
}

impl World {
    pub fn empty(extent_m: f64) -> Self {
        World {
            extent_m,
            primitives: Vec::new(),
            background: ClassId::SIDEWALK,
        }
    }

    /// Index of the topmost primitive containing the point.
    pub fn top_primitive_at(&self, x: f64, y: f64) -> Option<usize> {
        self.primitives.iter().rposition(|p| p.shape.contains(x, y))
    }

    pub fn class_at(&self, x: f64, y: f64) -> ClassId {
        self.top_primitive_at(x, y)
            .map_or(self.background, |i| self.primitives[i].class)
    }

    /// Indices of primitives whose bounding box meets `bb`, in paint order.
    pub fn cull(&self, bb: &Aabb) -> Vec<usize> {
        (0..self.primitives.len())
            .filter(|&i| self.primitives[i].shape.aabb().intersects(bb))
            .collect()
    }

    /// Centerline of the first road, which crosses the whole extent.
    pub fn main_road(&self) -> Option<&[(f64, f64)]> {
        self.primitives.iter().find_map(|p| match &p.shape {
            Shape::Polyline { points, .. } if p.class == ClassId::ROAD => Some(points.as_slice()),
            _ => None,
        })
    }

    /// Top-down class raster with `cell_m` resolution starting at the
    /// world origin, rows running south from the northern edge.
    pub fn rasterize(&self, cell_m: f64) -> (usize, Vec<ClassId>) {
        let n = (self.extent_m / cell_m).ceil() as usize;
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            let y = self.extent_m - (r as f64 + 0.5) * cell_m;
            for c in 0..n {
                let x = (c as f64 + 0.5) * cell_m;
                out.push(self.class_at(x, y));
            }
        }
        (n, out)
    }
}

fn inside_extent(shape: &Shape, extent: f64) -> bool {
    let b = shape.aabb();
    b.min_x >= 0.0 && b.min_y >= 0.0 && b.max_x <= extent && b.max_y <= extent
}

struct Placer<'a> {
    extent: f64,
    rng: &'a mut ChaCha8Rng,
}

impl Placer<'_> {
    fn tone(&mut self) -> i8 {
        self.rng.random_range(-12..=12)
    }
}

/// Generates a world with the requested primitive counts. The first road is
/// a west-to-east polyline crossing the whole extent.
pub fn generate_world(seed: u64, extent_m: f64, counts: WorldCounts) -> Result<World, WorldError> {
    if !(extent_m.is_finite() && extent_m > 0.0) {
        return Err(WorldError::BadExtent(extent_m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = World::empty(extent_m);
    let mut p = Placer {
        extent: extent_m,
        rng: &mut rng,
    };

    for i in 0..counts.roads {
        let shape = road_shape(&mut p, i);
        let tone = p.tone();
        world.primitives.push(Primitive {
            shape,
            class: ClassId::ROAD,
            height_m: 0.0,
            tone,
        });
    }
    let roads: Vec<Shape> = world.primitives.iter().map(|p| p.shape.clone()).collect();

    let mut buildings: Vec<Shape> = Vec::new();
    let max_side = (extent_m / 4.0).min(30.0);
    let min_side = (extent_m / 10.0).min(8.0);
    for index in 0..counts.buildings {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let half_len = p.rng.random_range(min_side..=max_side) / 2.0;
            let half_wid = p.rng.random_range(min_side..=max_side) / 2.0;
            let shape = Shape::Rect {
                cx: p.rng.random_range(0.0..p.extent),
                cy: p.rng.random_range(0.0..p.extent),
                half_len,
                half_wid,
                angle: p.rng.random_range(0.0..std::f64::consts::PI),
            };
            if !inside_extent(&shape, p.extent) {
                continue;
            }
            if buildings.iter().any(|b| rects_overlap(b, &shape, 1.0)) {
                continue;
            }
            if roads.iter().any(|r| road_clearance(r, &shape) < 1.0) {
                continue;
            }
            let height_m = p.rng.random_range(3.0..=15.0);
            let tone = p.tone();
            world.primitives.push(Primitive {
                shape: shape.clone(),
                class: ClassId::BUILDING,
                height_m,
                tone,
            });
            buildings.push(shape);
            placed = true;
            break;
        }
        if !placed {
            return Err(WorldError::Placement {
                class: ClassId::BUILDING,
                index,
                requested: counts.buildings,
            });
        }
    }

    let mut vehicles: Vec<Shape> = Vec::new();
    for index in 0..counts.vehicles {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            if roads.is_empty() {
                break;
            }
            let ri = p.rng.random_range(0..roads.len());
            let Shape::Polyline { points, width } = &roads[ri] else {
                unreachable!()
            };
            let seg = p.rng.random_range(0..points.len() - 1);
            let (a, b) = (points[seg], points[seg + 1]);
            let t: f64 = p.rng.random_range(0.0..1.0);
            let dir = (b.1 - a.1).atan2(b.0 - a.0);
            let half_len = p.rng.random_range(2.0..=2.5);
            let half_wid = p.rng.random_range(0.85..=1.0);
            let max_lat = width / 2.0 - half_wid - 0.2;
            let min_lat = if ri == 0 {
                EGO_LANE_CLEARANCE_M + half_wid
            } else {
                0.0
            };
            if max_lat <= min_lat {
                continue;
            }
            let lat = p.rng.random_range(min_lat..max_lat) * if p.rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let (s, c) = dir.sin_cos();
            let shape = Shape::Rect {
                cx: a.0 + t * (b.0 - a.0) - s * lat,
                cy: a.1 + t * (b.1 - a.1) + c * lat,
                half_len,
                half_wid,
                angle: dir,
            };
            if !inside_extent(&shape, p.extent) {
                continue;
            }
            if vehicles.iter().any(|v| rects_overlap(v, &shape, 1.0))
                || buildings.iter().any(|b| rects_overlap(b, &shape, 0.5))
            {
                continue;
            }
            if ri != 0 && ego_lane_blocked(&roads[0], &shape) {
                continue;
            }
            let height_m = if p.rng.random_bool(0.85) {
                p.rng.random_range(1.2..=1.8)
            } else {
                p.rng.random_range(2.5..=3.5)
            };
            let tone = p.tone();
            world.primitives.push(Primitive {
                shape: shape.clone(),
                class: ClassId::VEHICLE,
                height_m,
                tone,
            });
            vehicles.push(shape);
            placed = true;
            break;
        }
        if !placed {
            return Err(WorldError::Placement {
                class: ClassId::VEHICLE,
                index,
                requested: counts.vehicles,
            });
        }
    }

    let mut vrus: Vec<(f64, f64, f64)> = Vec::new();
    for index in 0..counts.vrus {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let radius = p.rng.random_range(0.25..=0.4);
            let cx = p.rng.random_range(radius..p.extent - radius);
            let cy = p.rng.random_range(radius..p.extent - radius);
            let shape = Shape::Disc { cx, cy, radius };
            // must sit fully on sidewalk, clear of vehicles and other VRUs
            let on_sidewalk = (0..8).all(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_4;
                let r = radius + 0.3;
                world.class_at(cx + r * a.cos(), cy + r * a.sin()) == ClassId::SIDEWALK
            }) && world.class_at(cx, cy) == ClassId::SIDEWALK;
            if !on_sidewalk || !inside_extent(&shape, p.extent) {
                continue;
            }
            if vrus
                .iter()
                .any(|&(x, y, r)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() < r + radius + 0.5)
            {
                continue;
            }
            let height_m = p.rng.random_range(1.5..=2.0);
            let tone = p.tone();
            world.primitives.push(Primitive {
                shape,
                class: ClassId::VRU,
                height_m,
                tone,
            });
            vrus.push((cx, cy, radius));
            placed = true;
            break;
        }
        if !placed {
            return Err(WorldError::Placement {
                class: ClassId::VRU,
                index,
                requested: counts.vrus,
            });
        }
    }
    Ok(world)
}

fn road_shape(p: &mut Placer<'_>, i: usize) -> Shape {
    let e = p.extent;
    if i == 0 {
        let n = 7;
        let mut y = e / 2.0;
        let points = (0..n)
            .map(|k| {
                let x = e * k as f64 / (n - 1) as f64;
                if k > 0 {
                    y = (y + p.rng.random_range(-e / 12.0..e / 12.0)).clamp(0.3 * e, 0.7 * e);
                }
                (x, y)
            })
            .collect();
        return Shape::Polyline {
            points,
            width: 8.0,
        };
    }
    let width = p.rng.random_range(6.0..=9.0);
    let a = p.rng.random_range(0.1 * e..0.9 * e);
    let b = (a + p.rng.random_range(-0.1 * e..0.1 * e)).clamp(0.05 * e, 0.95 * e);
    let points = if i % 2 == 1 {
        vec![(a, 0.0), (b, e)]
    } else {
        vec![(0.0, a), (e, b)]
    };
    Shape::Polyline { points, width }
}

/// Distance between a rectangle and the road surface (negative inside).
fn road_clearance(road: &Shape, rect: &Shape) -> f64 {
    let Shape::Polyline { points, width } = road else {
        return f64::INFINITY;
    };
    let best = points
        .windows(2)
        .map(|w| rect.segment_distance(w[0], w[1]))
        .fold(f64::INFINITY, f64::min);
    best - width / 2.0
}

/// Whether a rectangle intrudes on the ego lane around the main road's centerline.
fn ego_lane_blocked(main_road: &Shape, rect: &Shape) -> bool {
    let Shape::Polyline { points, .. } = main_road else {
        return false;
    };
    points
        .windows(2)
        .any(|w| rect.segment_distance(w[0], w[1]) < EGO_LANE_CLEARANCE_M)
}
