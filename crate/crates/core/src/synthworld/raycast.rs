//! Ray casting against the 2.5D world: LiDAR sweeps and a forward camera.

use serde::{Deserialize, Serialize};

use super::render::class_color;
use super::shapes::Aabb;
use super::world::World;
use crate::grid::Pose2D;
use crate::imaging::{quantize, RgbImage};
use crate::sensors::{LidarPoint, LidarSweep};
use crate::taxonomy::ClassId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarSpec {
    pub sensor_id: String,
    pub channels: usize,
    pub elev_min_deg: f64,
    pub elev_max_deg: f64,
    pub azimuth_step_deg: f64,
    /// Horizontal field of view centered on vehicle-forward.
    pub hfov_deg: f64,
    pub max_range_m: f64,
    pub mount_height_m: f64,
    pub period_us: u64,
}

impl Default for LidarSpec {
    /// 32-channel spinning sensor on the roof.
    fn default() -> Self {
        LidarSpec {
            sensor_id: "lidar_a".into(),
            channels: 32,
            elev_min_deg: -25.0,
            elev_max_deg: 15.0,
            azimuth_step_deg: 0.4,
            hfov_deg: 360.0,
            max_range_m: 50.0,
            mount_height_m: 1.8,
            period_us: 100_000,
        }
    }
}

impl LidarSpec {
    /// 4-layer bumper-mounted automotive scanner facing forward.
    pub fn automotive() -> Self {
        LidarSpec {
            sensor_id: "lidar_b".into(),
            channels: 4,
            elev_min_deg: -3.2,
            elev_max_deg: 0.0,
            azimuth_step_deg: 0.25,
            hfov_deg: 110.0,
            max_range_m: 50.0,
            mount_height_m: 0.5,
            period_us: 80_000,
        }
    }

    fn elevations(&self) -> Vec<f64> {
        if self.channels <= 1 {
            return vec![self.elev_min_deg.to_radians()];
        }
        (0..self.channels)
            .map(|i| {
                let f = i as f64 / (self.channels - 1) as f64;
                (self.elev_min_deg + f * (self.elev_max_deg - self.elev_min_deg)).to_radians()
            })
            .collect()
    }

    fn azimuths(&self) -> Vec<f64> {
        let n = (self.hfov_deg.min(360.0) / self.azimuth_step_deg).round().max(1.0) as usize;
        let start = if self.hfov_deg >= 360.0 {
            0.0
        } else {
            -self.hfov_deg / 2.0
        };
        (0..n)
            .map(|i| (start + i as f64 * self.azimuth_step_deg).to_radians())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Horizontal distance from the sensor.
    pub t: f64,
    /// Height above ground of the hit.
    pub z: f64,
    pub class: ClassId,
    pub primitive: Option<usize>,
}

/// Nearest surface hit of a ray leaving `(origin, height)` along horizontal
/// unit direction `dir` with vertical slope `slope` (dz per horizontal meter).
/// Only `candidates` are tested; `max_t` bounds the horizontal distance.
pub fn cast_ray(
    world: &World,
    candidates: &[usize],
    origin: (f64, f64),
    height: f64,
    dir: (f64, f64),
    slope: f64,
    max_t: f64,
) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    let mut best_t = max_t;
    if slope < 0.0 {
        let tg = -height / slope;
        if tg <= best_t {
            best_t = tg;
            best = Some(RayHit {
                t: tg,
                z: 0.0,
                class: ClassId::IGNORE,
                primitive: None,
            });
        }
    }
    for &i in candidates {
        let prim = &world.primitives[i];
        if prim.height_m <= 0.0 {
            continue;
        }
        let Some((t_in, t_out)) = prim.shape.ray_interval(origin, dir) else {
            continue;
        };
        if t_in <= 0.0 || t_in > best_t {
            continue;
        }
        let z_in = height + slope * t_in;
        let hit = if (0.0..=prim.height_m).contains(&z_in) {
            Some((t_in, z_in))
        } else if z_in > prim.height_m && slope < 0.0 {
            let t_roof = (prim.height_m - height) / slope;
            (t_roof > t_in && t_roof <= t_out).then_some((t_roof, prim.height_m))
        } else {
            None
        };
        if let Some((t, z)) = hit {
            if t <= best_t {
                best_t = t;
                best = Some(RayHit {
                    t,
                    z,
                    class: prim.class,
                    primitive: Some(i),
                });
            }
        }
    }
    if let Some(h) = best.as_mut() {
        if h.primitive.is_none() {
            let x = origin.0 + dir.0 * h.t;
            let y = origin.1 + dir.1 * h.t;
            h.class = candidates
                .iter()
                .rev()
                .find(|&&i| world.primitives[i].shape.contains(x, y))
                .map_or(world.background, |&i| world.primitives[i].class);
        }
    }
    best
}

fn intensity(class: ClassId) -> f32 {
    match class {
        ClassId::ROAD => 0.1,
        ClassId::SIDEWALK => 0.25,
        ClassId::BUILDING => 0.5,
        ClassId::VEHICLE => 0.8,
        ClassId::VRU => 0.6,
        _ => 0.0,
    }
}

/// One sweep from a sensor mounted at the ego reference point. Points are
/// in the ego frame (x forward, y left, z up from ground) and labeled with
/// the class of the surface they hit.
pub fn simulate_lidar(world: &World, ego: &Pose2D, spec: &LidarSpec, t_start_us: u64) -> LidarSweep {
    let candidates = world.cull(&Aabb::around(ego.x, ego.y, spec.max_range_m));
    let (hs, hc) = ego.heading.sin_cos();
    let elevations = spec.elevations();
    let azimuths = spec.azimuths();
    let mut points = Vec::with_capacity(elevations.len() * azimuths.len());
    for (ai, &az) in azimuths.iter().enumerate() {
        let (s, c) = az.sin_cos();
        let dir = (hc * c - hs * s, hs * c + hc * s);
        let t_us = t_start_us + (ai as u64 * spec.period_us) / azimuths.len() as u64;
        for &el in &elevations {
            let max_t = spec.max_range_m * el.cos();
            let Some(hit) = cast_ray(
                world,
                &candidates,
                (ego.x, ego.y),
                spec.mount_height_m,
                dir,
                el.tan(),
                max_t,
            ) else {
                continue;
            };
            points.push(LidarPoint {
                x: (hit.t * c) as f32,
                y: (hit.t * s) as f32,
                z: hit.z as f32,
                intensity: intensity(hit.class),
                t_us,
                class: hit.class,
            });
        }
    }
    LidarSweep {
        sensor_id: spec.sensor_id.clone(),
        points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub mount_height_m: f64,
    pub max_range_m: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec {
            width: 240,
            height: 160,
            hfov_deg: 90.0,
            mount_height_m: 1.5,
            max_range_m: 80.0,
        }
    }
}

const SKY: [u8; 3] = [135, 180, 230];

/// Forward-facing camera view (cylindrical projection) of the world.
pub fn render_vehicle_camera(world: &World, ego: &Pose2D, spec: &CameraSpec) -> RgbImage {
    let candidates = world.cull(&Aabb::around(ego.x, ego.y, spec.max_range_m));
    let hfov = spec.hfov_deg.to_radians();
    let vfov = hfov * spec.height as f64 / spec.width as f64;
    let mut img = RgbImage::new(spec.width, spec.height);
    for col in 0..spec.width {
        let az = hfov / 2.0 - (col as f64 + 0.5) / spec.width as f64 * hfov;
        let a = ego.heading + az;
        let dir = (a.cos(), a.sin());
        for row in 0..spec.height {
            let el = vfov / 2.0 - (row as f64 + 0.5) / spec.height as f64 * vfov;
            let rgb = match cast_ray(
                world,
                &candidates,
                (ego.x, ego.y),
                spec.mount_height_m,
                dir,
                el.tan(),
                spec.max_range_m,
            ) {
                Some(hit) => {
                    let shade = 1.0 - 0.5 * (hit.t / spec.max_range_m).min(1.0);
                    class_color(hit.class).map(|v| quantize(v as f64 * shade))
                }
                None => SKY,
            };
            img.put(col, row, rgb);
        }
    }
    img
}
