//! Orthographic nadir rendering of a [`World`].

use serde::{Deserialize, Serialize};

use super::shapes::Aabb;
use super::world::World;
use crate::grid::{snapped_sin_cos, Pose2D};
use crate::imaging::{quantize, GrayImage, LabelImage, Plane, RgbImage};
use crate::sensors::{AerialFrame, AerialGeometry, CameraPose};
use crate::taxonomy::ClassId;

pub const ROOF_RGB: [u8; 3] = [235, 235, 230];
pub const STROKE_RGB: [u8; 3] = [20, 20, 20];

/// Base render color per class.
pub fn class_color(class: ClassId) -> [u8; 3] {
    match class {
        ClassId::ROAD => [70, 70, 75],
        ClassId::SIDEWALK => [175, 165, 150],
        ClassId::BUILDING => [160, 70, 55],
        ClassId::VEHICLE => [40, 70, 190],
        ClassId::VRU => [240, 200, 20],
        ClassId::TREE => [50, 140, 50],
        _ => [255, 0, 255],
    }
}

fn toned(rgb: [u8; 3], tone: i8) -> [u8; 3] {
    rgb.map(|v| (v as i16 + tone as i16).clamp(0, 255) as u8)
}

/// Ego vehicle footprint and the "X" roof marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerSpec {
    pub body_length_m: f64,
    pub body_width_m: f64,
    /// Side of the square spanned by the two diagonal strokes.
    pub x_size_m: f64,
    pub stroke_m: f64,
    /// Supersampling factor per axis for anti-aliasing.
    pub supersample: usize,
}

impl Default for MarkerSpec {
    fn default() -> Self {
        MarkerSpec {
            body_length_m: 4.5,
            body_width_m: 1.8,
            x_size_m: 1.4,
            stroke_m: 0.2,
            supersample: 4,
        }
    }
}

impl MarkerSpec {
    /// Roof color at vehicle-local `(along, across)`, if on the body.
    fn sample(&self, a: f64, b: f64) -> Option<[u8; 3]> {
        if a.abs() > self.body_length_m / 2.0 || b.abs() > self.body_width_m / 2.0 {
            return None;
        }
        let h = self.x_size_m / 2.0;
        let half_stroke = self.stroke_m / 2.0 * std::f64::consts::SQRT_2;
        let on_x = a.abs() <= h
            && b.abs() <= h
            && ((a - b).abs() <= half_stroke || (a + b).abs() <= half_stroke);
        Some(if on_x { STROKE_RGB } else { ROOF_RGB })
    }

    pub fn contains(&self, a: f64, b: f64) -> bool {
        a.abs() <= self.body_length_m / 2.0 && b.abs() <= self.body_width_m / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoVehicle {
    pub pose: Pose2D,
    pub marker: MarkerSpec,
}

/// Renders a `size_px × size_px` nadir frame. The ego vehicle, when given,
/// is painted on top with its roof marker and labeled as a vehicle.
pub fn render_aerial(
    world: &World,
    cam_pose: CameraPose,
    gsd_m: f64,
    size_px: usize,
    ego: Option<&EgoVehicle>,
) -> AerialFrame {
    let geom = AerialGeometry {
        cam_pose,
        gsd_m,
        width: size_px,
        height: size_px,
    };
    let n = size_px as f64 - 1.0;
    let footprint = Aabb::from_points([
        geom.unproject(0.0, 0.0),
        geom.unproject(n, 0.0),
        geom.unproject(0.0, n),
        geom.unproject(n, n),
    ]);
    let visible = world.cull(&footprint.inflate(gsd_m));
    let colors: Vec<[u8; 3]> = world
        .primitives
        .iter()
        .map(|p| toned(class_color(p.class), p.tone))
        .collect();
    let bg = class_color(world.background);

    let (s, c) = snapped_sin_cos(cam_pose.yaw);
    let (u0, v0) = geom.center();
    let mut image = RgbImage::new(size_px, size_px);
    let mut labels = Vec::with_capacity(size_px * size_px);
    for row in 0..size_px {
        let iy = -(row as f64 - v0) * gsd_m;
        for col in 0..size_px {
            let ix = (col as f64 - u0) * gsd_m;
            let x = cam_pose.x + c * ix - s * iy;
            let y = cam_pose.y + s * ix + c * iy;
            let hit = visible
                .iter()
                .rev()
                .copied()
                .find(|&i| world.primitives[i].shape.contains(x, y));
            let (class, rgb) = match hit {
                Some(i) => (world.primitives[i].class, colors[i]),
                None => (world.background, bg),
            };
            labels.push(class);
            image.put(col, row, rgb);
        }
    }
    let mut gt = Plane::from_vec(size_px, size_px, labels).expect("label shape");
    if let Some(ego) = ego {
        paint_ego(&geom, ego, &mut image, &mut gt);
    }
    AerialFrame {
        image,
        gt_semantics: Some(gt),
        t_us: 0,
        cam_pose,
        gsd_m,
    }
}

fn paint_ego(geom: &AerialGeometry, ego: &EgoVehicle, image: &mut RgbImage, gt: &mut LabelImage) {
    let m = &ego.marker;
    let r = (m.body_length_m.hypot(m.body_width_m) / 2.0) / geom.gsd_m + 2.0;
    let (eu, ev) = geom.project(ego.pose.x, ego.pose.y);
    let w = geom.width as f64;
    let h = geom.height as f64;
    let c0 = (eu - r).floor().max(0.0);
    let c1 = (eu + r).ceil().min(w - 1.0);
    let r0 = (ev - r).floor().max(0.0);
    let r1 = (ev + r).ceil().min(h - 1.0);
    if c0 > c1 || r0 > r1 {
        return;
    }
    let (hs, hc) = snapped_sin_cos(ego.pose.heading);
    let ss = m.supersample.max(1);
    let local = |u: f64, v: f64| {
        let (x, y) = geom.unproject(u, v);
        let dx = x - ego.pose.x;
        let dy = y - ego.pose.y;
        (dx * hc + dy * hs, -dx * hs + dy * hc)
    };
    for row in r0 as usize..=r1 as usize {
        for col in c0 as usize..=c1 as usize {
            let under = image.get(col, row);
            let mut acc = [0.0f64; 3];
            let mut any = false;
            for i in 0..ss {
                for j in 0..ss {
                    let du = (j as f64 + 0.5) / ss as f64 - 0.5;
                    let dv = (i as f64 + 0.5) / ss as f64 - 0.5;
                    let (a, b) = local(col as f64 + du, row as f64 + dv);
                    let rgb = match m.sample(a, b) {
                        Some(rgb) => {
                            any = true;
                            rgb
                        }
                        None => under,
                    };
                    for k in 0..3 {
                        acc[k] += rgb[k] as f64;
                    }
                }
            }
            if any {
                let count = (ss * ss) as f64;
                image.put(col, row, acc.map(|v| quantize(v / count)));
            }
            let (a, b) = local(col as f64, row as f64);
            if m.contains(a, b) {
                gt.set(col, row, ClassId::VEHICLE);
            }
        }
    }
}

/// Grayscale template of the ego roof marker as it appears in an aerial
/// image at `gsd_m`, with the vehicle heading `heading_in_image` radians
/// counter-clockwise from the image's right axis. `size_px` should be odd so
/// the vehicle reference point falls on the center pixel.
pub fn marker_template(
    marker: &MarkerSpec,
    gsd_m: f64,
    heading_in_image: f64,
    size_px: usize,
    background: ClassId,
) -> GrayImage {
    let mut world = World::empty(1.0);
    world.background = background;
    let ego = EgoVehicle {
        pose: Pose2D::new(0.0, 0.0, heading_in_image),
        marker: *marker,
    };
    render_aerial(&world, CameraPose::default(), gsd_m, size_px, Some(&ego))
        .image
        .to_gray()
}
