//! Color-prototype stand-in for the aerial teachers. It scores each crop
//! cell by its distance to the renderer's class colors, which gives
//! calibrated-looking probabilities that drop at blended boundary cells.

use serde::{Deserialize, Serialize};

use super::render::{class_color, ROOF_RGB, STROKE_RGB};
use crate::grid::BevGridSpec;
use crate::imaging::RgbImage;
use crate::raster::{BinaryMask, ProbabilityMap, Raster, ScalarMap};
use crate::taxonomy::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorTeacher {
    /// Softmax temperature in RGB distance units.
    pub temperature: f64,
    /// Emit a fifth structural channel for tree/vegetation.
    pub with_tree: bool,
}

impl Default for ColorTeacher {
    fn default() -> Self {
        ColorTeacher {
            temperature: 18.0,
            with_tree: true,
        }
    }
}

pub struct TeacherOutput {
    /// Structural classes road, sidewalk, building, vehicle (+ tree).
    pub structural: ProbabilityMap,
    pub pedestrian: ScalarMap,
}

#[derive(Clone, Copy)]
enum Slot {
    Structural(usize),
    Pedestrian,
}

impl ColorTeacher {
    pub fn structural_classes(&self) -> Vec<ClassId> {
        let mut v = vec![ClassId::ROAD, ClassId::SIDEWALK, ClassId::BUILDING, ClassId::VEHICLE];
        if self.with_tree {
            v.push(ClassId::TREE);
        }
        v
    }

    fn prototypes(&self) -> Vec<([f64; 3], Slot)> {
        let c = |rgb: [u8; 3]| rgb.map(|v| v as f64);
        let mut p = vec![
            (c(class_color(ClassId::ROAD)), Slot::Structural(0)),
            (c(class_color(ClassId::SIDEWALK)), Slot::Structural(1)),
            (c(class_color(ClassId::BUILDING)), Slot::Structural(2)),
            (c(class_color(ClassId::VEHICLE)), Slot::Structural(3)),
            (c(ROOF_RGB), Slot::Structural(3)),
            (c(STROKE_RGB), Slot::Structural(3)),
            (c(class_color(ClassId::VRU)), Slot::Pedestrian),
        ];
        if self.with_tree {
            p.push((c(class_color(ClassId::TREE)), Slot::Structural(4)));
        }
        p
    }

    /// Predicts on a `size_px × size_px` crop. Cells outside `valid` get a
    /// uniform structural distribution and zero pedestrian probability.
    pub fn predict(&self, rgb: &RgbImage, valid: Option<&BinaryMask>, grid: BevGridSpec) -> TeacherOutput {
        assert_eq!(rgb.dims(), (grid.size_px(), grid.size_px()), "crop must match grid");
        let protos = self.prototypes();
        let k = self.structural_classes().len();
        let two_t2 = 2.0 * self.temperature * self.temperature;
        let mut probs = Vec::with_capacity(grid.len() * k);
        let mut ped = Vec::with_capacity(grid.len());
        let mut logits = vec![0.0f64; protos.len()];
        for (i, px) in rgb.as_raw().chunks_exact(3).enumerate() {
            if valid.is_some_and(|m| !m.data()[i]) {
                probs.extend(std::iter::repeat_n(1.0 / k as f32, k));
                ped.push(0.0);
                continue;
            }
            for (l, (proto, _)) in logits.iter_mut().zip(&protos) {
                let d2: f64 = (0..3).map(|j| (px[j] as f64 - proto[j]).powi(2)).sum();
                *l = -d2 / two_t2;
            }
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut structural = vec![0.0f64; k];
            let mut p_ped = 0.0;
            let mut z = 0.0;
            for (l, (_, slot)) in logits.iter().zip(&protos) {
                let e = (l - m).exp();
                z += e;
                match slot {
                    Slot::Structural(j) => structural[*j] += e,
                    Slot::Pedestrian => p_ped += e,
                }
            }
            let s_sum: f64 = structural.iter().sum();
            if s_sum > 0.0 {
                let mut f32s: Vec<f32> = structural.iter().map(|v| (v / s_sum) as f32).collect();
                let total: f32 = f32s.iter().sum();
                f32s.iter_mut().for_each(|v| *v /= total);
                probs.extend(f32s);
            } else {
                probs.extend(std::iter::repeat_n(1.0 / k as f32, k));
            }
            ped.push(((p_ped / z) as f32).clamp(0.0, 1.0));
        }
        TeacherOutput {
            structural: ProbabilityMap::new(grid, k, probs).expect("normalized by construction"),
            pedestrian: ScalarMap::new(Raster::from_vec(grid, ped).expect("grid-sized"))
                .expect("unit range by construction"),
        }
    }
}
