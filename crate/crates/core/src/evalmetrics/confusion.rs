use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::AddAssign;

use crate::bevraster::SparseLabelRaster;
use crate::raster::{check_grids, BinaryMask, RasterError, SemanticMask};
use crate::taxonomy::{ClassId, NUM_CLASSES};

/// Counts over trainable classes, rows indexed by ground truth and columns
/// by prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
    /// Evaluated cells where either side is IGNORE/VOID.
    pub ignored_pixels: u64,
    pub total_pixels: u64,
}

impl AddAssign<&ConfusionMatrix> for ConfusionMatrix {
    fn add_assign(&mut self, rhs: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&rhs.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.ignored_pixels += rhs.ignored_pixels;
        self.total_pixels += rhs.total_pixels;
    }
}

impl ConfusionMatrix {
    pub fn scored_pixels(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn add_cell(&mut self, gt: ClassId, pred: ClassId) {
        self.total_pixels += 1;
        match (gt.index().filter(|_| gt.is_trainable()), pred.index().filter(|_| pred.is_trainable())) {
            (Some(g), Some(p)) => self.counts[g][p] += 1,
            _ => self.ignored_pixels += 1,
        }
    }

    /// `(tp, fp, fn)` for class index `k`.
    pub fn class_counts(&self, k: usize) -> (u64, u64, u64) {
        let tp = self.counts[k][k];
        let fp = (0..NUM_CLASSES).map(|g| self.counts[g][k]).sum::<u64>() - tp;
        let fn_ = self.counts[k].iter().sum::<u64>() - tp;
        (tp, fp, fn_)
    }
}

/// Accumulates cells where `eval_mask` (if any) is set. Cells with an
/// IGNORE ground truth or a void prediction count as ignored.
pub fn confusion(pred: &SemanticMask, gt: &SemanticMask, eval_mask: Option<&BinaryMask>) -> Result<ConfusionMatrix, RasterError> {
    check_grids(pred.grid(), gt.grid())?;
    if let Some(m) = eval_mask {
        check_grids(pred.grid(), m.grid())?;
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&p, &g)) in pred.data().iter().zip(gt.data()).enumerate() {
        if eval_mask.is_none_or(|m| m.data()[i]) {
            cm.add_cell(g, p);
        }
    }
    Ok(cm)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoUReport {
    /// IoU per class name; `null` when the class is absent from both sides.
    pub per_class_iou: BTreeMap<String, Option<f64>>,
    pub miou_all: Option<f64>,
    pub miou_static: Option<f64>,
    pub miou_dyn: Option<f64>,
    pub pixel_accuracy: Option<f64>,
    pub ignored_fraction: f64,
    pub undefined_classes: Vec<String>,
    pub scored_pixels: u64,
    pub total_pixels: u64,
}

impl IoUReport {
    pub fn iou(&self, class: ClassId) -> Option<f64> {
        self.per_class_iou.get(class.name()).copied().flatten()
    }

    pub fn empty_support(&self) -> bool {
        self.scored_pixels == 0
    }
}

pub fn class_ious(cm: &ConfusionMatrix) -> [Option<f64>; NUM_CLASSES] {
    std::array::from_fn(|k| {
        let (tp, fp, fn_) = cm.class_counts(k);
        let denom = tp + fp + fn_;
        (denom > 0).then(|| tp as f64 / denom as f64)
    })
}

pub fn iou_report(cm: &ConfusionMatrix) -> IoUReport {
    let ious = class_ious(cm);
    let class = |k| ClassId::from_index(k).expect("trainable index");
    let group = |ids: &[ClassId]| mean(ids.iter().map(|c| ious[c.index().unwrap()]));
    let scored = cm.scored_pixels();
    let correct: u64 = (0..NUM_CLASSES).map(|k| cm.counts[k][k]).sum();
    IoUReport {
        per_class_iou: (0..NUM_CLASSES).map(|k| (class(k).name().to_string(), ious[k])).collect(),
        miou_all: mean(ious.iter().copied()),
        miou_static: group(&ClassId::STATIC),
        miou_dyn: group(&ClassId::DYNAMIC),
        pixel_accuracy: (scored > 0).then(|| correct as f64 / scored as f64),
        ignored_fraction: if cm.total_pixels > 0 {
            cm.ignored_pixels as f64 / cm.total_pixels as f64
        } else {
            0.0
        },
        undefined_classes: (0..NUM_CLASSES)
            .filter(|&k| ious[k].is_none())
            .map(|k| class(k).name().to_string())
            .collect(),
        scored_pixels: scored,
        total_pixels: cm.total_pixels,
    }
}

/// Scores `pred` only on cells that received labeled LiDAR returns.
pub fn eval_lidar_holdout(pred: &SemanticMask, sparse: &SparseLabelRaster) -> Result<(ConfusionMatrix, IoUReport), RasterError> {
    let cm = confusion(pred, &sparse.label, Some(&sparse.supervised()))?;
    Ok((cm, iou_report(&cm)))
}

/// Mean of per-sample reports' defined values, next to the canonical
/// report over the summed matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub micro: IoUReport,
    pub macro_miou_all: Option<f64>,
    pub macro_miou_static: Option<f64>,
    pub macro_miou_dyn: Option<f64>,
    pub samples: usize,
}

pub fn aggregate(matrices: &[ConfusionMatrix]) -> AggregateReport {
    let mut sum = ConfusionMatrix::default();
    for m in matrices {
        sum += m;
    }
    let reports: Vec<IoUReport> = matrices.iter().map(iou_report).collect();
    AggregateReport {
        micro: iou_report(&sum),
        macro_miou_all: mean(reports.iter().map(|r| r.miou_all)),
        macro_miou_static: mean(reports.iter().map(|r| r.miou_static)),
        macro_miou_dyn: mean(reports.iter().map(|r| r.miou_dyn)),
        samples: matrices.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BevGridSpec;
    use crate::raster::Raster;

    fn mask(codes: &[u8]) -> SemanticMask {
        let n = (codes.len() as f64).sqrt() as usize;
        let g = BevGridSpec::new(1.0, n).unwrap();
        Raster::from_vec(g, codes.iter().map(|&c| ClassId::new(c).unwrap()).collect()).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let m = mask(&[0, 1, 2, 3, 4, 0, 1, 2, 3]);
        let r = iou_report(&confusion(&m, &m, None).unwrap());
        assert_eq!(r.miou_all, Some(1.0));
        assert_eq!(r.pixel_accuracy, Some(1.0));
        assert!(r.undefined_classes.is_empty());
    }

    #[test]
    fn disjoint_prediction() {
        let r = iou_report(&confusion(&mask(&[0, 0, 0, 0]), &mask(&[1, 1, 1, 1]), None).unwrap());
        assert_eq!(r.iou(ClassId::ROAD), Some(0.0));
        assert_eq!(r.iou(ClassId::SIDEWALK), Some(0.0));
        assert_eq!(r.iou(ClassId::VEHICLE), None);
        assert_eq!(r.miou_dyn, None);
        assert_eq!(r.undefined_classes, vec!["building", "vehicle", "vru"]);
    }

    #[test]
    fn road_half() {
        // TP 2, FP 1, FN 1 for road
        let gt = mask(&[0, 0, 0, 1]);
        let pred = mask(&[0, 0, 1, 0]);
        let r = iou_report(&confusion(&pred, &gt, None).unwrap());
        assert_eq!(r.iou(ClassId::ROAD), Some(0.5));
    }

    #[test]
    fn ignore_accounting() {
        let gt = mask(&[255, 0, 0, 0]);
        let pred = mask(&[0, 255, 0, 0]);
        let valid = Raster::from_vec(*gt.grid(), vec![true, true, true, false]).unwrap();
        let cm = confusion(&pred, &gt, Some(&valid)).unwrap();
        assert_eq!((cm.ignored_pixels, cm.total_pixels, cm.scored_pixels()), (2, 3, 1));
        assert!((iou_report(&cm).ignored_fraction - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn micro_and_macro() {
        let a = confusion(&mask(&[0]), &mask(&[0]), None).unwrap();
        let b = confusion(&mask(&[1]), &mask(&[0]), None).unwrap();
        let agg = aggregate(&[a, b]);
        assert_eq!(agg.micro.iou(ClassId::ROAD), Some(0.5));
        assert_eq!(agg.macro_miou_all, Some(0.5));
        assert_eq!(agg.micro.miou_all, Some(0.25));
    }
}
