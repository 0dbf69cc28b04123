//! Segmentation and reconstruction metrics: confusion matrices with
//! ignore semantics, IoU reports with static/dynamic aggregates, LiDAR
//! holdout scoring, visible-vehicle restriction, PSNR and SSIM.

mod confusion;
mod quality;
mod visibility;

pub use confusion::{aggregate, class_ious, confusion, eval_lidar_holdout, iou_report, AggregateReport, ConfusionMatrix, IoUReport};
pub use quality::{psnr, ssim, Decibels, QualityError, SsimParams};
pub use visibility::restrict_vehicles_to_visible;
