//! Spatial localization of the ego vehicle in one aerial frame.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::crop::heading_in_image;
use super::project::project_gnss_to_pixel;
use super::template::{refine_by_template, MatchParams, TemplateError};
use crate::grid::Pose2D;
use crate::sensors::{AerialFrame, NavRecord, Stream};
use crate::synthworld::{marker_template, MarkerSpec};
use crate::taxonomy::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignParams {
    pub max_offset_us: i64,
    #[serde(flatten)]
    pub matching: MatchParams,
    pub marker: MarkerSpec,
    /// Template side in pixels; 0 sizes it from the marker body.
    pub template_px: usize,
    /// Surface assumed around the vehicle when rendering the template.
    pub template_background: ClassId,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            max_offset_us: super::temporal::DEFAULT_MAX_OFFSET_US,
            matching: MatchParams::default(),
            marker: MarkerSpec::default(),
            template_px: 0,
            template_background: ClassId::ROAD,
        }
    }
}

impl AlignParams {
    /// Odd template side covering the marker body with a small margin.
    pub fn template_side(&self, gsd_m: f64) -> usize {
        if self.template_px > 0 {
            return self.template_px | 1;
        }
        let body = self.marker.body_length_m.max(self.marker.body_width_m);
        ((body * 1.1 / gsd_m).ceil() as usize) | 1
    }
}

/// Why an anchor produced no sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Temporal,
    MissingPayload,
    OutOfFrame,
    LowConfidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub prior: (f64, f64),
    pub ego_pixel: (f64, f64),
    pub confidence: f64,
    /// Vehicle heading from the image right axis.
    pub heading_in_image: f64,
}

/// Projects the vehicle fix into `frame` and refines it against the roof
/// marker template.
pub fn localize_ego(frame: &AerialFrame, nav: &NavRecord, params: &AlignParams) -> Result<Result<Localization, Rejection>, TemplateError> {
    let geom = frame.geometry();
    let Ok(prior) = project_gnss_to_pixel(&geom, (nav.x, nav.y)) else {
        return Ok(Err(Rejection::OutOfFrame));
    };
    let heading = heading_in_image(nav.heading, frame.cam_pose.yaw);
    let side = params.template_side(frame.gsd_m);
    let template = marker_template(&params.marker, frame.gsd_m, heading, side, params.template_background);
    let gray = frame.image.to_gray();
    Ok(match refine_by_template(&gray, prior, &template, &params.matching)? {
        Some(m) => Ok(Localization {
            prior,
            ego_pixel: (m.u, m.v),
            confidence: m.confidence,
            heading_in_image: heading,
        }),
        None => Err(Rejection::LowConfidence),
    })
}

/// Reference to one recorded event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorRef {
    pub stream: Stream,
    pub t_us: i64,
    pub payload: Option<String>,
}

/// One matched aerial and vehicle sensor bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedSample {
    pub sample_id: String,
    pub aerial: SensorRef,
    pub vehicle_rgb: SensorRef,
    pub sweeps: Vec<SensorRef>,
    pub nav: SensorRef,
    /// Signed offset of each modality from the event it was matched to.
    pub offsets_us: BTreeMap<Stream, i64>,
    pub ego_pixel: (f64, f64),
    pub match_confidence: f64,
    /// Ego pose in the world, from the refined pixel and the nav heading.
    pub ego_pose: Pose2D,
    pub heading_in_image: f64,
}

impl AlignedSample {
    pub fn max_abs_offset_us(&self) -> i64 {
        self.offsets_us.values().map(|o| o.abs()).max().unwrap_or(0)
    }
}
