//! Aerial-to-vehicle alignment: temporal matching against aerial anchors,
//! GNSS projection into the aerial image, template refinement of the ego
//! pixel, and heading-up BEV cropping.

mod align;
mod crop;
mod project;
mod template;
mod temporal;

pub use align::{localize_ego, AlignParams, AlignedSample, Localization, Rejection, SensorRef};
pub use crop::{cell_source_pixel, heading_in_image, make_bev_crop, BevCrop};
pub use project::{project_gnss_to_pixel, OutOfFrame};
pub use template::{refine_by_template, ConfidenceMapping, MatchParams, TemplateError, TemplateMatch};
pub use temporal::{match_temporal, MatchStreams, Selection, SortedTimes, TemporalError, TemporalMatch, DEFAULT_MAX_OFFSET_US};
