//! Declarative pipeline configuration, validation and hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use goldbev_core::bevraster::LidarRasterParams;
use goldbev_core::crossview::AlignParams;
use goldbev_core::datasetio::SplitParams;
use goldbev_core::evalmetrics::SsimParams;
use goldbev_core::labelfuse::FusionThresholds;
use goldbev_core::sensors::Stream;
use goldbev_core::synthworld::{CameraSpec, ColorTeacher, DriveParams, LidarSpec, WorldCounts};
use goldbev_core::BevGridSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub extent_m: f64,
    pub counts: WorldCounts,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            extent_m: 400.0,
            counts: WorldCounts {
                roads: 3,
                buildings: 40,
                vehicles: 30,
                vrus: 40,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AerialConfig {
    pub gsd_m: f64,
    pub size_px: usize,
}

impl Default for AerialConfig {
    fn default() -> Self {
        AerialConfig {
            gsd_m: 0.07,
            size_px: 1200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub world: WorldConfig,
    pub drive: DriveParams,
    pub aerial: AerialConfig,
    pub vehicle_camera: CameraSpec,
    pub lidar_a: LidarSpec,
    pub lidar_b: LidarSpec,
    /// Payloads are rendered only for events this close to an aerial anchor.
    pub materialize_window_us: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            world: WorldConfig::default(),
            drive: DriveParams::default(),
            aerial: AerialConfig::default(),
            vehicle_camera: CameraSpec::default(),
            lidar_a: LidarSpec::default(),
            lidar_b: LidarSpec::automotive(),
            materialize_window_us: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeConfig {
    pub hfov_deg: f64,
    pub max_range_m: Option<f64>,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            hfov_deg: 90.0,
            max_range_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// LiDAR returns a ground-truth vehicle needs to count as visible.
    pub min_returns: u64,
    pub cone: ConeConfig,
    pub ssim: SsimParams,
    /// Box-blur radius of the blurred reconstruction view.
    pub recon_blur_px: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            min_returns: 3,
            cone: ConeConfig::default(),
            ssim: SsimParams::default(),
            recon_blur_px: 2,
        }
    }
}

/// Constant per-stream clock corrections. Logs are assumed to share one
/// timebase; a stream recorded against a skewed clock gets `offset_us` added
/// to each of its timestamps before temporal matching.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockConfig {
    pub offset_us: BTreeMap<Stream, i64>,
}

impl ClockConfig {
    pub fn offset(&self, s: Stream) -> i64 {
        self.offset_us.get(&s).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub grid: BevGridSpec,
    pub synth: SynthConfig,
    pub clock: ClockConfig,
    pub align: AlignParams,
    pub raster: LidarRasterParams,
    pub teacher: ColorTeacher,
    pub fusion: FusionThresholds,
    pub split: SplitParams,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            grid: BevGridSpec::default(),
            synth: SynthConfig::default(),
            clock: ClockConfig::default(),
            align: AlignParams::default(),
            raster: LidarRasterParams::default(),
            teacher: ColorTeacher::default(),
            fusion: FusionThresholds::default(),
            split: SplitParams::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Checks every parameter and reports all offending fields at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        let s = &self.synth;
        if !positive(s.world.extent_m) {
            bad.push(format!("synth.world.extent_m = {} must be positive", s.world.extent_m));
        }
        if !positive(s.drive.duration_s) {
            bad.push(format!("synth.drive.duration_s = {} must be positive", s.drive.duration_s));
        }
        let r = &s.drive.rates;
        for (name, v) in [
            ("aerial_hz", r.aerial_hz),
            ("vehicle_rgb_hz", r.vehicle_rgb_hz),
            ("lidar_a_hz", r.lidar_a_hz),
            ("lidar_b_hz", r.lidar_b_hz),
            ("gnss_hz", r.gnss_hz),
        ] {
            if !positive(v) {
                bad.push(format!("synth.drive.rates.{name} = {v} must be positive"));
            }
        }
        if s.drive.clock_jitter_us < 0 {
            bad.push(format!("synth.drive.clock_jitter_us = {} must be non-negative", s.drive.clock_jitter_us));
        }
        for (name, v) in [
            ("gnss_noise_m", s.drive.gnss_noise_m),
            ("heading_noise_rad", s.drive.heading_noise_rad),
            ("aerial_offset_m", s.drive.aerial_offset_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                bad.push(format!("synth.drive.{name} = {v} must be finite and non-negative"));
            }
        }
        if !positive(s.drive.speed_mps) {
            bad.push(format!("synth.drive.speed_mps = {} must be positive", s.drive.speed_mps));
        }
        if !positive(s.aerial.gsd_m) {
            bad.push(format!("synth.aerial.gsd_m = {} must be positive", s.aerial.gsd_m));
        }
        if s.aerial.size_px == 0 {
            bad.push("synth.aerial.size_px must be positive".into());
        }
        if s.vehicle_camera.width == 0 || s.vehicle_camera.height == 0 {
            bad.push("synth.vehicle_camera size must be positive".into());
        }
        for (name, l) in [("lidar_a", &s.lidar_a), ("lidar_b", &s.lidar_b)] {
            if l.channels == 0 || !positive(l.azimuth_step_deg) || !positive(l.max_range_m) || !positive(l.hfov_deg) {
                bad.push(format!("synth.{name} needs channels, azimuth_step_deg, hfov_deg and max_range_m > 0"));
            }
        }
        if s.materialize_window_us < 0 {
            bad.push(format!("synth.materialize_window_us = {} must be non-negative", s.materialize_window_us));
        }
        let a = &self.align;
        if a.max_offset_us < 0 {
            bad.push(format!("align.max_offset_us = {} must be non-negative", a.max_offset_us));
        }
        if !(0.0..=1.0).contains(&a.matching.min_conf) {
            bad.push(format!("align.min_conf = {} must be in [0, 1]", a.matching.min_conf));
        }
        if a.matching.window_px == 0 {
            bad.push("align.window_px must be positive".into());
        }
        if a.matching.coarse_factor == 0 || a.matching.coarse_candidates == 0 {
            bad.push("align.coarse_factor and align.coarse_candidates must be positive".into());
        }
        if !(a.matching.mapping.ncc_hi > a.matching.mapping.ncc_lo) {
            bad.push("align.mapping.ncc_hi must exceed align.mapping.ncc_lo".into());
        }
        if !positive(a.marker.body_length_m) || !positive(a.marker.body_width_m) {
            bad.push("align.marker body dimensions must be positive".into());
        }
        if let Err(e) = self.raster.validate() {
            bad.push(format!("raster: {e}"));
        }
        if !positive(self.teacher.temperature) {
            bad.push(format!("teacher.temperature = {} must be positive", self.teacher.temperature));
        }
        if let Err(e) = self.fusion.validate() {
            bad.push(format!("fusion: {e}"));
        }
        let f = self.split.fractions;
        if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            bad.push(format!("split.fractions = {f:?} must be non-negative and sum to 1"));
        }
        if !(self.split.guard_gap_m.is_finite() && self.split.guard_gap_m >= 0.0) {
            bad.push(format!("split.guard_gap_m = {} must be finite and non-negative", self.split.guard_gap_m));
        }
        if self.split.min_segment_len == 0 {
            bad.push("split.min_segment_len must be positive".into());
        }
        let c = &self.eval.cone;
        if !(c.hfov_deg > 0.0 && c.hfov_deg <= 360.0) {
            bad.push(format!("eval.cone.hfov_deg = {} must be in (0, 360]", c.hfov_deg));
        }
        if c.max_range_m.is_some_and(|r| !positive(r)) {
            bad.push("eval.cone.max_range_m must be positive when set".into());
        }
        if self.eval.ssim.window == 0 || self.eval.ssim.window % 2 == 0 || !positive(self.eval.ssim.sigma) {
            bad.push("eval.ssim needs an odd window and a positive sigma".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        digest(&[serde_json::to_vec(self).expect("config serializes").as_slice()])
    }
}

pub(crate) fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn every_bad_field_is_listed() {
        let mut c = PipelineConfig::default();
        c.synth.aerial.gsd_m = 0.0;
        c.align.matching.min_conf = 1.5;
        c.fusion.tau_ped_lo = 0.95;
        c.split.fractions = [0.5, 0.5, 0.5];
        let Err(ConfigError::Invalid(list)) = c.validate() else { panic!() };
        assert_eq!(list.len(), 4, "{list:?}");
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c: PipelineConfig = toml::from_str("seed = 3\n[fusion]\ntau_c = 0.7\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.fusion.tau_c, 0.7);
        assert_eq!(c.grid, BevGridSpec::default());
        assert!(toml::from_str::<PipelineConfig>("bogus = 1").is_err());
    }

    #[test]
    fn clock_offsets_parse_by_stream_name() {
        let c: PipelineConfig = toml::from_str("[clock.offset_us]\nlidar_b = -1500\n").unwrap();
        assert_eq!(c.clock.offset(Stream::LidarB), -1500);
        assert_eq!(c.clock.offset(Stream::LidarA), 0);
        let back: PipelineConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(toml::from_str::<PipelineConfig>("[clock.offset_us]\nradar = 1\n").is_err());
    }
}
