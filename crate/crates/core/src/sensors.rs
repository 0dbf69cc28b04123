//! Sensor records shared by the simulator, the alignment pipeline and I/O.

use serde::{Deserialize, Serialize};

use crate::grid::snapped_sin_cos;
use crate::imaging::{LabelImage, RgbImage};
use crate::taxonomy::ClassId;

/// Recorded sensor streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    AerialRgb,
    VehicleRgb,
    LidarA,
    LidarB,
    GnssImu,
}

impl Stream {
    pub const ALL: [Stream; 5] = [
        Stream::AerialRgb,
        Stream::VehicleRgb,
        Stream::LidarA,
        Stream::LidarB,
        Stream::GnssImu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stream::AerialRgb => "aerial_rgb",
            Stream::VehicleRgb => "vehicle_rgb",
            Stream::LidarA => "lidar_a",
            Stream::LidarB => "lidar_b",
            Stream::GnssImu => "gnss_imu",
        }
    }
}

/// Vehicle GNSS/IMU fix in the local east-north frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavRecord {
    pub x: f64,
    pub y: f64,
    /// Radians counter-clockwise from east.
    pub heading: f64,
}

/// One entry of a drive's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub stream: Stream,
    /// Microseconds on the stream's clock.
    pub t_us: i64,
    /// Relative path of the payload file, when one was materialized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    /// Inline navigation record for `gnss_imu` events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav: Option<NavRecord>,
}

/// Nadir aerial camera pose: ground point below the camera and image yaw.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CameraPose {
    pub x: f64,
    pub y: f64,
    /// Radians counter-clockwise from north; at yaw 0 the image up-axis
    /// points north and the v-axis south.
    pub yaw: f64,
}

/// Orthographic nadir image geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AerialGeometry {
    pub cam_pose: CameraPose,
    pub gsd_m: f64,
    pub width: usize,
    pub height: usize,
}

impl AerialGeometry {
    pub fn center(&self) -> (f64, f64) {
        (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    /// World point to continuous pixel coordinate.
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = snapped_sin_cos(self.cam_pose.yaw);
        let dx = x - self.cam_pose.x;
        let dy = y - self.cam_pose.y;
        let ix = c * dx + s * dy;
        let iy = -s * dx + c * dy;
        let (u0, v0) = self.center();
        (u0 + ix / self.gsd_m, v0 - iy / self.gsd_m)
    }

    /// Continuous pixel coordinate to world point.
    pub fn unproject(&self, u: f64, v: f64) -> (f64, f64) {
        let (s, c) = snapped_sin_cos(self.cam_pose.yaw);
        let (u0, v0) = self.center();
        let ix = (u - u0) * self.gsd_m;
        let iy = -(v - v0) * self.gsd_m;
        (
            self.cam_pose.x + c * ix - s * iy,
            self.cam_pose.y + s * ix + c * iy,
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AerialFrame {
    pub image: RgbImage,
    pub gt_semantics: Option<LabelImage>,
    pub t_us: i64,
    pub cam_pose: CameraPose,
    pub gsd_m: f64,
}

impl AerialFrame {
    pub fn geometry(&self) -> AerialGeometry {
        AerialGeometry {
            cam_pose: self.cam_pose,
            gsd_m: self.gsd_m,
            width: self.image.width(),
            height: self.image.height(),
        }
    }
}

/// A LiDAR return in the sensor frame (x forward, y left, z up from ground).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
    pub t_us: u64,
    /// Point label; [`ClassId::IGNORE`] when unlabeled.
    pub class: ClassId,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LidarSweep {
    pub sensor_id: String,
    pub points: Vec<LidarPoint>,
}
