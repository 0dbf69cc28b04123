//! Drive simulation: per-stream event timing, noisy navigation fixes and
//! aerial camera poses along a ground-truth trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::World;
use crate::grid::{normalize_angle, Pose2D};
use crate::sensors::{CameraPose, NavRecord, SensorEvent, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamRates {
    pub aerial_hz: f64,
    pub vehicle_rgb_hz: f64,
    pub lidar_a_hz: f64,
    pub lidar_b_hz: f64,
    pub gnss_hz: f64,
}

impl Default for StreamRates {
    fn default() -> Self {
        StreamRates {
            aerial_hz: 1.0,
            vehicle_rgb_hz: 10.0,
            lidar_a_hz: 10.0,
            lidar_b_hz: 12.5,
            gnss_hz: 50.0,
        }
    }
}

impl StreamRates {
    pub fn rate(&self, s: Stream) -> f64 {
        match s {
            Stream::AerialRgb => self.aerial_hz,
            Stream::VehicleRgb => self.vehicle_rgb_hz,
            Stream::LidarA => self.lidar_a_hz,
            Stream::LidarB => self.lidar_b_hz,
            Stream::GnssImu => self.gnss_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveParams {
    pub duration_s: f64,
    pub rates: StreamRates,
    /// Uniform per-event timestamp jitter bound, clipped below half a period.
    pub clock_jitter_us: i64,
    /// Per-axis GNSS position noise (σ, meters) on both platforms.
    pub gnss_noise_m: f64,
    /// Heading noise (σ, radians) on both platforms.
    pub heading_noise_rad: f64,
    pub speed_mps: f64,
    /// Zero phase on every stream instead of independent random phases.
    pub aligned_phases: bool,
    /// Maximum horizontal offset of the aerial camera from the vehicle.
    pub aerial_offset_m: f64,
    /// First event time.
    pub start_us: i64,
}

impl Default for DriveParams {
    fn default() -> Self {
        DriveParams {
            duration_s: 200.0,
            rates: StreamRates::default(),
            clock_jitter_us: 5_000,
            gnss_noise_m: 1.0,
            heading_noise_rad: 0.0,
            speed_mps: 5.0,
            aligned_phases: false,
            aerial_offset_m: 8.0,
            start_us: 1_000_000,
        }
    }
}

/// Constant-speed motion along a polyline, reversing at its ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path: Vec<(f64, f64)>,
    pub speed_mps: f64,
    pub start_us: i64,
}

impl Trajectory {
    fn length(&self) -> f64 {
        self.path
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    }

    /// True pose at time `t_us`.
    pub fn pose_at(&self, t_us: i64) -> Pose2D {
        let total = self.length();
        if total <= 0.0 || self.path.len() < 2 {
            let (x, y) = self.path.first().copied().unwrap_or_default();
            return Pose2D::new(x, y, 0.0);
        }
        let travelled = self.speed_mps * (t_us - self.start_us) as f64 * 1e-6;
        let mut s = travelled.rem_euclid(2.0 * total);
        let backwards = s > total;
        if backwards {
            s = 2.0 * total - s;
        }
        let last = self.path.len() - 2;
        for (i, w) in self.path.windows(2).enumerate() {
            let len = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            if s <= len || i == last {
                let f = if len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                let x = w[0].0 + f * (w[1].0 - w[0].0);
                let y = w[0].1 + f * (w[1].1 - w[0].1);
                let mut heading = (w[1].1 - w[0].1).atan2(w[1].0 - w[0].0);
                if backwards {
                    heading += std::f64::consts::PI;
                }
                return Pose2D::new(x, y, heading);
            }
            s -= len;
        }
        unreachable!("path walk covers total length")
    }
}

/// Aerial exposure: the true camera pose used for rendering and the pose
/// recorded by the aerial platform's navigation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AerialShot {
    pub t_us: i64,
    pub true_cam: CameraPose,
    pub recorded_cam: CameraPose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveLog {
    /// All events ordered by time, then stream.
    pub events: Vec<SensorEvent>,
    pub aerial_shots: Vec<AerialShot>,
    pub trajectory: Trajectory,
}

impl DriveLog {
    pub fn stream_times(&self, s: Stream) -> Vec<i64> {
        self.events.iter().filter(|e| e.stream == s).map(|e| e.t_us).collect()
    }
}

/// Simulates a drive along the world's main road (or a west-to-east line
/// through the middle when the world has no road).
pub fn simulate_drive(world: &World, seed: u64, params: &DriveParams) -> DriveLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d21e);
    let path = world.main_road().map(|p| p.to_vec()).unwrap_or_else(|| {
        vec![(0.0, world.extent_m / 2.0), (world.extent_m, world.extent_m / 2.0)]
    });
    let trajectory = Trajectory {
        path,
        speed_mps: params.speed_mps,
        start_us: params.start_us,
    };
    let pos_noise = Normal::new(0.0, params.gnss_noise_m.max(0.0)).expect("finite sigma");
    let yaw_noise = Normal::new(0.0, params.heading_noise_rad.max(0.0)).expect("finite sigma");
    let duration_us = (params.duration_s * 1e6).round() as i64;

    let mut events = Vec::new();
    let mut aerial_shots = Vec::new();
    for stream in Stream::ALL {
        let rate = params.rates.rate(stream);
        if !(rate > 0.0) {
            continue;
        }
        let period = (1e6 / rate).round() as i64;
        let jitter = params.clock_jitter_us.min((period - 1) / 2 - 1).max(0);
        let phase = if params.aligned_phases {
            0
        } else {
            rng.random_range(0..period)
        };
        let mut k = 0i64;
        loop {
            let nominal = params.start_us + phase + k * period;
            if nominal - params.start_us >= duration_us {
                break;
            }
            let t_us = nominal
                + if jitter > 0 {
                    rng.random_range(-jitter..=jitter)
                } else {
                    0
                };
            let mut ev = SensorEvent {
                stream,
                t_us,
                payload: None,
                nav: None,
            };
            match stream {
                Stream::GnssImu => {
                    let truth = trajectory.pose_at(t_us);
                    ev.nav = Some(NavRecord {
                        x: truth.x + pos_noise.sample(&mut rng),
                        y: truth.y + pos_noise.sample(&mut rng),
                        heading: normalize_angle(truth.heading + yaw_noise.sample(&mut rng)),
                    });
                }
                Stream::AerialRgb => {
                    let truth = trajectory.pose_at(t_us);
                    let off = params.aerial_offset_m.max(0.0);
                    let true_cam = CameraPose {
                        x: truth.x + if off > 0.0 { rng.random_range(-off..=off) } else { 0.0 },
                        y: truth.y + if off > 0.0 { rng.random_range(-off..=off) } else { 0.0 },
                        yaw: rng.random_range(0.0..std::f64::consts::TAU),
                    };
                    let recorded_cam = CameraPose {
                        x: true_cam.x + pos_noise.sample(&mut rng),
                        y: true_cam.y + pos_noise.sample(&mut rng),
                        yaw: normalize_angle(true_cam.yaw + yaw_noise.sample(&mut rng)),
                    };
                    aerial_shots.push(AerialShot {
                        t_us,
                        true_cam,
                        recorded_cam,
                    });
                }
                _ => {}
            }
            events.push(ev);
            k += 1;
        }
    }
    events.sort_by_key(|e| (e.t_us, e.stream));
    DriveLog {
        events,
        aerial_shots,
        trajectory,
    }
}
