//! Deterministic synthetic aerial-ground scene oracle.
//!
//! A [`World`] is a 2.5D map of class-labeled primitives with heights. From
//! it the simulator produces nadir aerial frames (with an "X" marker on the
//! ego roof), drive event logs with jittered clocks and noisy navigation,
//! ray-cast LiDAR sweeps and a forward camera view. All outputs are pure
//! functions of the seed and arguments.

mod drive;
mod raycast;
mod render;
pub mod shapes;
mod teacher;
mod world;

pub use drive::{simulate_drive, AerialShot, DriveLog, DriveParams, StreamRates, Trajectory};
pub use raycast::{cast_ray, render_vehicle_camera, simulate_lidar, CameraSpec, LidarSpec, RayHit};
pub use render::{class_color, marker_template, render_aerial, EgoVehicle, MarkerSpec, ROOF_RGB, STROKE_RGB};
pub use teacher::{ColorTeacher, TeacherOutput};
pub use world::{generate_world, Primitive, World, WorldCounts, WorldError, EGO_LANE_CLEARANCE_M};
