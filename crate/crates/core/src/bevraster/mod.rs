//! BEV rasters built from LiDAR sweeps, sparse point labels, the forward
//! visibility cone, and camera image resizing.

mod cone;
mod lidar;
mod resize;
mod sparse;

pub use cone::{visibility_cone_mask, ConeError};
pub use lidar::{rasterize_lidar, LidarAccumulator, LidarBevRaster, LidarRasterParams};
pub use resize::resize_rgb;
pub use sparse::{majority, rasterize_sparse_labels, SparseLabelError, SparseLabelRaster};
