//! Sensor resolution ladders: lidar layer identification and thinning,
//! camera resampling, and cropping point clouds to a camera's view.

mod camera;
mod crop;
mod lidar;

pub use camera::{resample_image, RasterImage, CAMERA_LADDER};
pub use crop::{crop_to_camera_fov, CalibrationSet};
pub use lidar::{
    assign_layers, downsample_layers, elevation, layer_count, CloudPoint, PointCloud,
    LIDAR_LADDER,
};
