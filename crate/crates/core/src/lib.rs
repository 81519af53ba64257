//! Quality assessment for roadside infrastructure sensor setups.
//!
//! Each camera, lidar or camera+lidar setup on each machine profile is
//! scored on three normalized KPIs (accuracy, latency, reliability) that
//! form its quality vector.

pub mod detection;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod ladder;
pub mod model;
pub mod pipeline;
pub mod sensor;
pub mod synth;
pub mod tracking;

pub use error::{Error, Result};
pub use exec::Exec;
