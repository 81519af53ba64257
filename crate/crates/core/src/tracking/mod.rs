//! Tracking accuracy: HOTA with 3D IoU and the bijective matcher it relies on.

mod assignment;
mod hota;

pub use assignment::{optimal_assignment, optimal_assignment_max, Assignment};
pub use hota::{alphas, hota_3d, AlphaScore, ClassHota, HotaOptions, HotaResult, ALPHA_STEPS};
