use crate::error::{Error, Result};

use super::lidar::PointCloud;

type Mat3 = [[f64; 3]; 3];

fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn mul(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

/// Pinhole intrinsics plus the lidar→camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSet {
    pub intrinsics: Mat3,
    pub rotation: Mat3,
    /// Meters.
    pub translation: [f64; 3],
}

impl CalibrationSet {
    /// Checks that `rotation` is orthonormal within 1e-6.
    pub fn new(intrinsics: Mat3, rotation: Mat3, translation: [f64; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| rotation[i][k] * rotation[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-6 {
                    return Err(Error::invalid("extrinsic rotation is not orthonormal"));
                }
            }
        }
        Ok(CalibrationSet {
            intrinsics,
            rotation,
            translation,
        })
    }

    /// Pixel coordinates and depth of a lidar-frame point.
    pub fn project(&self, p: [f64; 3]) -> Option<(f64, f64, f64)> {
        let r = mul(&self.rotation, p);
        let cam = [0, 1, 2].map(|k| r[k] + self.translation[k]);
        if cam[2] <= 0.0 {
            return None;
        }
        let h = mul(&self.intrinsics, cam);
        Some((h[0] / h[2], h[1] / h[2], cam[2]))
    }
}

/// Keep the points in front of the camera whose projection lands inside a
/// `width × height` image.
pub fn crop_to_camera_fov(cloud: &PointCloud, calib: &CalibrationSet, image_size: (u32, u32)) -> Result<PointCloud> {
    if det(&calib.intrinsics).abs() < 1e-12 {
        return Err(Error::SingularIntrinsics);
    }
    let (w, h) = (image_size.0 as f64, image_size.1 as f64);
    let keep: Vec<bool> = cloud
        .points
        .iter()
        .map(|p| match calib.project([p.x as f64, p.y as f64, p.z as f64]) {
            Some((u, v, _)) => (0.0..w).contains(&u) && (0.0..h).contains(&v),
            None => false,
        })
        .collect();
    let points = cloud.points.iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| *p).collect();
    let layer_ids = cloud
        .layer_ids
        .as_ref()
        .map(|ids| ids.iter().zip(&keep).filter(|(_, &k)| k).map(|(i, _)| *i).collect());
    Ok(PointCloud { points, layer_ids })
}
