use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SensorSpec;

/// Lidar quality levels in vertical layers, highest first.
pub const LIDAR_LADDER: [u32; 6] = [256, 128, 64, 32, 16, 8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

impl CloudPoint {
    pub fn new(x: f32, y: f32, z: f32, intensity: f32) -> Self {
        CloudPoint { x, y, z, intensity }
    }
}

/// Points plus an optional layer id per point (0 = lowest elevation).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
    pub layer_ids: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(points: Vec<CloudPoint>) -> Self {
        PointCloud {
            points,
            layer_ids: None,
        }
    }

    pub fn with_layers(points: Vec<CloudPoint>, layer_ids: Vec<u32>) -> Result<Self> {
        if points.len() != layer_ids.len() {
            return Err(Error::invalid(format!(
                "{} points but {} layer ids",
                points.len(),
                layer_ids.len()
            )));
        }
        Ok(PointCloud {
            points,
            layer_ids: Some(layer_ids),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self, n_layers: Option<u32>) -> Result<()> {
        if let Some(p) = self
            .points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::invalid(format!("point {p} has non-finite coordinates")));
        }
        if let (Some(ids), Some(n)) = (&self.layer_ids, n_layers) {
            if let Some(k) = ids.iter().position(|&l| l >= n) {
                return Err(Error::invalid(format!("point {k} has layer id {} >= {n}", ids[k])));
            }
        }
        Ok(())
    }

    fn select(&self, keep: impl Fn(usize) -> Option<u32>) -> PointCloud {
        let mut points = Vec::new();
        let mut ids = Vec::new();
        for i in 0..self.points.len() {
            if let Some(id) = keep(i) {
                points.push(self.points[i]);
                ids.push(id);
            }
        }
        PointCloud {
            points,
            layer_ids: Some(ids),
        }
    }
}

/// Elevation angle of a point above the sensor's horizontal plane, radians.
pub fn elevation(p: &CloudPoint) -> f64 {
    let (x, y, z) = (p.x as f64, p.y as f64, p.z as f64);
    z.atan2(x.hypot(y))
}

/// Number of distinct layers referenced by the cloud.
pub fn layer_count(cloud: &PointCloud) -> usize {
    let mut ids: Vec<u32> = cloud.layer_ids.clone().unwrap_or_default();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

/// Label every point with its scan layer.
///
/// Elevations are sorted and split wherever two neighbours are more than
/// half the vertical angular resolution apart. If that yields more clusters
/// than the sensor has layers, only the `vertical_layers - 1` widest gaps
/// are used as splits.
pub fn assign_layers(cloud: &PointCloud, spec: &SensorSpec) -> Result<PointCloud> {
    let lidar = spec.lidar()?;
    if cloud.is_empty() {
        return PointCloud::with_layers(Vec::new(), Vec::new());
    }
    let threshold = lidar.vert_ang_res_rad / 2.0;
    let elev: Vec<f64> = cloud.points.iter().map(elevation).collect();
    let mut order: Vec<usize> = (0..elev.len()).collect();
    order.sort_by(|&a, &b| elev[a].total_cmp(&elev[b]).then(a.cmp(&b)));

    // candidate split positions: index k splits before order[k]
    let mut splits: Vec<(usize, f64)> = (1..order.len())
        .map(|k| (k, elev[order[k]] - elev[order[k - 1]]))
        .filter(|&(_, gap)| gap > threshold)
        .collect();
    let max_splits = lidar.vertical_layers.saturating_sub(1) as usize;
    if splits.len() > max_splits {
        splits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        splits.truncate(max_splits);
        splits.sort_by_key(|s| s.0);
    }

    let mut ids = vec![0u32; elev.len()];
    let mut layer = 0u32;
    let mut next = splits.iter().map(|s| s.0).peekable();
    for (k, &i) in order.iter().enumerate() {
        if next.peek() == Some(&k) {
            layer += 1;
            next.next();
        }
        ids[i] = layer;
    }
    PointCloud::with_layers(cloud.points.clone(), ids)
}

/// Thin a layered cloud down to `target` layers.
///
/// A source with more layers than the top ladder rung first loses its
/// topmost layers down to the largest rung not above it; every further
/// halving keeps the even (re-indexed) layers, so the lowest layer survives
/// each step. Output ids are re-indexed to `0..target`.
pub fn downsample_layers(cloud: &PointCloud, source_layers: u32, target: u32) -> Result<PointCloud> {
    if !LIDAR_LADDER.contains(&target) {
        return Err(Error::NotInLadder(target));
    }
    if source_layers < target {
        return Err(Error::invalid(format!(
            "cannot reach {target} layers from {source_layers}"
        )));
    }
    let ids = cloud
        .layer_ids
        .as_ref()
        .ok_or_else(|| Error::invalid("point cloud has no layer ids; run layer assignment first"))?;
    let top = LIDAR_LADDER
        .iter()
        .copied()
        .find(|&rung| rung <= source_layers)
        .expect("source_layers >= target >= smallest rung");
    let stride = top / target;
    Ok(cloud.select(|i| {
        let id = ids[i];
        (id < top && id % stride == 0).then_some(id / stride)
    }))
}
