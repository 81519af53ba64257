//! Rotated-box overlap: convex polygon clipping on the ground plane and the
//! BEV / 3D IoU built on it.

use crate::exec::Exec;
use crate::model::{bev_corners, Box3D};

/// Boundary contact below this many meters counts as no overlap.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

pub type Point2 = [f64; 2];

/// Convex polygon with counter-clockwise vertices (or no vertices).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon2D {
    vertices: Vec<Point2>,
}

impl ConvexPolygon2D {
    /// Wrap vertices, reversing them if they are given clockwise. Fewer than
    /// three vertices yields the empty polygon.
    pub fn new(mut vertices: Vec<Point2>) -> Self {
        if vertices.len() < 3 {
            return ConvexPolygon2D::default();
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        ConvexPolygon2D { vertices }
    }

    pub fn from_box(b: &Box3D) -> Self {
        ConvexPolygon2D {
            vertices: bev_corners(b).to_vec(),
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).max(0.0)
    }

    /// Polygon of `self ∩ clip`.
    pub fn clip(&self, clip: &ConvexPolygon2D) -> ConvexPolygon2D {
        if self.is_empty() || clip.is_empty() {
            return ConvexPolygon2D::default();
        }
        let mut out = self.vertices.clone();
        let n = clip.vertices.len();
        for i in 0..n {
            if out.is_empty() {
                break;
            }
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % n];
            out = clip_half_plane(&out, a, b);
        }
        ConvexPolygon2D::new(out)
    }
}

/// Shoelace area, positive for counter-clockwise order.
pub fn signed_area(p: &[Point2]) -> f64 {
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (u, v) = (p[i], p[(i + 1) % n]);
        s += u[0] * v[1] - v[0] * u[1];
    }
    s / 2.0
}

#[inline]
fn cross(a: Point2, b: Point2, p: Point2) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

// Keep the part of `poly` to the left of the directed line a->b.
fn clip_half_plane(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let dc = cross(a, b, cur);
        let dn = cross(a, b, next);
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc >= 0.0) != (dn >= 0.0) {
            let t = dc / (dc - dn);
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
    }
    out
}

/// Area of the intersection of two convex polygons. Symmetric; 0 when the
/// polygons are disjoint or only touch.
pub fn convex_intersection_area(a: &ConvexPolygon2D, b: &ConvexPolygon2D) -> f64 {
    let area = a.clip(b).area();
    if area <= CONTACT_TOLERANCE {
        0.0
    } else {
        area
    }
}

fn bev_intersection(a: &Box3D, b: &Box3D) -> f64 {
    // Footprints farther apart than their half-diagonals cannot overlap.
    let reach = (a.length.hypot(a.width) + b.length.hypot(b.width)) / 2.0;
    let (dx, dy) = (a.center_x - b.center_x, a.center_y - b.center_y);
    if dx * dx + dy * dy > reach * reach {
        return 0.0;
    }
    convex_intersection_area(&ConvexPolygon2D::from_box(a), &ConvexPolygon2D::from_box(b))
}

fn ratio(inter: f64, union: f64) -> f64 {
    if inter <= 0.0 || union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Ground-plane IoU of the two footprints.
pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection(a, b);
    ratio(inter, a.length * a.width + b.length * b.width - inter)
}

/// Volumetric IoU of two upright boxes.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let dz = a.z_max().min(b.z_max()) - a.z_min().max(b.z_min());
    if dz <= CONTACT_TOLERANCE {
        return 0.0;
    }
    let inter = bev_intersection(a, b) * dz;
    ratio(inter, a.volume() + b.volume() - inter)
}

/// Row-major `rows.len() × cols.len()` matrix of 3D IoUs.
pub fn iou_3d_matrix(rows: &[Box3D], cols: &[Box3D], exec: Exec) -> Vec<Vec<f64>> {
    exec.map(rows, |r| cols.iter().map(|c| iou_3d(r, c)).collect())
}
