//! Capsule-versus-obstacle clearance queries.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::model::RobotModel;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Obstacle {
    Sphere { center: [f64; 3], radius: f64 },
    /// Axis-aligned box.
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
    },
}

impl Obstacle {
    pub fn center(&self) -> Point3<f64> {
        let c = match self {
            Obstacle::Sphere { center, .. } | Obstacle::Box { center, .. } => center,
        };
        Point3::new(c[0], c[1], c[2])
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Obstacle::Sphere { radius, .. } => *radius > 0.0,
            Obstacle::Box { half_extents, .. } => half_extents.iter().all(|&h| h > 0.0),
        }
    }

    /// Number of entries this obstacle contributes to an observation vector.
    pub fn feature_len(&self) -> usize {
        match self {
            Obstacle::Sphere { .. } => 4,
            Obstacle::Box { .. } => 6,
        }
    }

    /// Center followed by the size parameters.
    pub fn features(&self) -> Vec<f64> {
        match self {
            Obstacle::Sphere { center, radius } => vec![center[0], center[1], center[2], *radius],
            Obstacle::Box {
                center,
                half_extents,
            } => {
                let mut v = center.to_vec();
                v.extend_from_slice(half_extents);
                v
            }
        }
    }

    /// Euclidean distance from a point to the obstacle (zero inside).
    pub fn point_distance(&self, p: &Point3<f64>) -> f64 {
        match self {
            Obstacle::Sphere { radius, .. } => ((p - self.center()).norm() - radius).max(0.0),
            Obstacle::Box {
                center,
                half_extents,
            } => {
                let mut sq = 0.0;
                for a in 0..3 {
                    let excess = (p[a] - center[a]).abs() - half_extents[a];
                    if excess > 0.0 {
                        sq += excess * excess;
                    }
                }
                sq.sqrt()
            }
        }
    }

    /// Distance from the segment `a`-`b` to the obstacle surface (zero on contact or overlap).
    pub fn segment_distance(&self, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
        match self {
            Obstacle::Sphere { radius, .. } => {
                let c = self.center();
                let p = closest_on_segment(a, b, &c);
                ((c - p).norm() - radius).max(0.0)
            }
            Obstacle::Box {
                center,
                half_extents,
            } => {
                let lo = Vector3::new(
                    center[0] - half_extents[0],
                    center[1] - half_extents[1],
                    center[2] - half_extents[2],
                );
                let hi = Vector3::new(
                    center[0] + half_extents[0],
                    center[1] + half_extents[1],
                    center[2] + half_extents[2],
                );
                segment_box_sq_distance(a, b, &lo, &hi).sqrt()
            }
        }
    }
}

pub fn closest_on_segment(a: &Point3<f64>, b: &Point3<f64>, p: &Point3<f64>) -> Point3<f64> {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 <= f64::EPSILON {
        return *a;
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    a + d * t
}

/// Exact squared distance between a segment and an axis-aligned box.
///
/// Along the segment the squared distance is piecewise quadratic, with pieces
/// delimited by the parameters where the segment crosses a slab plane. Each
/// piece is minimized in closed form.
fn segment_box_sq_distance(
    a: &Point3<f64>,
    b: &Point3<f64>,
    lo: &Vector3<f64>,
    hi: &Vector3<f64>,
) -> f64 {
    let d = b - a;
    let mut breaks = Vec::with_capacity(8);
    breaks.push(0.0);
    breaks.push(1.0);
    for axis in 0..3 {
        if d[axis].abs() > 0.0 {
            for plane in [lo[axis], hi[axis]] {
                let t = (plane - a[axis]) / d[axis];
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.sort_by(|x, y| x.total_cmp(y));

    let mut best = f64::INFINITY;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        // On this piece every axis is consistently below, inside, or above its slab.
        let mut qa = 0.0;
        let mut qb = 0.0;
        for axis in 0..3 {
            let x = a[axis] + d[axis] * mid;
            let bound = if x < lo[axis] {
                lo[axis]
            } else if x > hi[axis] {
                hi[axis]
            } else {
                continue;
            };
            // (a + d t - bound)^2 = d^2 t^2 + 2 d (a - bound) t + ...
            qa += d[axis] * d[axis];
            qb += d[axis] * (a[axis] - bound);
        }
        let t = if qa > 0.0 { (-qb / qa).clamp(t0, t1) } else { t0 };
        best = best.min(point_box_sq_distance(&(a + d * t), lo, hi));
        best = best.min(point_box_sq_distance(&(a + d * t0), lo, hi));
        best = best.min(point_box_sq_distance(&(a + d * t1), lo, hi));
    }
    best
}

fn point_box_sq_distance(p: &Point3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> f64 {
    (0..3)
        .map(|axis| {
            let e = (lo[axis] - p[axis]).max(p[axis] - hi[axis]).max(0.0);
            e * e
        })
        .sum()
}

/// Colliding (link, obstacle) pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollisionReport {
    pub pairs: Vec<(usize, usize)>,
}

impl CollisionReport {
    pub fn colliding(&self) -> bool {
        !self.pairs.is_empty()
    }
}

/// Tests every link capsule against every obstacle. Self-collision is not checked.
pub fn check_collision(model: &RobotModel, q: &[f64], obstacles: &[Obstacle]) -> Result<CollisionReport> {
    let pose = model.forward_kinematics(q)?;
    Ok(collisions_for_segments(model, &pose.segments, obstacles))
}

pub(crate) fn collisions_for_segments(
    model: &RobotModel,
    segments: &[(Point3<f64>, Point3<f64>)],
    obstacles: &[Obstacle],
) -> CollisionReport {
    let mut pairs = Vec::new();
    for (li, (link, (a, b))) in model.links().iter().zip(segments).enumerate() {
        for (oi, obs) in obstacles.iter().enumerate() {
            if obs.segment_distance(a, b) < link.radius {
                pairs.push((li, oi));
            }
        }
    }
    CollisionReport { pairs }
}

/// Smallest capsule-surface-to-obstacle clearance over all pairs; negative on penetration.
pub fn min_clearance(model: &RobotModel, q: &[f64], obstacles: &[Obstacle]) -> Result<f64> {
    let pose = model.forward_kinematics(q)?;
    let mut best = f64::INFINITY;
    for (link, (a, b)) in model.links().iter().zip(&pose.segments) {
        for obs in obstacles {
            best = best.min(obs.segment_distance(a, b) - link.radius);
        }
    }
    Ok(best)
}
