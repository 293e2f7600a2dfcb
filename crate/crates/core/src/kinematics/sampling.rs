//! Random goal and obstacle placement.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::collision::{collisions_for_segments, Obstacle};
use super::model::RobotModel;
use crate::error::{Error, Result};

/// Axis-aligned sampling region, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Bounds {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3<f64> {
        let mut p = [0.0; 3];
        for a in 0..3 {
            p[a] = uniform(rng, self.lo[a], self.hi[a]);
        }
        Point3::new(p[0], p[1], p[2])
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.lo[a] <= self.hi[a])
    }
}

/// `lo + (hi - lo) * u` with `u` in [0, 1); exactly `lo` when the range is empty.
fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Where and how the grasped object is placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub bounds: Bounds,
    /// Distance between the hand targets on opposite sides of the object.
    pub object_width: f64,
    /// Direction along which the hand targets are spread.
    #[serde(default = "default_pair_axis")]
    pub pair_axis: [f64; 3],
}

fn default_pair_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

/// Samples the object center uniformly in the bounds and returns one target
/// per chain. With two chains the first (left) target sits at `+width/2`
/// along the pair axis and the second at `-width/2`; more chains are spread
/// evenly across the width.
pub fn sample_goal<R: Rng + ?Sized>(spec: &GoalSpec, chains: usize, rng: &mut R) -> Vec<Point3<f64>> {
    let center = spec.bounds.sample(rng);
    let axis = Vector3::from(spec.pair_axis);
    let axis = if axis.norm() > 0.0 { axis.normalize() } else { axis };
    (0..chains)
        .map(|i| {
            let frac = if chains > 1 {
                0.5 - i as f64 / (chains - 1) as f64
            } else {
                0.0
            };
            center + axis * (spec.object_width * frac)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleShape {
    Sphere,
    Box,
}

/// Ranges for randomly placed obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub count: usize,
    pub shape: ObstacleShape,
    pub centers: Bounds,
    /// Radius range for spheres, half-extent range (all axes) for boxes.
    pub size: [f64; 2],
    /// Required gap between an obstacle and each hand target.
    #[serde(default)]
    pub goal_clearance: f64,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_attempts() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleDraw {
    pub obstacles: Vec<Obstacle>,
    /// Total candidates drawn, including rejected ones.
    pub attempts: usize,
}

/// Draws `spec.count` obstacles, rejecting candidates that touch the robot at
/// posture `q` or come within `goal_clearance` of a target.
pub fn sample_obstacles<R: Rng + ?Sized>(
    spec: &ObstacleSpec,
    model: &RobotModel,
    q: &[f64],
    goals: &[Point3<f64>],
    rng: &mut R,
) -> Result<ObstacleDraw> {
    let segments = model.forward_kinematics(q)?.segments;
    let mut obstacles = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while obstacles.len() < spec.count {
        if attempts >= spec.max_attempts {
            return Err(Error::SamplingExhausted { attempts });
        }
        attempts += 1;
        let c = spec.centers.sample(rng);
        let s = uniform(rng, spec.size[0], spec.size[1]);
        let candidate = match spec.shape {
            ObstacleShape::Sphere => Obstacle::Sphere {
                center: [c.x, c.y, c.z],
                radius: s,
            },
            ObstacleShape::Box => Obstacle::Box {
                center: [c.x, c.y, c.z],
                half_extents: [s, s, s],
            },
        };
        let touches_robot =
            collisions_for_segments(model, &segments, std::slice::from_ref(&candidate)).colliding();
        let blocks_goal = goals
            .iter()
            .any(|g| candidate.point_distance(g) <= spec.goal_clearance);
        if !touches_robot && !blocks_goal {
            obstacles.push(candidate);
        }
    }
    Ok(ObstacleDraw {
        obstacles,
        attempts,
    })
}
