//! Kinematic simulation of a multi-chain robot: forward kinematics, capsule
//! collision queries against parametric obstacles, a center-of-mass balance
//! proxy, and random scene sampling.

mod collision;
mod model;
mod sampling;
mod stability;

pub use collision::{check_collision, closest_on_segment, min_clearance, CollisionReport, Obstacle};
pub use model::{
    Chain, ChainSpec, Joint, JointSpec, JointVector, Link, LinkSpec, Pose, RobotModel, RobotSpec,
};
pub use sampling::{
    sample_goal, sample_obstacles, Bounds, GoalSpec, ObstacleDraw, ObstacleShape, ObstacleSpec,
};
pub use stability::{center_of_mass, check_stability, support_margin};

pub(crate) use collision::collisions_for_segments;
pub(crate) use stability::stable_for_segments;

/// Per-step constraint flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlagSet {
    pub cols: bool,
    pub instb: bool,
    /// Hand within the goal boundary radius, per chain.
    pub gb: Vec<bool>,
    /// Hand within the goal radius, per chain.
    pub goal: Vec<bool>,
}

impl FlagSet {
    pub fn cleared(chains: usize) -> Self {
        Self {
            cols: false,
            instb: false,
            gb: vec![false; chains],
            goal: vec![false; chains],
        }
    }

    /// Every hand is inside its goal radius.
    pub fn all_goals(&self) -> bool {
        !self.goal.is_empty() && self.goal.iter().all(|&g| g)
    }
}

const Z: [f64; 3] = [0.0, 0.0, 1.0];

/// Top-down planar dual-arm robot: one torso joint shared by two 2-joint
/// arms, every joint rotating about the vertical axis.
pub fn planar_dual_arm() -> RobotSpec {
    let joint = |name: &str, parent: Option<usize>, origin: [f64; 3], limits: [f64; 2]| JointSpec {
        name: name.into(),
        axis: Z,
        limits,
        parent,
        origin,
        rpy: [0.0; 3],
    };
    let link = |joint: usize, a: [f64; 3], b: [f64; 3], radius: f64, mass: f64| LinkSpec {
        joint,
        a,
        b,
        radius,
        mass,
    };
    RobotSpec {
        joints: vec![
            joint("torso", None, [0.0, 0.0, 0.0], [-0.8, 0.8]),
            joint("left_shoulder", Some(0), [0.10, 0.15, 0.0], [-0.5, 2.2]),
            joint("left_elbow", Some(1), [0.25, 0.0, 0.0], [-2.6, 0.3]),
            joint("right_shoulder", Some(0), [0.10, -0.15, 0.0], [-2.2, 0.5]),
            joint("right_elbow", Some(3), [0.25, 0.0, 0.0], [-0.3, 2.6]),
        ],
        links: vec![
            link(0, [0.0, 0.0, 0.0], [0.10, 0.0, 0.0], 0.06, 1.0),
            link(0, [0.10, -0.15, 0.0], [0.10, 0.15, 0.0], 0.04, 0.6),
            link(1, [0.0, 0.0, 0.0], [0.25, 0.0, 0.0], 0.03, 0.4),
            link(2, [0.0, 0.0, 0.0], [0.20, 0.0, 0.0], 0.025, 0.3),
            link(3, [0.0, 0.0, 0.0], [0.25, 0.0, 0.0], 0.03, 0.4),
            link(4, [0.0, 0.0, 0.0], [0.20, 0.0, 0.0], 0.025, 0.3),
        ],
        chains: vec![
            ChainSpec {
                name: "left".into(),
                joints: vec![0, 1, 2],
                tip: [0.20, 0.0, 0.0],
            },
            ChainSpec {
                name: "right".into(),
                joints: vec![0, 3, 4],
                tip: [0.20, 0.0, 0.0],
            },
        ],
        shared_joints: vec![0],
        support_polygon: vec![[-0.12, -0.16], [0.20, -0.16], [0.20, 0.16], [-0.12, 0.16]],
        base_mass: 2.0,
        base_com: [0.0, 0.0, 0.0],
        home: vec![0.0, 1.2, -2.2, -1.2, 2.2],
    }
}

/// Spatial dual-arm robot with a 3-joint torso (yaw, pitch, roll) shared by
/// two 3-joint arms.
pub fn spatial_dual_arm() -> RobotSpec {
    let joint = |name: &str, axis: [f64; 3], parent: Option<usize>, origin: [f64; 3], limits: [f64; 2]| {
        JointSpec {
            name: name.into(),
            axis,
            limits,
            parent,
            origin,
            rpy: [0.0; 3],
        }
    };
    let x = [1.0, 0.0, 0.0];
    let y = [0.0, 1.0, 0.0];
    let link = |joint: usize, a: [f64; 3], b: [f64; 3], radius: f64, mass: f64| LinkSpec {
        joint,
        a,
        b,
        radius,
        mass,
    };
    RobotSpec {
        joints: vec![
            joint("torso_yaw", Z, None, [0.0, 0.0, 0.30], [-0.8, 0.8]),
            joint("torso_pitch", y, Some(0), [0.0, 0.0, 0.10], [-0.5, 0.5]),
            joint("torso_roll", x, Some(1), [0.0, 0.0, 0.10], [-0.4, 0.4]),
            joint("left_shoulder_pitch", y, Some(2), [0.0, 0.15, 0.15], [-2.0, 2.0]),
            joint("left_shoulder_yaw", Z, Some(3), [0.0, 0.0, 0.0], [-1.0, 1.6]),
            joint("left_elbow", y, Some(4), [0.25, 0.0, 0.0], [-2.5, 0.2]),
            joint("right_shoulder_pitch", y, Some(2), [0.0, -0.15, 0.15], [-2.0, 2.0]),
            joint("right_shoulder_yaw", Z, Some(6), [0.0, 0.0, 0.0], [-1.6, 1.0]),
            joint("right_elbow", y, Some(7), [0.25, 0.0, 0.0], [-2.5, 0.2]),
        ],
        links: vec![
            link(2, [0.0, 0.0, -0.2], [0.0, 0.0, 0.15], 0.06, 1.0),
            link(2, [0.0, -0.15, 0.15], [0.0, 0.15, 0.15], 0.04, 0.6),
            link(4, [0.0, 0.0, 0.0], [0.25, 0.0, 0.0], 0.03, 0.4),
            link(5, [0.0, 0.0, 0.0], [0.20, 0.0, 0.0], 0.025, 0.3),
            link(7, [0.0, 0.0, 0.0], [0.25, 0.0, 0.0], 0.03, 0.4),
            link(8, [0.0, 0.0, 0.0], [0.20, 0.0, 0.0], 0.025, 0.3),
        ],
        chains: vec![
            ChainSpec {
                name: "left".into(),
                joints: vec![0, 1, 2, 3, 4, 5],
                tip: [0.20, 0.0, 0.0],
            },
            ChainSpec {
                name: "right".into(),
                joints: vec![0, 1, 2, 6, 7, 8],
                tip: [0.20, 0.0, 0.0],
            },
        ],
        shared_joints: vec![0, 1, 2],
        support_polygon: vec![[-0.12, -0.16], [0.20, -0.16], [0.20, 0.16], [-0.12, 0.16]],
        base_mass: 2.0,
        base_com: [0.0, 0.0, 0.15],
        home: vec![0.0, 0.0, 0.0, 0.6, 0.4, -1.2, 0.6, -0.4, -1.2],
    }
}
