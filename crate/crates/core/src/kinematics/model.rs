//! Robot description and forward kinematics.
//!
//! A [`RobotModel`] is a tree of revolute joints. Each joint frame is placed
//! relative to its parent joint frame by a fixed offset and then rotated about
//! the joint axis. Capsule links hang off joint frames. Task chains are
//! root-to-tip joint paths; the joints common to every chain form the shared
//! set (the torso).

use std::collections::BTreeSet;

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint angles in radians, ordered as [`RobotModel::joints`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub Vec<f64>);

impl JointVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for JointVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for JointVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for JointVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub axis: Unit<Vector3<f64>>,
    pub lower: f64,
    pub upper: f64,
    /// Parent joint; `None` for joints attached to the fixed base.
    pub parent: Option<usize>,
    /// Pose of this joint frame in the parent frame at zero angle.
    pub offset: Isometry3<f64>,
}

/// Capsule geometry rigidly attached to a joint frame.
#[derive(Debug, Clone)]
pub struct Link {
    pub joint: usize,
    pub a: Point3<f64>,
    pub b: Point3<f64>,
    pub radius: f64,
    /// Point mass located at the segment midpoint.
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub name: String,
    /// Root-to-tip joint indices.
    pub joints: Vec<usize>,
    /// End-effector point in the frame of the last chain joint.
    pub tip: Point3<f64>,
}

/// Immutable multi-chain kinematic model. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct RobotModel {
    joints: Vec<Joint>,
    links: Vec<Link>,
    chains: Vec<Chain>,
    shared: Vec<usize>,
    exclusive: Vec<Vec<usize>>,
    support: Vec<[f64; 2]>,
    base_mass: f64,
    base_com: Point3<f64>,
    home: JointVector,
}

/// Serializable robot description; the `[robot]` section of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub joints: Vec<JointSpec>,
    pub links: Vec<LinkSpec>,
    pub chains: Vec<ChainSpec>,
    pub shared_joints: Vec<usize>,
    /// Convex ground-plane support polygon, x/y in meters.
    pub support_polygon: Vec<[f64; 2]>,
    #[serde(default)]
    pub base_mass: f64,
    #[serde(default)]
    pub base_com: [f64; 3],
    pub home: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub axis: [f64; 3],
    pub limits: [f64; 2],
    #[serde(default)]
    pub parent: Option<usize>,
    #[serde(default)]
    pub origin: [f64; 3],
    /// Fixed roll/pitch/yaw of the joint frame relative to its parent.
    #[serde(default)]
    pub rpy: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub joint: usize,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
    #[serde(default)]
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub name: String,
    pub joints: Vec<usize>,
    pub tip: [f64; 3],
}

/// World-frame result of a forward kinematics query.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub frames: Vec<Isometry3<f64>>,
    /// One end-effector position per chain.
    pub end_effectors: Vec<Point3<f64>>,
    /// World-frame capsule segment endpoints, one per link.
    pub segments: Vec<(Point3<f64>, Point3<f64>)>,
}

fn point(p: [f64; 3]) -> Point3<f64> {
    Point3::new(p[0], p[1], p[2])
}

impl RobotModel {
    pub fn from_spec(spec: &RobotSpec) -> Result<Self> {
        let n = spec.joints.len();
        if n == 0 {
            return Err(Error::Model("robot has no joints".into()));
        }
        let mut joints = Vec::with_capacity(n);
        for (i, js) in spec.joints.iter().enumerate() {
            let axis = Vector3::new(js.axis[0], js.axis[1], js.axis[2]);
            if axis.norm() < 1e-12 {
                return Err(Error::Model(format!("joint {i} has a zero axis")));
            }
            if !(js.limits[0] < js.limits[1]) {
                return Err(Error::Model(format!(
                    "joint {i} limits [{}, {}] are not increasing",
                    js.limits[0], js.limits[1]
                )));
            }
            if let Some(p) = js.parent {
                if p >= i {
                    return Err(Error::Model(format!(
                        "joint {i} parent {p} must precede it"
                    )));
                }
            }
            let rotation = UnitQuaternion::from_euler_angles(js.rpy[0], js.rpy[1], js.rpy[2]);
            joints.push(Joint {
                name: js.name.clone(),
                axis: Unit::new_normalize(axis),
                lower: js.limits[0],
                upper: js.limits[1],
                parent: js.parent,
                offset: Isometry3::from_parts(Translation3::from(point(js.origin).coords), rotation),
            });
        }

        let mut links = Vec::with_capacity(spec.links.len());
        for (i, ls) in spec.links.iter().enumerate() {
            if ls.joint >= n {
                return Err(Error::Model(format!("link {i} references joint {}", ls.joint)));
            }
            if !(ls.radius > 0.0) || ls.mass < 0.0 {
                return Err(Error::Model(format!("link {i} needs radius > 0 and mass >= 0")));
            }
            links.push(Link {
                joint: ls.joint,
                a: point(ls.a),
                b: point(ls.b),
                radius: ls.radius,
                mass: ls.mass,
            });
        }

        if spec.chains.is_empty() {
            return Err(Error::Model("robot has no task chains".into()));
        }
        let mut chains = Vec::with_capacity(spec.chains.len());
        for cs in &spec.chains {
            if cs.joints.is_empty() {
                return Err(Error::Model(format!("chain {} is empty", cs.name)));
            }
            for (pos, &j) in cs.joints.iter().enumerate() {
                if j >= n {
                    return Err(Error::Model(format!("chain {} references joint {j}", cs.name)));
                }
                let expected = if pos == 0 { None } else { Some(cs.joints[pos - 1]) };
                if joints[j].parent != expected {
                    return Err(Error::Model(format!(
                        "chain {} is not a root-to-tip joint path at joint {j}",
                        cs.name
                    )));
                }
            }
            chains.push(Chain {
                name: cs.name.clone(),
                joints: cs.joints.clone(),
                tip: point(cs.tip),
            });
        }

        let shared: BTreeSet<usize> = spec.shared_joints.iter().copied().collect();
        if shared.len() != spec.shared_joints.len() {
            return Err(Error::Model("shared_joints has duplicates".into()));
        }
        for c in &chains {
            if !shared.iter().all(|s| c.joints.contains(s)) {
                return Err(Error::Model(format!(
                    "chain {} does not contain every shared joint",
                    c.name
                )));
            }
        }
        let exclusive: Vec<Vec<usize>> = chains
            .iter()
            .map(|c| c.joints.iter().copied().filter(|j| !shared.contains(j)).collect())
            .collect();
        let mut seen = BTreeSet::new();
        for ex in &exclusive {
            for &j in ex {
                if !seen.insert(j) {
                    return Err(Error::Model(format!(
                        "joint {j} is exclusive to more than one chain; list it in shared_joints"
                    )));
                }
            }
        }

        let support = convex_ccw(&spec.support_polygon)?;

        let home = JointVector(spec.home.clone());
        if home.len() != n {
            return Err(Error::Dimension {
                context: "home posture",
                expected: n,
                actual: home.len(),
            });
        }
        for (i, (&q, j)) in home.iter().zip(&joints).enumerate() {
            if q < j.lower || q > j.upper {
                return Err(Error::Model(format!("home angle of joint {i} is outside its limits")));
            }
        }

        Ok(Self {
            joints,
            links,
            chains,
            shared: shared.into_iter().collect(),
            exclusive,
            support,
            base_mass: spec.base_mass,
            base_com: point(spec.base_com),
            home,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn shared_joints(&self) -> &[usize] {
        &self.shared
    }

    /// Joints of chain `i` that are not shared.
    pub fn exclusive_joints(&self, i: usize) -> &[usize] {
        &self.exclusive[i]
    }

    /// Counter-clockwise support polygon.
    pub fn support_polygon(&self) -> &[[f64; 2]] {
        &self.support
    }

    pub fn base_mass(&self) -> f64 {
        self.base_mass
    }

    pub fn base_com(&self) -> Point3<f64> {
        self.base_com
    }

    pub fn home(&self) -> &JointVector {
        &self.home
    }

    pub fn limits(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.joints.iter().map(|j| (j.lower, j.upper))
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.joints.len() {
            return Err(Error::Dimension {
                context: "joint vector",
                expected: self.joints.len(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    /// World frame of every joint.
    pub fn joint_frames(&self, q: &[f64]) -> Result<Vec<Isometry3<f64>>> {
        self.check_dim(q)?;
        let mut frames: Vec<Isometry3<f64>> = Vec::with_capacity(self.joints.len());
        for (j, &angle) in self.joints.iter().zip(q) {
            let local = j.offset * UnitQuaternion::from_axis_angle(&j.axis, angle);
            let world = match j.parent {
                Some(p) => frames[p] * local,
                None => local,
            };
            frames.push(world);
        }
        Ok(frames)
    }

    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Pose> {
        let frames = self.joint_frames(q)?;
        let end_effectors = self
            .chains
            .iter()
            .map(|c| frames[*c.joints.last().expect("chains are nonempty")] * c.tip)
            .collect();
        let segments = self
            .links
            .iter()
            .map(|l| (frames[l.joint] * l.a, frames[l.joint] * l.b))
            .collect();
        Ok(Pose {
            frames,
            end_effectors,
            segments,
        })
    }

    /// End-effector positions only.
    pub fn end_effectors(&self, q: &[f64]) -> Result<Vec<Point3<f64>>> {
        Ok(self.forward_kinematics(q)?.end_effectors)
    }

    /// Componentwise projection of `q` into the joint limits.
    pub fn clamp_to_limits(&self, q: &[f64]) -> Result<JointVector> {
        self.check_dim(q)?;
        Ok(JointVector(
            q.iter()
                .zip(&self.joints)
                .map(|(&v, j)| v.clamp(j.lower, j.upper))
                .collect(),
        ))
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.joints.len()
            && q.iter()
                .zip(&self.joints)
                .all(|(&v, j)| v >= j.lower && v <= j.upper)
    }
}

/// Validates convexity and returns the polygon in counter-clockwise order.
fn convex_ccw(poly: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if poly.len() < 3 {
        return Err(Error::Model("support polygon needs at least 3 vertices".into()));
    }
    let n = poly.len();
    let cross = |i: usize| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
    };
    let turns: Vec<f64> = (0..n).map(cross).collect();
    let all_left = turns.iter().all(|&t| t > 0.0);
    let all_right = turns.iter().all(|&t| t < 0.0);
    if !(all_left || all_right) {
        return Err(Error::Model("support polygon must be strictly convex".into()));
    }
    let mut out = poly.to_vec();
    if all_right {
        out.reverse();
    }
    Ok(out)
}
