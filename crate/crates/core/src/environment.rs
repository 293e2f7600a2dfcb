//! Coordinated reaching environment.
//!
//! Observations are the concatenation of joint angles, end-effector
//! positions, hand targets and, in random-obstacle mode, obstacle centers and
//! sizes. Actions are joint velocities integrated over one control period.

use std::sync::Arc;

use nalgebra::Point3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    collisions_for_segments, sample_goal, sample_obstacles, stable_for_segments, FlagSet,
    GoalSpec, JointVector, Obstacle, ObstacleSpec, RobotModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneMode {
    NoObstacles,
    /// Obstacles resampled every episode and exposed in the observation.
    RandomObstacles,
    /// Fixed obstacles, not observed.
    StaticScene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub mode: SceneMode,
    /// Integration period, seconds.
    pub dt: f64,
    /// Joint speed bound, rad/s.
    pub action_bound: f64,
    pub max_steps: usize,
    /// Distance penalty weight.
    pub alpha: f64,
    /// Collision penalty.
    pub n1: f64,
    /// Instability penalty.
    pub n2: f64,
    /// Goal-boundary bonus.
    pub m1: f64,
    /// Per-hand goal bonus.
    pub m2: f64,
    /// Reward assigned to every task when all hands are at their goals.
    pub kappa: f64,
    pub r_goal: f64,
    pub r_gb: f64,
    pub goal: GoalSpec,
    #[serde(default)]
    pub obstacles: Option<ObstacleSpec>,
    #[serde(default)]
    pub static_obstacles: Vec<Obstacle>,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dt > 0.0) {
            return fail("dt must be positive");
        }
        if !(self.action_bound > 0.0) {
            return fail("action_bound must be positive");
        }
        if self.max_steps == 0 {
            return fail("max_steps must be at least 1");
        }
        if !(self.r_goal > 0.0 && self.r_goal < self.r_gb) {
            return fail("need 0 < r_goal < r_gb");
        }
        if [self.n1, self.n2, self.m1, self.m2, self.kappa].iter().any(|&c| !(c > 0.0)) {
            return fail("n1, n2, m1, m2 and kappa must be positive");
        }
        if !(self.kappa > self.m2) {
            return fail("kappa must dominate m2");
        }
        if self.alpha < 0.0 {
            return fail("alpha must be nonnegative");
        }
        if !self.goal.bounds.is_valid() {
            return fail("goal bounds have lo > hi");
        }
        if self.mode == SceneMode::RandomObstacles && self.obstacles.is_none() {
            return fail("random-obstacles mode needs an [env.obstacles] section");
        }
        if self.static_obstacles.iter().any(|o| !o.is_valid()) {
            return fail("static obstacles need positive sizes");
        }
        Ok(())
    }

    /// Defaults for the planar dual-arm testbed.
    pub fn planar() -> Self {
        use crate::kinematics::Bounds;
        Self {
            mode: SceneMode::NoObstacles,
            dt: 0.05,
            action_bound: 1.0,
            max_steps: 150,
            alpha: 1.0,
            n1: 10.0,
            n2: 20.0,
            m1: 1.0,
            m2: 5.0,
            kappa: 100.0,
            r_goal: 0.02,
            r_gb: 0.10,
            goal: GoalSpec {
                bounds: Bounds {
                    lo: [0.30, -0.10, 0.0],
                    hi: [0.50, 0.10, 0.0],
                },
                object_width: 0.2,
                pair_axis: [0.0, 1.0, 0.0],
            },
            obstacles: None,
            static_obstacles: Vec::new(),
        }
    }

    /// Planar testbed with `count` random spheres between the robot and the targets.
    pub fn planar_with_obstacles(count: usize) -> Self {
        use crate::kinematics::{Bounds, ObstacleShape};
        Self {
            mode: SceneMode::RandomObstacles,
            obstacles: Some(ObstacleSpec {
                count,
                shape: ObstacleShape::Sphere,
                centers: Bounds {
                    lo: [0.25, -0.25, 0.0],
                    hi: [0.55, 0.25, 0.0],
                },
                size: [0.03, 0.05],
                goal_clearance: 0.04,
                max_attempts: 1000,
            }),
            ..Self::planar()
        }
    }

    fn observed_obstacles(&self) -> usize {
        match (self.mode, &self.obstacles) {
            (SceneMode::RandomObstacles, Some(o)) => o.count,
            _ => 0,
        }
    }
}

/// Offsets of each block inside the flat observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub dof: usize,
    pub chains: usize,
    pub obstacle_features: usize,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        self.dof + 6 * self.chains + self.obstacle_features
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn joints(&self) -> std::ops::Range<usize> {
        0..self.dof
    }

    pub fn end_effectors(&self) -> std::ops::Range<usize> {
        self.dof..self.dof + 3 * self.chains
    }

    pub fn goals(&self) -> std::ops::Range<usize> {
        let s = self.dof + 3 * self.chains;
        s..s + 3 * self.chains
    }

    pub fn obstacles(&self) -> std::ops::Range<usize> {
        let s = self.dof + 6 * self.chains;
        s..s + self.obstacle_features
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub rewards: Vec<f64>,
    pub flags: FlagSet,
    /// Episode over: all goals reached, instability, or step budget spent.
    pub done: bool,
    /// Episode ended by the task itself (all goals or instability), as
    /// opposed to running out of steps. Only this masks bootstrapping.
    pub terminal: bool,
    pub distances: Vec<f64>,
}

/// Per-task reward: a distance penalty plus every applicable flag term; when
/// all hands are at their goals every task receives `kappa` instead.
pub fn compute_reward(distances: &[f64], flags: &FlagSet, cfg: &EnvConfig) -> Vec<f64> {
    if flags.all_goals() {
        return vec![cfg.kappa; distances.len()];
    }
    distances
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut r = -cfg.alpha * d;
            if flags.cols {
                r -= cfg.n1;
            }
            if flags.instb {
                r -= cfg.n2;
            }
            if flags.gb.get(i).copied().unwrap_or(false) {
                r += cfg.m1;
            }
            if flags.goal.get(i).copied().unwrap_or(false) {
                r += cfg.m2;
            }
            r
        })
        .collect()
}

/// Per-hand Euclidean errors and `-ln(sum of errors)`.
pub fn compute_score(goals: &[Point3<f64>], end_effectors: &[Point3<f64>]) -> (Vec<f64>, f64) {
    let errors: Vec<f64> = goals
        .iter()
        .zip(end_effectors)
        .map(|(g, e)| (g - e).norm())
        .collect();
    let total: f64 = errors.iter().sum();
    (errors, -(total.max(1e-12)).ln())
}

/// One reaching environment instance. Single owner; clone the config and
/// share the model to run several in parallel.
#[derive(Debug, Clone)]
pub struct Env {
    model: Arc<RobotModel>,
    cfg: EnvConfig,
    layout: StateLayout,
    q: JointVector,
    goals: Vec<Point3<f64>>,
    obstacles: Vec<Obstacle>,
    end_effectors: Vec<Point3<f64>>,
    flags: FlagSet,
    steps: usize,
}

impl Env {
    pub fn new(model: Arc<RobotModel>, cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let obstacle_features = cfg.observed_obstacles() * cfg.obstacles.as_ref().map_or(0, |o| match o.shape {
            crate::kinematics::ObstacleShape::Sphere => 4,
            crate::kinematics::ObstacleShape::Box => 6,
        });
        let layout = StateLayout {
            dof: model.dof(),
            chains: model.num_chains(),
            obstacle_features,
        };
        let q = model.home().clone();
        let end_effectors = model.end_effectors(&q)?;
        let chains = model.num_chains();
        let obstacles = if cfg.mode == SceneMode::StaticScene {
            cfg.static_obstacles.clone()
        } else {
            Vec::new()
        };
        Ok(Self {
            model,
            cfg,
            layout,
            q,
            goals: end_effectors.clone(),
            obstacles,
            end_effectors,
            flags: FlagSet::cleared(chains),
            steps: 0,
        })
    }

    pub fn model(&self) -> &Arc<RobotModel> {
        &self.model
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn state_dim(&self) -> usize {
        self.layout.len()
    }

    pub fn action_dim(&self) -> usize {
        self.layout.dof
    }

    pub fn q(&self) -> &JointVector {
        &self.q
    }

    pub fn goals(&self) -> &[Point3<f64>] {
        &self.goals
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn end_effectors(&self) -> &[Point3<f64>] {
        &self.end_effectors
    }

    pub fn flags(&self) -> &FlagSet {
        &self.flags
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Home posture, fresh targets (and obstacles, per mode), cleared flags.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        self.q = self.model.home().clone();
        self.goals = sample_goal(&self.cfg.goal, self.model.num_chains(), rng);
        if self.cfg.mode == SceneMode::RandomObstacles {
            let spec = self.cfg.obstacles.as_ref().expect("validated");
            self.obstacles = sample_obstacles(spec, &self.model, &self.q, &self.goals, rng)?.obstacles;
        }
        self.end_effectors = self.model.end_effectors(&self.q)?;
        self.flags = FlagSet::cleared(self.model.num_chains());
        self.steps = 0;
        Ok(self.observe())
    }

    /// Places the robot in an explicit scene, for rollouts and tests.
    pub fn reset_to(&mut self, goals: Vec<Point3<f64>>, obstacles: Vec<Obstacle>) -> Result<Vec<f64>> {
        if goals.len() != self.model.num_chains() {
            return Err(Error::Dimension {
                context: "goal list",
                expected: self.model.num_chains(),
                actual: goals.len(),
            });
        }
        if self.cfg.mode == SceneMode::RandomObstacles {
            let want = self.cfg.observed_obstacles();
            if obstacles.len() != want {
                return Err(Error::Dimension {
                    context: "observed obstacles",
                    expected: want,
                    actual: obstacles.len(),
                });
            }
        }
        self.q = self.model.home().clone();
        self.goals = goals;
        self.obstacles = obstacles;
        self.end_effectors = self.model.end_effectors(&self.q)?;
        self.flags = FlagSet::cleared(self.model.num_chains());
        self.steps = 0;
        Ok(self.observe())
    }

    pub fn observe(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.layout.len());
        s.extend_from_slice(&self.q);
        for e in &self.end_effectors {
            s.extend_from_slice(e.coords.as_slice());
        }
        for g in &self.goals {
            s.extend_from_slice(g.coords.as_slice());
        }
        if self.layout.obstacle_features > 0 {
            for o in &self.obstacles {
                s.extend(o.features());
            }
        }
        debug_assert_eq!(s.len(), self.layout.len());
        s
    }

    pub fn distances(&self) -> Vec<f64> {
        self.goals
            .iter()
            .zip(&self.end_effectors)
            .map(|(g, e)| (g - e).norm())
            .collect()
    }

    /// Integrates joint velocities for one period and evaluates flags and rewards.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if action.len() != self.layout.dof {
            return Err(Error::Dimension {
                context: "action",
                expected: self.layout.dof,
                actual: action.len(),
            });
        }
        let bound = self.cfg.action_bound;
        let moved: Vec<f64> = self
            .q
            .iter()
            .zip(action)
            .map(|(&q, &v)| q + v.clamp(-bound, bound) * self.cfg.dt)
            .collect();
        self.q = self.model.clamp_to_limits(&moved)?;
        let pose = self.model.forward_kinematics(&self.q)?;
        self.end_effectors = pose.end_effectors;

        let distances = self.distances();
        let flags = FlagSet {
            cols: collisions_for_segments(&self.model, &pose.segments, &self.obstacles).colliding(),
            instb: !stable_for_segments(&self.model, &pose.segments),
            gb: distances.iter().map(|&d| d <= self.cfg.r_gb).collect(),
            goal: distances.iter().map(|&d| d <= self.cfg.r_goal).collect(),
        };
        let rewards = compute_reward(&distances, &flags, &self.cfg);
        self.steps += 1;
        let terminal = flags.all_goals() || flags.instb;
        let done = terminal || self.steps >= self.cfg.max_steps;
        self.flags = flags.clone();
        Ok(StepResult {
            next_state: self.observe(),
            rewards,
            flags,
            done,
            terminal,
            distances,
        })
    }

    /// Score of the current configuration.
    pub fn score(&self) -> (Vec<f64>, f64) {
        compute_score(&self.goals, &self.end_effectors)
    }
}
