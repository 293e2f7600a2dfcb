use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spline::{fit_smoothing_spline, KnotSeries, Spline};
use crate::error::{Error, Result};
use crate::kinematics::{collisions_for_segments, stable_for_segments, JointVector, Obstacle, RobotModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingConfig {
    /// Bisection stops once the bracket is narrower than this.
    pub precision: f64,
    /// Weight of the first and last knot; interior knots weigh 1.
    /// `inf` pins the endpoints exactly.
    pub endpoint_weight: f64,
    /// Feasibility samples per knot interval.
    pub subdivisions: usize,
    /// Also require every sample to respect the joint limits.
    pub check_limits: bool,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            precision: 1e-6,
            endpoint_weight: 1e6,
            subdivisions: 10,
            check_limits: true,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.precision > 0.0 && self.precision < 1.0) {
            return Err(Error::Config("precision must be in (0, 1)".into()));
        }
        if !(self.endpoint_weight >= 1.0) {
            return Err(Error::Config("endpoint_weight must be at least the interior weight 1".into()));
        }
        if self.subdivisions == 0 {
            return Err(Error::Config("subdivisions must be positive".into()));
        }
        Ok(())
    }
}

/// Robot and scene against which smoothed motions are screened.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingContext<'a> {
    pub model: &'a RobotModel,
    pub obstacles: &'a [Obstacle],
    pub config: SmoothingConfig,
}

/// How one joint moves between knots.
#[derive(Debug, Clone, PartialEq)]
pub enum JointCurve {
    /// Straight lines between the recorded knots.
    Knots(Vec<f64>),
    Spline(Spline),
}

impl JointCurve {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            JointCurve::Knots(v) => {
                let last = v.len() - 1;
                let t = t.clamp(0.0, last as f64);
                let i = (t.floor() as usize).min(last.saturating_sub(1));
                let s = t - i as f64;
                if last == 0 {
                    v[0]
                } else {
                    v[i] + s * (v[i + 1] - v[i])
                }
            }
            JointCurve::Spline(s) => s.eval(t).expect("sample times lie in the knot domain"),
        }
    }
}

/// A joint trajectory during smoothing: the recorded knots and the current
/// curve of every joint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    knots: Vec<Vec<f64>>,
    curves: Vec<JointCurve>,
    steps: usize,
}

impl TrajectoryState {
    /// `rows[t][j]` is joint `j` at step `t`.
    pub fn new(rows: &[JointVector]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Dimension {
                context: "trajectory length",
                expected: 2,
                actual: rows.len(),
            });
        }
        let n = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                context: "trajectory row",
                expected: n,
                actual: bad.len(),
            });
        }
        let knots: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Ok(Self {
            curves: knots.iter().cloned().map(JointCurve::Knots).collect(),
            knots,
            steps: rows.len() - 1,
        })
    }

    pub fn joints(&self) -> usize {
        self.knots.len()
    }

    /// Number of knot intervals `T`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn knots(&self, joint: usize) -> &[f64] {
        &self.knots[joint]
    }

    pub fn curve(&self, joint: usize) -> &JointCurve {
        &self.curves[joint]
    }

    pub fn set_curve(&mut self, joint: usize, curve: JointCurve) {
        self.curves[joint] = curve;
    }

    /// Configuration at time `t`, optionally with one joint's curve replaced.
    pub fn sample(&self, t: f64, replace: Option<(usize, &Spline)>) -> Vec<f64> {
        self.curves
            .iter()
            .enumerate()
            .map(|(j, c)| match replace {
                Some((k, s)) if k == j => s.eval(t).expect("sample times lie in the knot domain"),
                _ => c.eval(t),
            })
            .collect()
    }

    pub fn sample_times(&self, subdivisions: usize) -> Vec<f64> {
        let n = self.steps * subdivisions;
        (0..=n).map(|i| i as f64 / subdivisions as f64).collect()
    }

    /// Current curves evaluated at the knot times.
    pub fn rows(&self) -> Vec<JointVector> {
        (0..=self.steps)
            .map(|t| JointVector(self.sample(t as f64, None)))
            .collect()
    }

    pub fn knot_series(&self, joint: usize, endpoint_weight: f64) -> Result<KnotSeries> {
        KnotSeries::uniform(&self.knots[joint], endpoint_weight)
    }
}

/// True when configuration `q` is collision-free, stable and (if enabled)
/// within the joint limits.
pub fn configuration_ok(ctx: &SmoothingContext, q: &[f64]) -> bool {
    if ctx.config.check_limits && !ctx.model.within_limits(q) {
        return false;
    }
    let Ok(pose) = ctx.model.forward_kinematics(q) else {
        return false;
    };
    !collisions_for_segments(ctx.model, &pose.segments, ctx.obstacles).colliding()
        && stable_for_segments(ctx.model, &pose.segments)
}

fn screen(state: &TrajectoryState, replace: Option<(usize, &Spline)>, ctx: &SmoothingContext, subdivisions: usize) -> bool {
    state
        .sample_times(subdivisions)
        .par_iter()
        .all(|&t| configuration_ok(ctx, &state.sample(t, replace)))
}

/// Dense feasibility screen of the current trajectory.
pub fn trajectory_feasible(state: &TrajectoryState, ctx: &SmoothingContext) -> bool {
    screen(state, None, ctx, ctx.config.subdivisions)
}

/// Same screen at an explicit sampling density.
pub fn trajectory_feasible_at(state: &TrajectoryState, ctx: &SmoothingContext, subdivisions: usize) -> bool {
    screen(state, None, ctx, subdivisions)
}

/// Fits joint `joint` at `p` from its recorded knots, substitutes it into
/// the trajectory and screens the result. Never modifies `state`.
pub fn evaluate_constraints(state: &TrajectoryState, joint: usize, p: f64, ctx: &SmoothingContext) -> Result<bool> {
    let spline = fit_joint(state, joint, p, ctx)?;
    Ok(screen(state, Some((joint, &spline)), ctx, ctx.config.subdivisions))
}

pub fn fit_joint(state: &TrajectoryState, joint: usize, p: f64, ctx: &SmoothingContext) -> Result<Spline> {
    if joint >= state.joints() {
        return Err(Error::Dimension {
            context: "joint index",
            expected: state.joints(),
            actual: joint,
        });
    }
    fit_smoothing_spline(&state.knot_series(joint, ctx.config.endpoint_weight)?, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub p_opt: f64,
    /// Predicate calls, including the initial check at `p = 1`.
    pub evaluations: usize,
}

/// Smallest feasible smoothing parameter, to within `precision`, assuming
/// feasibility is monotone in `p`. Checks `p = 1` first and fails for
/// `joint` if even the interpolating fit is infeasible. The result is
/// always a value at which the predicate held.
pub fn binary_search_p<F>(mut feasible: F, precision: f64, joint: usize) -> Result<SearchResult>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(precision > 0.0) {
        return Err(Error::Config("precision must be positive".into()));
    }
    let mut evaluations = 1;
    if !feasible(1.0)? {
        return Err(Error::InfeasibleInput { joint });
    }
    let (mut lower, mut upper) = (0.0f64, 1.0f64);
    while upper - lower >= precision {
        let mid = 0.5 * (lower + upper);
        evaluations += 1;
        if feasible(mid)? {
            upper = mid;
        } else {
            lower = mid;
        }
    }
    Ok(SearchResult {
        p_opt: upper,
        evaluations,
    })
}

/// Per-joint outcome of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReport {
    pub joint: usize,
    pub p_opt: f64,
    /// Feasibility checks spent on this joint, bisection and verification.
    pub evaluations: usize,
    /// False when no spline was feasible and the joint kept its recorded
    /// knots; `p_opt` is then 1.
    /// Curvature of the natural interpolant through the recorded knots.
    pub roughness_before: f64,
    pub roughness_after: f64,
    pub smoothed: bool,
}

/// The bisection answer is re-screened at this multiple of the working
/// sampling density, since it sits on the feasibility boundary where a
/// coarse screen can miss a grazing contact between samples.
pub const VERIFY_FACTOR: usize = 10;

/// Steps from `p_opt` toward 1 tried when the finer screen rejects it.
const RETREAT_STEPS: usize = 20;

#[derive(Debug, Clone)]
pub struct SmoothingOutcome {
    pub state: TrajectoryState,
    pub reports: Vec<JointReport>,
}

impl SmoothingOutcome {
    pub fn splines(&self) -> Vec<&Spline> {
        (0..self.state.joints())
            .filter_map(|j| match self.state.curve(j) {
                JointCurve::Spline(s) => Some(s),
                JointCurve::Knots(_) => None,
            })
            .collect()
    }
}

/// Curvature of the natural cubic interpolant of a uniformly sampled series.
pub fn knot_roughness(values: &[f64]) -> Result<f64> {
    Ok(fit_smoothing_spline(&KnotSeries::uniform(values, 1.0)?, 1.0)?.roughness())
}

/// Smooths every joint in index order (base joints first), each at the
/// smallest parameter that keeps the whole trajectory feasible given the
/// joints already smoothed.
///
/// The bisection answer is confirmed at `VERIFY_FACTOR` times the working
/// density; if that fails, `p` retreats toward 1 by halving its distance
/// to 1. A joint whose interpolating fit is itself infeasible in the
/// current context (earlier joints already smoothed) keeps its recorded
/// knots, which the trajectory was last screened with, so the output is
/// never less feasible than the input.
pub fn spline_fit_all(rows: &[JointVector], ctx: &SmoothingContext) -> Result<SmoothingOutcome> {
    ctx.config.validate()?;
    let mut state = TrajectoryState::new(rows)?;
    if state.joints() != ctx.model.dof() {
        return Err(Error::Dimension {
            context: "trajectory joints",
            expected: ctx.model.dof(),
            actual: state.joints(),
        });
    }
    if let Some(t) = rows.iter().position(|q| !configuration_ok(ctx, q)) {
        return Err(Error::Model(format!("trajectory knot {t} is not collision-free, stable and within limits")));
    }
    let fine = ctx.config.subdivisions * VERIFY_FACTOR;
    let mut reports = Vec::with_capacity(state.joints());
    for joint in 0..state.joints() {
        let roughness_before = knot_roughness(state.knots(joint))?;
        let mut chosen = None;
        let evaluations = match binary_search_p(|p| evaluate_constraints(&state, joint, p, ctx), ctx.config.precision, joint) {
            Ok(search) => {
                let mut evaluations = search.evaluations;
                for k in 0..=RETREAT_STEPS {
                    let p = if k == RETREAT_STEPS {
                        1.0
                    } else {
                        1.0 - (1.0 - search.p_opt) * 0.5f64.powi(k as i32)
                    };
                    let spline = fit_joint(&state, joint, p, ctx)?;
                    evaluations += 1;
                    if screen(&state, Some((joint, &spline)), ctx, fine) {
                        chosen = Some((p, spline));
                        break;
                    }
                }
                evaluations
            }
            Err(Error::InfeasibleInput { .. }) => 1,
            Err(e) => return Err(e),
        };
        match chosen {
            Some((p_opt, spline)) => {
                reports.push(JointReport {
                    joint,
                    p_opt,
                    evaluations,
                    roughness_before,
                    roughness_after: spline.roughness(),
                    smoothed: true,
                });
                state.set_curve(joint, JointCurve::Spline(spline));
            }
            None => reports.push(JointReport {
                joint,
                p_opt: 1.0,
                evaluations,
                roughness_before,
                roughness_after: roughness_before,
                smoothed: false,
            }),
        }
    }
    Ok(SmoothingOutcome { state, reports })
}
