//! Post-processing of joint trajectories with cubic smoothing splines.
//!
//! Each joint is fitted with a natural smoothing spline whose parameter `p`
//! trades knot fidelity (`p = 1` interpolates) against curvature (`p = 0`
//! is the weighted least-squares line). Per joint, the smallest `p` that
//! keeps the whole motion collision-free and stable is found by bisection.

mod spline;
mod sweep;

pub use spline::{fit_smoothing_spline, second_difference_roughness, KnotSeries, Spline, SplinePoint};
pub use sweep::{
    binary_search_p, configuration_ok, evaluate_constraints, fit_joint, knot_roughness, spline_fit_all,
    trajectory_feasible, trajectory_feasible_at, JointCurve, JointReport, SearchResult, SmoothingConfig,
    SmoothingContext, SmoothingOutcome, TrajectoryState, VERIFY_FACTOR,
};
