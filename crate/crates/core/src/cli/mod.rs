//! Command implementations behind the `dualreach` binary: train, roll out,
//! smooth and evaluate, plus the config, CSV and SVG formats they use.

mod config;
mod csvio;
mod plot;

use std::path::{Path, PathBuf};

use nalgebra::Point3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::RunConfig;
pub use csvio::{
    read_scores, read_smoothing_report, read_trajectory, write_hand_paths, write_scores, write_smoothing_report,
    write_trajectory,
};
pub use plot::{overlay_svg, rolling_mean_std, score_curve_svg, Panel, Series};

use crate::digrad::{rollout, ActorCritic, EpisodeRecord, Trainer};
use crate::environment::Env;
use crate::error::{Error, Result};
use crate::kinematics::Obstacle;
use crate::nnet::Checkpoint;
use crate::smoothing::{spline_fit_all, SmoothingContext, SmoothingOutcome};

/// Sliding window of the score-curve band.
pub const SCORE_WINDOW: usize = 20;

pub const CHECKPOINT_FILE: &str = "checkpoint.dgrd";
pub const SCORES_CSV: &str = "scores.csv";
pub const SCORES_SVG: &str = "scores.svg";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const HANDS_CSV: &str = "hands.csv";
pub const SCENE_JSON: &str = "scene.json";
pub const ROLLOUT_JSON: &str = "rollout.json";
pub const SMOOTHED_CSV: &str = "smoothed.csv";
pub const SMOOTHED_HANDS_CSV: &str = "smoothed_hands.csv";
pub const REPORT_CSV: &str = "smoothing_report.csv";
pub const OVERLAY_SVG: &str = "overlay.svg";
pub const EVAL_JSON: &str = "eval.json";

/// Goals and obstacles of one episode, enough to re-check a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub goals: Vec<[f64; 3]>,
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn load_agent(path: &Path, env: &Env) -> Result<ActorCritic> {
    let agent = Trainer::from_checkpoint(&Checkpoint::load(path)?)?.agent;
    if agent.state_dim() != env.state_dim() || agent.action_dim() != env.action_dim() {
        return Err(Error::Checkpoint(format!(
            "checkpoint expects {} state and {} action entries, config gives {} and {}",
            agent.state_dim(),
            agent.action_dim(),
            env.state_dim(),
            env.action_dim()
        )));
    }
    Ok(agent)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub log: Vec<EpisodeRecord>,
    pub checkpoint: PathBuf,
    pub scores: PathBuf,
    pub plot: PathBuf,
}

/// Trains from `seed` (or resumes from `resume`, refilling the replay
/// buffer) and writes the checkpoint, score CSV and score curve to `out`.
pub fn cmd_train(cfg: &RunConfig, seed: u64, out: &Path, episodes: Option<usize>, resume: Option<&Path>) -> Result<TrainOutput> {
    std::fs::create_dir_all(out)?;
    let mut env = cfg.env()?;
    let mut trainer = match resume {
        Some(p) => Trainer::from_checkpoint(&Checkpoint::load(p)?)?,
        None => Trainer::new(&env, &cfg.network, cfg.train.clone(), seed)?,
    };
    let log = trainer.train(&mut env, episodes.unwrap_or(cfg.train.episodes))?;
    let output = TrainOutput {
        checkpoint: out.join(CHECKPOINT_FILE),
        scores: out.join(SCORES_CSV),
        plot: out.join(SCORES_SVG),
        log,
    };
    trainer.checkpoint().save(&output.checkpoint)?;
    write_scores(&output.scores, &output.log, env.model().num_chains())?;
    let scores: Vec<f64> = output.log.iter().map(|r| r.score).collect();
    std::fs::write(&output.plot, score_curve_svg(&scores, SCORE_WINDOW))?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub steps: usize,
    pub success: bool,
    pub collision_steps: usize,
    pub unstable_steps: usize,
    /// Any collision during the rollout.
    pub cols: bool,
    pub errors: Vec<f64>,
    pub initial_score: f64,
    pub score: f64,
}

/// Noise-free rollout of the checkpointed policy in a scene drawn from `seed`.
pub fn cmd_rollout(cfg: &RunConfig, checkpoint: &Path, seed: u64, out: &Path) -> Result<RolloutSummary> {
    std::fs::create_dir_all(out)?;
    let mut env = cfg.env()?;
    let agent = load_agent(checkpoint, &env)?;
    env.reset(&mut ChaCha8Rng::seed_from_u64(seed))?;
    let (_, initial_score) = env.score();
    let scene = Scene {
        goals: env.goals().iter().map(|p| [p.x, p.y, p.z]).collect(),
        obstacles: env.obstacles().to_vec(),
    };
    let run = rollout(&agent, &mut env, 0)?;
    write_trajectory(&out.join(TRAJECTORY_CSV), &run.trajectory)?;
    write_hand_paths(&out.join(HANDS_CSV), &run.hands)?;
    write_json(&out.join(SCENE_JSON), &scene)?;
    let summary = RolloutSummary {
        steps: run.record.steps,
        success: run.record.success,
        collision_steps: run.record.collision_steps,
        unstable_steps: run.unstable_steps,
        cols: run.record.collision_steps > 0,
        errors: run.record.errors,
        initial_score,
        score: run.record.score,
    };
    write_json(&out.join(ROLLOUT_JSON), &summary)?;
    Ok(summary)
}

/// Smooths a trajectory CSV against the scene's obstacles (the config's
/// static obstacles when no scene is given) and writes the smoothed CSV,
/// the per-joint report and the overlay figure.
pub fn cmd_smooth(
    cfg: &RunConfig,
    trajectory: &Path,
    scene: Option<&Path>,
    precision: Option<f64>,
    out: &Path,
) -> Result<SmoothingOutcome> {
    let rows = read_trajectory(trajectory)?;
    let obstacles = match scene {
        Some(p) => Scene::load(p)?.obstacles,
        None => cfg.env.static_obstacles.clone(),
    };
    let model = cfg.model()?;
    let mut config = cfg.smoothing;
    if let Some(p) = precision {
        config.precision = p;
    }
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &obstacles,
        config,
    };
    let outcome = spline_fit_all(&rows, &ctx)?;
    std::fs::create_dir_all(out)?;
    write_trajectory(&out.join(SMOOTHED_CSV), &outcome.state.rows())?;
    write_smoothing_report(&out.join(REPORT_CSV), &outcome.reports)?;

    let dense = outcome.state.sample_times(config.subdivisions);
    let smoothed: Vec<Vec<f64>> = dense.iter().map(|&t| outcome.state.sample(t, None)).collect();
    let hands = |q: &[f64]| -> Result<Vec<Point3<f64>>> { model.end_effectors(q) };
    let knot_hands = rows.iter().map(|q| hands(q)).collect::<Result<Vec<_>>>()?;
    let dense_hands = smoothed.iter().map(|q| hands(q)).collect::<Result<Vec<_>>>()?;
    let smoothed_knot_hands = outcome
        .state
        .rows()
        .iter()
        .map(|q| hands(q).map(|hs| hs.iter().map(|p| [p.x, p.y, p.z]).collect()))
        .collect::<Result<Vec<Vec<[f64; 3]>>>>()?;
    write_hand_paths(&out.join(SMOOTHED_HANDS_CSV), &smoothed_knot_hands)?;

    let mut panels: Vec<Panel> = (0..outcome.state.joints())
        .map(|j| Panel {
            title: format!("joint {j}"),
            x_label: "step".into(),
            y_label: "angle (rad)".into(),
            series: vec![Series {
                label: String::new(),
                knots: rows.iter().enumerate().map(|(t, q)| (t as f64, q[j])).collect(),
                curve: dense.iter().zip(&smoothed).map(|(&t, q)| (t, q[j])).collect(),
            }],
        })
        .collect();
    panels.push(Panel {
        title: "end-effector paths".into(),
        x_label: "x (m)".into(),
        y_label: "y (m)".into(),
        series: (0..model.num_chains())
            .map(|c| Series {
                label: model.chains()[c].name.clone(),
                knots: knot_hands.iter().map(|hs| (hs[c].x, hs[c].y)).collect(),
                curve: dense_hands.iter().map(|hs| (hs[c].x, hs[c].y)).collect(),
            })
            .collect(),
    });
    std::fs::write(out.join(OVERLAY_SVG), overlay_svg(&panels, 3))?;
    Ok(outcome)
}

/// Aggregates over greedy episodes; every statistic is `None` for zero episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub episodes: usize,
    pub mean_score: Option<f64>,
    pub std_score: Option<f64>,
    pub success_rate: Option<f64>,
    /// Fraction of all steps spent in collision.
    pub collision_rate: Option<f64>,
}

impl EvalMetrics {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let n = records.len();
        if n == 0 {
            return Self {
                episodes: 0,
                mean_score: None,
                std_score: None,
                success_rate: None,
                collision_rate: None,
            };
        }
        let mean = records.iter().map(|r| r.score).sum::<f64>() / n as f64;
        let var = records.iter().map(|r| (r.score - mean).powi(2)).sum::<f64>() / n as f64;
        let steps: usize = records.iter().map(|r| r.steps).sum();
        let cols: usize = records.iter().map(|r| r.collision_steps).sum();
        Self {
            episodes: n,
            mean_score: Some(mean),
            std_score: Some(var.sqrt()),
            success_rate: Some(records.iter().filter(|r| r.success).count() as f64 / n as f64),
            collision_rate: Some(if steps == 0 { 0.0 } else { cols as f64 / steps as f64 }),
        }
    }
}

/// Greedy evaluation over `episodes` scenes, episode `i` drawn from seed
/// `seed ^ i`. Episodes run in parallel; aggregation is in episode order.
pub fn eval_agent(cfg: &RunConfig, agent: &ActorCritic, episodes: usize, seed: u64) -> Result<Vec<EpisodeRecord>> {
    let model = cfg.model()?;
    (0..episodes)
        .into_par_iter()
        .map(|i| {
            let mut env = Env::new(model.clone(), cfg.env.clone())?;
            env.reset(&mut ChaCha8Rng::seed_from_u64(seed ^ i as u64))?;
            Ok(rollout(agent, &mut env, i)?.record)
        })
        .collect()
}

pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, episodes: usize, seed: u64, out: Option<&Path>) -> Result<EvalMetrics> {
    let agent = load_agent(checkpoint, &cfg.env()?)?;
    let metrics = EvalMetrics::from_records(&eval_agent(cfg, &agent, episodes, seed)?);
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        write_json(&out.join(EVAL_JSON), &metrics)?;
    }
    Ok(metrics)
}
