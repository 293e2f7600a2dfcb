use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{ActorCritic, NetworkConfig, PolicyGradient, TargetUpdate};
use super::noise::NoiseSchedule;
use super::partition::ActionPartition;
use super::replay::{ReplayBuffer, Transition};
use crate::environment::Env;
use crate::error::{Error, Result};
use crate::kinematics::JointVector;
use crate::nnet::{AdamState, Checkpoint, RngState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// L2 weight penalty on the critic.
    pub critic_l2: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Defaults to 0.3 of the action bound, decaying 0.999 per episode to 0.01.
    pub noise: Option<NoiseSchedule>,
    pub gradient: PolicyGradient,
    pub target_update: TargetUpdate,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 2000,
            gamma: 0.99,
            tau: 0.001,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            critic_l2: 0.01,
            batch_size: 64,
            buffer_capacity: 45_000,
            noise: None,
            gradient: PolicyGradient::SharedAverage,
            target_update: TargetUpdate::Standard,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must be in [0, 1)".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config("tau must be in (0, 1)".into()));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(self.critic_l2 >= 0.0) {
            return Err(Error::Config("critic_l2 must be nonnegative".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::Config("buffer_capacity must hold at least one batch".into()));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    pub fn noise_for(&self, action_bound: f64) -> NoiseSchedule {
        self.noise.unwrap_or_else(|| NoiseSchedule::for_bound(action_bound))
    }
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Final distance of each end effector to its goal.
    pub errors: Vec<f64>,
    pub score: f64,
    pub steps: usize,
    /// Every goal reached at the end of the episode.
    pub success: bool,
    pub collision_steps: usize,
}

/// Training state: agent, optimizers, replay and the generator driving
/// everything stochastic, so a run is reproducible from its seed.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub agent: ActorCritic,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub config: TrainConfig,
    pub noise: NoiseSchedule,
    pub episode: usize,
    pub rng: ChaCha8Rng,
    buffer: ReplayBuffer,
}

impl Trainer {
    pub fn new(env: &Env, net: &NetworkConfig, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let partition = ActionPartition::from_model(env.model())?;
        let bound = env.config().action_bound;
        let agent = ActorCritic::new(env.state_dim(), partition, bound, net, &mut rng)?;
        Ok(Self::from_agent(agent, config, rng))
    }

    pub fn from_agent(agent: ActorCritic, config: TrainConfig, rng: ChaCha8Rng) -> Self {
        let actor_opt = AdamState::new(&agent.actor, config.actor_lr);
        let critic_opt = AdamState::new(&agent.critic, config.critic_lr);
        let noise = config.noise_for(agent.action_bound());
        Self {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            agent,
            actor_opt,
            critic_opt,
            noise,
            episode: 0,
            rng,
            config,
        }
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Critic regression, actor ascent and target tracking on one sampled batch.
    pub fn update(&mut self) -> Result<f64> {
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        let y = self.agent.compute_targets(&batch, self.config.gamma)?;
        let loss = self.agent.critic_update(
            &batch,
            y.view(),
            self.config.critic_l2,
            &mut self.critic_opt,
            &mut self.rng,
        )?;
        self.agent.actor_update(
            batch.states.view(),
            self.config.gradient,
            &mut self.actor_opt,
            &mut self.rng,
        )?;
        self.agent.update_targets(self.config.tau, self.config.target_update)?;
        Ok(loss)
    }

    /// One exploratory episode with learning after every step.
    pub fn run_episode(&mut self, env: &mut Env) -> Result<EpisodeRecord> {
        let mut state = env.reset(&mut self.rng)?;
        let bound = env.config().action_bound;
        let mut collision_steps = 0;
        loop {
            let mut action = self.agent.act(&state)?;
            let noise = self.noise.sample(self.episode, action.len(), &mut self.rng);
            for (a, n) in action.iter_mut().zip(noise) {
                *a = (*a + n).clamp(-bound, bound);
            }
            let res = env.step(&action)?;
            collision_steps += usize::from(res.flags.cols);
            self.buffer.push(Transition {
                state,
                action,
                next_state: res.next_state.clone(),
                rewards: res.rewards,
                done: res.terminal,
            });
            if self.buffer.len() >= self.config.batch_size {
                self.update()?;
            }
            state = res.next_state;
            if res.done {
                break;
            }
        }
        let (errors, score) = env.score();
        let record = EpisodeRecord {
            episode: self.episode,
            errors,
            score,
            steps: env.steps(),
            success: env.flags().all_goals(),
            collision_steps,
        };
        self.episode += 1;
        Ok(record)
    }

    pub fn train(&mut self, env: &mut Env, episodes: usize) -> Result<Vec<EpisodeRecord>> {
        (0..episodes).map(|_| self.run_episode(env)).collect()
    }
}

/// Trains for `config.episodes` episodes from `seed`.
pub fn train(env: &mut Env, net: &NetworkConfig, config: &TrainConfig, seed: u64) -> Result<(Trainer, Vec<EpisodeRecord>)> {
    let mut trainer = Trainer::new(env, net, config.clone(), seed)?;
    let log = trainer.train(env, config.episodes)?;
    Ok((trainer, log))
}

/// A greedy episode from the current scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// Joint positions, starting with the reset posture.
    pub trajectory: Vec<JointVector>,
    /// End-effector positions per step, one entry per chain.
    pub hands: Vec<Vec<[f64; 3]>>,
    pub unstable_steps: usize,
    pub record: EpisodeRecord,
}

fn hand_points(env: &Env) -> Vec<[f64; 3]> {
    env.end_effectors().iter().map(|p| [p.x, p.y, p.z]).collect()
}

/// Follows the deterministic policy from the environment's current state
/// until the episode ends.
pub fn rollout(agent: &ActorCritic, env: &mut Env, episode: usize) -> Result<Rollout> {
    let mut trajectory = vec![env.q().clone()];
    let mut hands = vec![hand_points(env)];
    let mut state = env.observe();
    let mut collision_steps = 0;
    let mut unstable_steps = 0;
    loop {
        let s = ArrayView2::from_shape((1, state.len()), &state).expect("row vector");
        let action = agent.act_batch(s)?.row(0).to_vec();
        let res = env.step(&action)?;
        collision_steps += usize::from(res.flags.cols);
        unstable_steps += usize::from(res.flags.instb);
        trajectory.push(env.q().clone());
        hands.push(hand_points(env));
        state = res.next_state;
        if res.done {
            break;
        }
    }
    let (errors, score) = env.score();
    Ok(Rollout {
        trajectory,
        hands,
        unstable_steps,
        record: EpisodeRecord {
            episode,
            errors,
            score,
            steps: env.steps(),
            success: env.flags().all_goals(),
            collision_steps,
        },
    })
}

#[derive(Serialize, Deserialize)]
struct TrainerMeta {
    partition: ActionPartition,
    state_dim: usize,
    action_bound: f64,
    episode: usize,
    config: TrainConfig,
    noise: NoiseSchedule,
}

const NET_NAMES: [&str; 4] = ["actor", "critic", "actor_target", "critic_target"];

impl Trainer {
    /// Networks, optimizer moments, generator position and episode counter.
    /// The replay buffer is not saved, so a resumed run refills it.
    pub fn checkpoint(&self) -> Checkpoint {
        let a = &self.agent;
        let nets = [&a.actor, &a.critic, &a.actor_target, &a.critic_target];
        let meta = TrainerMeta {
            partition: a.partition().clone(),
            state_dim: a.state_dim(),
            action_bound: a.action_bound(),
            episode: self.episode,
            config: self.config.clone(),
            noise: self.noise,
        };
        Checkpoint {
            networks: NET_NAMES.iter().zip(nets).map(|(n, net)| (n.to_string(), net.clone())).collect(),
            optimizers: vec![
                ("actor".into(), self.actor_opt.clone()),
                ("critic".into(), self.critic_opt.clone()),
            ],
            rng: Some(RngState::capture(&self.rng)),
            meta: serde_json::to_value(meta).expect("plain data serializes"),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let meta: TrainerMeta =
            serde_json::from_value(ck.meta.clone()).map_err(|e| Error::Checkpoint(format!("trainer metadata: {e}")))?;
        meta.config.validate()?;
        let nets = NET_NAMES
            .iter()
            .map(|n| ck.network(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        let nets: [_; 4] = nets.try_into().expect("four names");
        let agent = ActorCritic::from_parts(nets, meta.partition, meta.state_dim, meta.action_bound)?;
        let rng = ck
            .rng
            .as_ref()
            .ok_or_else(|| Error::Checkpoint("no generator state".into()))?
            .restore()?;
        let mut t = Self::from_agent(agent, meta.config, rng);
        t.actor_opt = ck.optimizer("actor")?.clone();
        t.critic_opt = ck.optimizer("critic")?.clone();
        t.noise = meta.noise;
        t.episode = meta.episode;
        Ok(t)
    }
}
