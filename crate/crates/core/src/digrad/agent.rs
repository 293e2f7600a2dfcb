use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::partition::ActionPartition;
use super::replay::Batch;
use crate::error::{Error, Result};
use crate::nnet::{add_l2_grad, l2_penalty, AdamState, Gradients, Init, LayerSpec, Mode, Network, Trace};

/// Layer sizes and regularizers shared by actor and critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Pre-activation widths of the hidden layers.
    pub hidden: Vec<usize>,
    /// Dropout keep probability after each hidden activation; 1 disables dropout.
    pub keep: f64,
    /// Batch-norm on the actor input and every actor hidden layer.
    pub actor_batchnorm: bool,
    /// Batch-norm on the first critic hidden layer.
    pub critic_batchnorm: bool,
    /// Uniform range of both output layers' initial weights.
    pub final_init: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64],
            keep: 0.8,
            actor_batchnorm: true,
            critic_batchnorm: true,
            final_init: 3e-3,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be a nonempty list of positive sizes".into()));
        }
        if !(self.keep > 0.0 && self.keep <= 1.0) {
            return Err(Error::Config("dropout keep probability must be in (0, 1]".into()));
        }
        if !(self.final_init > 0.0) {
            return Err(Error::Config("final_init must be positive".into()));
        }
        Ok(())
    }

    pub fn actor_specs(&self, action_dim: usize) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        if self.actor_batchnorm {
            specs.push(LayerSpec::BatchNorm);
        }
        for &w in &self.hidden {
            specs.push(LayerSpec::Dense {
                width: w,
                init: Init::FanIn,
            });
            if self.actor_batchnorm {
                specs.push(LayerSpec::BatchNorm);
            }
            specs.push(LayerSpec::Crelu);
            if self.keep < 1.0 {
                specs.push(LayerSpec::Dropout { keep: self.keep });
            }
        }
        specs.push(LayerSpec::Dense {
            width: action_dim,
            init: Init::Uniform(self.final_init),
        });
        specs.push(LayerSpec::Tanh);
        specs
    }

    pub fn critic_specs(&self, heads: usize) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        for (i, &w) in self.hidden.iter().enumerate() {
            specs.push(LayerSpec::Dense {
                width: w,
                init: Init::FanIn,
            });
            if i == 0 && self.critic_batchnorm {
                specs.push(LayerSpec::BatchNorm);
            }
            specs.push(LayerSpec::Crelu);
            if self.keep < 1.0 {
                specs.push(LayerSpec::Dropout { keep: self.keep });
            }
        }
        specs.push(LayerSpec::Dense {
            width: heads,
            init: Init::Uniform(self.final_init),
        });
        specs
    }
}

/// Which actor gradient to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyGradient {
    /// Every slot receives the sum of `dQ_i/da` over the tasks that use it.
    Summed,
    /// Shared slots receive the task average instead of the sum.
    SharedAverage,
}

/// Target-network blending rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetUpdate {
    /// `target <- (1 - tau) target + tau online`.
    Standard,
    /// `target <- tau target + (1 - tau) online`.
    Printed,
}

/// Blends `online` into `target`, including batch-norm running statistics.
pub fn soft_update(online: &Network, target: &mut Network, tau: f64, form: TargetUpdate) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("tau {tau} not in [0, 1]")));
    }
    let mut src = Vec::new();
    online.visit_state(|p| src.push(p.to_vec()));
    let mut shapes_ok = true;
    let mut i = 0;
    target.visit_state(|p| {
        shapes_ok &= src.get(i).is_some_and(|s| s.len() == p.len());
        i += 1;
    });
    if !shapes_ok || i != src.len() {
        return Err(Error::Dimension {
            context: "soft update parameter groups",
            expected: src.len(),
            actual: i,
        });
    }
    let (keep, take) = match form {
        TargetUpdate::Standard => (1.0 - tau, tau),
        TargetUpdate::Printed => (tau, 1.0 - tau),
    };
    let mut i = 0;
    target.visit_state_mut(|p| {
        for (t, &o) in p.iter_mut().zip(&src[i]) {
            *t = keep * *t + take * o;
        }
        i += 1;
    });
    Ok(())
}

/// Compound actor, multi-head critic and their target copies.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Network,
    pub critic: Network,
    pub actor_target: Network,
    pub critic_target: Network,
    partition: ActionPartition,
    state_dim: usize,
    action_bound: f64,
}

/// Result of one critic regression step.
#[derive(Debug, Clone)]
pub struct CriticStep {
    pub loss: f64,
    pub grads: Gradients,
    pub trace: Trace,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        partition: ActionPartition,
        action_bound: f64,
        cfg: &NetworkConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(action_bound > 0.0) {
            return Err(Error::Config("action bound must be positive".into()));
        }
        let n = partition.dim();
        let k = partition.num_tasks();
        let actor = Network::new(state_dim, &cfg.actor_specs(n), rng)?;
        let critic = Network::new(state_dim + n + k, &cfg.critic_specs(k), rng)?;
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            partition,
            state_dim,
            action_bound,
        })
    }

    /// Reassembles an agent from stored networks.
    pub fn from_parts(
        nets: [Network; 4],
        partition: ActionPartition,
        state_dim: usize,
        action_bound: f64,
    ) -> Result<Self> {
        let [actor, critic, actor_target, critic_target] = nets;
        let n = partition.dim();
        let k = partition.num_tasks();
        for (net, inp, out) in [
            (&actor, state_dim, n),
            (&actor_target, state_dim, n),
            (&critic, state_dim + n + k, k),
            (&critic_target, state_dim + n + k, k),
        ] {
            if net.input_dim() != inp || net.output_dim() != out {
                return Err(Error::Dimension {
                    context: "stored network shape",
                    expected: inp,
                    actual: net.input_dim(),
                });
            }
        }
        Ok(Self {
            actor,
            critic,
            actor_target,
            critic_target,
            partition,
            state_dim,
            action_bound,
        })
    }

    pub fn partition(&self) -> &ActionPartition {
        &self.partition
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn num_tasks(&self) -> usize {
        self.partition.num_tasks()
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    fn check_states(&self, s: ArrayView2<f64>) -> Result<()> {
        if s.ncols() != self.state_dim {
            return Err(Error::Dimension {
                context: "state layout",
                expected: self.state_dim,
                actual: s.ncols(),
            });
        }
        Ok(())
    }

    /// Greedy compound actions from the online actor, one row per state.
    pub fn act_batch(&self, s: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_states(s)?;
        Ok(self.actor.predict(s) * self.action_bound)
    }

    pub fn act(&self, s: &[f64]) -> Result<Vec<f64>> {
        let s = ArrayView2::from_shape((1, s.len()), s).expect("row vector");
        Ok(self.act_batch(s)?.row(0).to_vec())
    }

    /// Critic input rows for task `task`: state, action with slots outside
    /// the task zeroed, task one-hot.
    pub fn critic_input(&self, s: ArrayView2<f64>, a: ArrayView2<f64>, task: usize) -> Result<Array2<f64>> {
        self.partition.check_task(task)?;
        self.check_states(s)?;
        let (sd, n, k) = (self.state_dim, self.action_dim(), self.num_tasks());
        if a.ncols() != n || a.nrows() != s.nrows() {
            return Err(Error::Dimension {
                context: "action batch",
                expected: n,
                actual: a.ncols(),
            });
        }
        let mut x = Array2::zeros((s.nrows(), sd + n + k));
        x.slice_mut(s![.., ..sd]).assign(&s);
        for &j in self.partition.task(task) {
            x.column_mut(sd + j).assign(&a.column(j));
        }
        x.column_mut(sd + n + task).fill(1.0);
        Ok(x)
    }

    /// All tasks stacked task-major: rows `i*B..(i+1)*B` belong to task `i`.
    fn stacked_input(&self, s: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<Array2<f64>> {
        let blocks = (0..self.num_tasks())
            .map(|i| self.critic_input(s, a, i))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        Ok(ndarray::concatenate(Axis(0), &views).expect("equal widths"))
    }

    /// Picks head `i` from block `i` of a stacked critic output.
    fn own_heads(&self, out: &Array2<f64>, rows: usize) -> Array2<f64> {
        let k = self.num_tasks();
        Array2::from_shape_fn((rows, k), |(b, i)| out[[i * rows + b, i]])
    }

    /// `Q_i(s, a_i)` for every task, using a deterministic evaluation of `critic`.
    pub fn q_values_with(&self, critic: &Network, s: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<Array2<f64>> {
        let x = self.stacked_input(s, a)?;
        Ok(self.own_heads(&critic.predict(x.view()), s.nrows()))
    }

    pub fn q_values(&self, s: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.q_values_with(&self.critic, s, a)
    }

    /// Bootstrapped regression targets, one column per task.
    pub fn compute_targets(&self, batch: &Batch, gamma: f64) -> Result<Array2<f64>> {
        if batch.is_empty() {
            return Err(Error::EmptyReplay {
                requested: 1,
                available: 0,
            });
        }
        let next_a = self.actor_target.predict(batch.next_states.view()) * self.action_bound;
        let q_next = self.q_values_with(&self.critic_target, batch.next_states.view(), next_a.view())?;
        let mut y = batch.rewards.clone();
        for b in 0..batch.len() {
            let live = 1.0 - batch.done[b];
            for i in 0..self.num_tasks() {
                y[[b, i]] += gamma * live * q_next[[b, i]];
            }
        }
        Ok(y)
    }

    /// Loss `mean_b sum_i (Q_i - y_i)^2 + l2 * |W|^2` and its gradient, with
    /// the critic in training mode. Does not modify the critic.
    pub fn critic_loss_grad<R: Rng + ?Sized>(
        &self,
        batch: &Batch,
        targets: ArrayView2<f64>,
        l2: f64,
        rng: &mut R,
    ) -> Result<CriticStep> {
        let rows = batch.len();
        let k = self.num_tasks();
        if targets.dim() != (rows, k) {
            return Err(Error::Dimension {
                context: "critic targets",
                expected: rows * k,
                actual: targets.len(),
            });
        }
        let x = self.stacked_input(batch.states.view(), batch.actions.view())?;
        let trace = self.critic.forward(x.view(), Mode::Train, rng)?;
        let mut d_out = Array2::zeros(trace.output.dim());
        let mut loss = 0.0;
        for i in 0..k {
            for b in 0..rows {
                let r = trace.output[[i * rows + b, i]] - targets[[b, i]];
                loss += r * r;
                d_out[[i * rows + b, i]] = 2.0 * r / rows as f64;
            }
        }
        loss /= rows as f64;
        let (_, grads) = self.critic.backward(&trace, d_out.view(), true);
        let mut grads = grads.expect("requested");
        add_l2_grad(&self.critic, l2, &mut grads);
        loss += l2_penalty(&self.critic, l2);
        Ok(CriticStep { loss, grads, trace })
    }

    /// One optimizer step on the critic; returns the loss before the step.
    pub fn critic_update<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch,
        targets: ArrayView2<f64>,
        l2: f64,
        adam: &mut AdamState,
        rng: &mut R,
    ) -> Result<f64> {
        let step = self.critic_loss_grad(batch, targets, l2, rng)?;
        self.critic.commit_stats(&step.trace);
        adam.step(&mut self.critic, &step.grads)?;
        Ok(step.loss)
    }

    /// Action-space gradient of `J = mean_b sum_i Q_i(s, a_i)` under `rule`,
    /// evaluated at compound actions `a` with the critic frozen.
    pub fn action_gradient(&self, s: ArrayView2<f64>, a: ArrayView2<f64>, rule: PolicyGradient) -> Result<Array2<f64>> {
        let rows = s.nrows();
        let (sd, n, k) = (self.state_dim, self.action_dim(), self.num_tasks());
        let x = self.stacked_input(s, a)?;
        let trace = self.critic.forward_eval(x.view())?;
        let mut d_out = Array2::zeros(trace.output.dim());
        for i in 0..k {
            d_out.slice_mut(s![i * rows..(i + 1) * rows, i]).fill(1.0 / rows as f64);
        }
        let (dx, _) = self.critic.backward(&trace, d_out.view(), false);
        let mut g = Array2::zeros((rows, n));
        for i in 0..k {
            let block = dx.slice(s![i * rows..(i + 1) * rows, sd..sd + n]);
            for &j in self.partition.task(i) {
                let mut col = g.column_mut(j);
                col += &block.column(j);
            }
        }
        if rule == PolicyGradient::SharedAverage {
            let inv = 1.0 / k as f64;
            for &j in self.partition.shared() {
                g.column_mut(j).mapv_inplace(|v| v * inv);
            }
        }
        Ok(g)
    }

    /// Ascent direction for the actor parameters together with the actor's
    /// training-mode trace. Reads states only; rewards reach the actor
    /// solely through the critic.
    pub fn actor_gradient<R: Rng + ?Sized>(
        &self,
        s: ArrayView2<f64>,
        rule: PolicyGradient,
        rng: &mut R,
    ) -> Result<(Gradients, Trace)> {
        self.check_states(s)?;
        let trace = self.actor.forward(s, Mode::Train, rng)?;
        let a = &trace.output * self.action_bound;
        let g = self.action_gradient(s, a.view(), rule)?;
        let (_, grads) = self.actor.backward(&trace, (g * self.action_bound).view(), true);
        Ok((grads.expect("requested"), trace))
    }

    /// One ascent step on the actor along `rule`.
    pub fn actor_update<R: Rng + ?Sized>(
        &mut self,
        s: ArrayView2<f64>,
        rule: PolicyGradient,
        adam: &mut AdamState,
        rng: &mut R,
    ) -> Result<()> {
        let (mut grads, trace) = self.actor_gradient(s, rule, rng)?;
        grads.scale(-1.0);
        self.actor.commit_stats(&trace);
        adam.step(&mut self.actor, &grads)
    }

    pub fn update_targets(&mut self, tau: f64, form: TargetUpdate) -> Result<()> {
        soft_update(&self.actor, &mut self.actor_target, tau, form)?;
        soft_update(&self.critic, &mut self.critic_target, tau, form)
    }
}
