use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight initialization for dense layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in `±1/sqrt(fan_in)`, weights and biases.
    FanIn,
    /// Uniform in `±a`.
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { width: usize, init: Init },
    /// Concatenated ReLU; doubles the width.
    Crelu,
    BatchNorm,
    /// Inverted dropout with keep probability `keep`.
    Dropout { keep: f64 },
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense {
        /// `fan_in x fan_out`; rows of the input batch are multiplied on the left.
        w: Array2<f64>,
        b: Array1<f64>,
    },
    Crelu,
    BatchNorm {
        gamma: Array1<f64>,
        beta: Array1<f64>,
        running_mean: Array1<f64>,
        running_var: Array1<f64>,
    },
    Dropout {
        keep: f64,
    },
    Tanh,
}

/// Per-layer values saved by a forward pass for the backward pass.
#[derive(Debug, Clone)]
enum Saved {
    Dense { input: Array2<f64> },
    Crelu { input: Array2<f64> },
    BatchNorm { xhat: Array2<f64>, inv_std: Array1<f64>, batch_stats: Option<(Array1<f64>, Array1<f64>)> },
    Dropout { scale: Option<Array2<f64>> },
    Tanh { output: Array2<f64> },
}

/// Record of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    saved: Vec<Saved>,
    mode: Mode,
    pub output: Array2<f64>,
}

impl Trace {
    /// Signs of every CReLU input; differs between two passes only if a kink was crossed.
    pub fn kink_signature(&self) -> Vec<bool> {
        self.saved
            .iter()
            .filter_map(|s| match s {
                Saved::Crelu { input } => Some(input.iter().map(|&v| v > 0.0).collect::<Vec<_>>()),
                _ => None,
            })
            .flatten()
            .collect()
    }
}

/// Gradients aligned with [`Network::visit_params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub parts: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        let mut parts = Vec::new();
        net.visit_params(|p| parts.push(vec![0.0; p.len()]));
        Self { parts }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for p in &mut self.parts {
            for x in p.iter_mut() {
                *x *= c;
            }
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.parts.iter().flatten().copied().collect()
    }
}

fn into_flat(a: Array2<f64>) -> Vec<f64> {
    if a.is_standard_layout() {
        a.into_raw_vec_and_offset().0
    } else {
        a.iter().copied().collect()
    }
}

/// Feed-forward network over row batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    output_dim: usize,
    specs: Vec<LayerSpec>,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let mut width = input_dim;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let layer = match *spec {
                LayerSpec::Dense { width: out, init } => {
                    if out == 0 {
                        return Err(Error::Config("dense layer width must be positive".into()));
                    }
                    let a = match init {
                        Init::FanIn => 1.0 / (width as f64).sqrt(),
                        Init::Uniform(a) => a,
                    };
                    let w = Array2::from_shape_fn((width, out), |_| rng.random_range(-a..=a));
                    let b = Array1::from_shape_fn(out, |_| rng.random_range(-a..=a));
                    width = out;
                    Layer::Dense { w, b }
                }
                LayerSpec::Crelu => {
                    width *= 2;
                    Layer::Crelu
                }
                LayerSpec::BatchNorm => Layer::BatchNorm {
                    gamma: Array1::ones(width),
                    beta: Array1::zeros(width),
                    running_mean: Array1::zeros(width),
                    running_var: Array1::ones(width),
                },
                LayerSpec::Dropout { keep } => {
                    if !(keep > 0.0 && keep <= 1.0) {
                        return Err(Error::Config(format!("dropout keep probability {keep} not in (0, 1]")));
                    }
                    Layer::Dropout { keep }
                }
                LayerSpec::Tanh => Layer::Tanh,
            };
            layers.push(layer);
        }
        Ok(Self {
            input_dim,
            output_dim: width,
            specs: specs.to_vec(),
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Trainable parameters in a fixed order: dense weights then bias, batch-norm scale then shift.
    pub fn visit_params<F: FnMut(&[f64])>(&self, mut f: F) {
        for layer in &self.layers {
            match layer {
                Layer::Dense { w, b } => {
                    f(w.as_slice().expect("standard layout"));
                    f(b.as_slice().expect("standard layout"));
                }
                Layer::BatchNorm { gamma, beta, .. } => {
                    f(gamma.as_slice().expect("standard layout"));
                    f(beta.as_slice().expect("standard layout"));
                }
                _ => {}
            }
        }
    }

    pub fn visit_params_mut<F: FnMut(&mut [f64])>(&mut self, mut f: F) {
        for layer in &mut self.layers {
            match layer {
                Layer::Dense { w, b } => {
                    f(w.as_slice_mut().expect("standard layout"));
                    f(b.as_slice_mut().expect("standard layout"));
                }
                Layer::BatchNorm { gamma, beta, .. } => {
                    f(gamma.as_slice_mut().expect("standard layout"));
                    f(beta.as_slice_mut().expect("standard layout"));
                }
                _ => {}
            }
        }
    }

    /// Every stored array: trainable parameters followed, per batch-norm
    /// layer, by running mean and variance. Used for target tracking and
    /// checkpoints.
    pub fn visit_state<F: FnMut(&[f64])>(&self, mut f: F) {
        self.visit_params(&mut f);
        for layer in &self.layers {
            if let Layer::BatchNorm { running_mean, running_var, .. } = layer {
                f(running_mean.as_slice().expect("standard layout"));
                f(running_var.as_slice().expect("standard layout"));
            }
        }
    }

    pub fn visit_state_mut<F: FnMut(&mut [f64])>(&mut self, mut f: F) {
        self.visit_params_mut(&mut f);
        for layer in &mut self.layers {
            if let Layer::BatchNorm { running_mean, running_var, .. } = layer {
                f(running_mean.as_slice_mut().expect("standard layout"));
                f(running_var.as_slice_mut().expect("standard layout"));
            }
        }
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit_params(|p| n += p.len());
        n
    }

    /// Deterministic inference with running statistics and no dropout.
    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.to_owned();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense { w, b } => h.dot(w) + b,
                Layer::Crelu => crelu(h.view()),
                Layer::BatchNorm {
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                } => {
                    let inv = running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                    let scale = gamma * &inv;
                    let shift = beta - &(running_mean * &scale);
                    h * &scale + &shift
                }
                Layer::Dropout { .. } => h,
                Layer::Tanh => h.mapv_into(f64::tanh),
            };
        }
        h
    }

    /// Forward pass that keeps what the backward pass needs. In training
    /// mode batch-norm uses batch statistics and dropout draws masks from
    /// `rng`; running statistics are only updated by [`Network::commit_stats`].
    pub fn forward<R: Rng + ?Sized>(&self, x: ArrayView2<f64>, mode: Mode, rng: &mut R) -> Result<Trace> {
        if x.ncols() != self.input_dim {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.input_dim,
                actual: x.ncols(),
            });
        }
        let n = x.nrows();
        let mut saved = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense { w, b } => {
                    let y = h.dot(w) + b;
                    saved.push(Saved::Dense { input: h });
                    y
                }
                Layer::Crelu => {
                    let y = crelu(h.view());
                    saved.push(Saved::Crelu { input: h });
                    y
                }
                Layer::BatchNorm {
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                } => {
                    let (mean, var, stats) = match mode {
                        Mode::Train => {
                            if n < 2 {
                                return Err(Error::BatchTooSmall(n));
                            }
                            let mean = h.mean_axis(Axis(0)).expect("nonempty batch");
                            let var = h.var_axis(Axis(0), 0.0);
                            (mean.clone(), var.clone(), Some((mean, var)))
                        }
                        Mode::Eval => (running_mean.clone(), running_var.clone(), None),
                    };
                    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                    let xhat = (h - &mean) * &inv_std;
                    let y = &xhat * gamma + beta;
                    saved.push(Saved::BatchNorm {
                        xhat,
                        inv_std,
                        batch_stats: stats,
                    });
                    y
                }
                Layer::Dropout { keep } => match mode {
                    Mode::Train if *keep < 1.0 => {
                        let keep = *keep;
                        let scale = Array2::from_shape_fn(h.dim(), |_| {
                            if rng.random::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        });
                        let y = &h * &scale;
                        saved.push(Saved::Dropout { scale: Some(scale) });
                        y
                    }
                    _ => {
                        saved.push(Saved::Dropout { scale: None });
                        h
                    }
                },
                Layer::Tanh => {
                    let y = h.mapv_into(f64::tanh);
                    saved.push(Saved::Tanh { output: y.clone() });
                    y
                }
            };
        }
        Ok(Trace {
            saved,
            mode,
            output: h,
        })
    }

    /// Evaluation-mode forward pass that keeps a trace for backpropagation.
    pub fn forward_eval(&self, x: ArrayView2<f64>) -> Result<Trace> {
        // Evaluation mode never draws from the generator.
        self.forward(x, Mode::Eval, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))
    }

    /// Folds the batch statistics of a training-mode trace into the running estimates.
    pub fn commit_stats(&mut self, trace: &Trace) {
        let mut saved = trace.saved.iter();
        for layer in &mut self.layers {
            let s = saved.next().expect("trace matches network");
            if let (
                Layer::BatchNorm {
                    running_mean,
                    running_var,
                    ..
                },
                Saved::BatchNorm {
                    batch_stats: Some((mean, var)),
                    ..
                },
            ) = (layer, s)
            {
                running_mean.zip_mut_with(mean, |r, &m| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * m);
                running_var.zip_mut_with(var, |r, &v| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * v);
            }
        }
    }

    /// Backpropagates `d_output` (same shape as the trace output). Returns the
    /// input gradient and, if requested, the parameter gradients.
    pub fn backward(&self, trace: &Trace, d_output: ArrayView2<f64>, want_params: bool) -> (Array2<f64>, Option<Gradients>) {
        let mut grads: Vec<Vec<f64>> = Vec::new();
        let mut dy = d_output.to_owned();
        for (layer, saved) in self.layers.iter().zip(&trace.saved).rev() {
            dy = match (layer, saved) {
                (Layer::Dense { w, .. }, Saved::Dense { input }) => {
                    if want_params {
                        let db = dy.sum_axis(Axis(0));
                        let dw = input.t().dot(&dy);
                        grads.push(db.to_vec());
                        grads.push(into_flat(dw));
                    }
                    dy.dot(&w.t())
                }
                (Layer::Crelu, Saved::Crelu { input }) => {
                    let width = input.ncols();
                    let pos = dy.slice(s![.., ..width]);
                    let neg = dy.slice(s![.., width..]);
                    let mut dx = Array2::zeros(input.dim());
                    Zip::from(&mut dx).and(input).and(&pos).and(&neg).for_each(|d, &x, &p, &q| {
                        *d = if x > 0.0 {
                            p
                        } else if x < 0.0 {
                            -q
                        } else {
                            0.0
                        };
                    });
                    dx
                }
                (Layer::BatchNorm { gamma, .. }, Saved::BatchNorm { xhat, inv_std, .. }) => {
                    if want_params {
                        let dbeta = dy.sum_axis(Axis(0));
                        let dgamma = (&dy * xhat).sum_axis(Axis(0));
                        grads.push(dbeta.to_vec());
                        grads.push(dgamma.to_vec());
                    }
                    let dxhat = &dy * gamma;
                    match trace.mode {
                        Mode::Eval => dxhat * inv_std,
                        Mode::Train => {
                            let n = dy.nrows() as f64;
                            let sum_d = dxhat.sum_axis(Axis(0));
                            let sum_dx = (&dxhat * xhat).sum_axis(Axis(0));
                            let mut dx = dxhat * n - &sum_d - &(xhat * &sum_dx);
                            dx *= &(inv_std / n);
                            dx
                        }
                    }
                }
                (Layer::Dropout { .. }, Saved::Dropout { scale }) => match scale {
                    Some(m) => dy * m,
                    None => dy,
                },
                (Layer::Tanh, Saved::Tanh { output }) => {
                    Zip::from(&mut dy).and(output).for_each(|d, &y| *d *= 1.0 - y * y);
                    dy
                }
                _ => unreachable!("trace does not match network"),
            };
        }
        let grads = want_params.then(|| {
            grads.reverse();
            Gradients { parts: grads }
        });
        (dy, grads)
    }
}

/// `[max(x, 0), max(-x, 0)]` along the feature axis.
pub fn crelu(x: ArrayView2<f64>) -> Array2<f64> {
    let pos = x.mapv(|v| v.max(0.0));
    let neg = x.mapv(|v| (-v).max(0.0));
    concatenate(Axis(1), &[pos.view(), neg.view()]).expect("matching rows")
}

/// Adds the gradient of `lambda * sum(W^2)` over dense weights (not biases or
/// batch-norm parameters) to `grads`.
pub fn add_l2_grad(net: &Network, lambda: f64, grads: &mut Gradients) {
    if lambda == 0.0 {
        return;
    }
    let mut idx = 0;
    for layer in net.layers() {
        match layer {
            Layer::Dense { w, .. } => {
                for (g, &v) in grads.parts[idx].iter_mut().zip(w.iter()) {
                    *g += 2.0 * lambda * v;
                }
                idx += 2;
            }
            Layer::BatchNorm { .. } => idx += 2,
            _ => {}
        }
    }
}

/// The L2 contribution alone, shaped like the network's gradients.
pub fn l2_penalty_grad(net: &Network, lambda: f64) -> Gradients {
    let mut g = Gradients::zeros_like(net);
    add_l2_grad(net, lambda, &mut g);
    g
}

pub fn l2_penalty(net: &Network, lambda: f64) -> f64 {
    net.layers()
        .iter()
        .map(|l| match l {
            Layer::Dense { w, .. } => lambda * w.iter().map(|v| v * v).sum::<f64>(),
            _ => 0.0,
        })
        .sum()
}
