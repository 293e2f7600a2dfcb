use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use crate::error::{Error, Result};

/// Bias-corrected Adam moments for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Network, lr: f64) -> Self {
        let mut m = Vec::new();
        net.visit_params(|p| m.push(vec![0.0; p.len()]));
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    fn check_shapes(&self, grads: &Gradients) -> Result<()> {
        if grads.parts.len() != self.m.len() {
            return Err(Error::Dimension {
                context: "adam parameter groups",
                expected: self.m.len(),
                actual: grads.parts.len(),
            });
        }
        for (m, g) in self.m.iter().zip(&grads.parts) {
            if m.len() != g.len() {
                return Err(Error::Dimension {
                    context: "adam parameter group",
                    expected: m.len(),
                    actual: g.len(),
                });
            }
        }
        Ok(())
    }

    /// One descent step: `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        self.check_shapes(grads)?;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let mut idx = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        net.visit_params_mut(|p| {
            let (m, v, g) = (&mut ms[idx], &mut vs[idx], &grads.parts[idx]);
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
            idx += 1;
        });
        Ok(())
    }
}
