use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian exploration noise whose deviation decays geometrically per episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSchedule {
    pub sigma0: f64,
    pub decay: f64,
    pub sigma_min: f64,
}

impl NoiseSchedule {
    pub fn for_bound(action_bound: f64) -> Self {
        Self {
            sigma0: 0.3 * action_bound,
            decay: 0.999,
            sigma_min: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= self.sigma_min && self.sigma_min >= 0.0) {
            return Err(Error::Config("noise requires sigma0 >= sigma_min >= 0".into()));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config("noise decay must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn sigma(&self, episode: usize) -> f64 {
        let e = i32::try_from(episode).unwrap_or(i32::MAX);
        (self.sigma0 * self.decay.powi(e)).max(self.sigma_min)
    }

    pub fn sample<R: Rng + ?Sized>(&self, episode: usize, dim: usize, rng: &mut R) -> Vec<f64> {
        let sigma = self.sigma(episode);
        if sigma == 0.0 {
            return vec![0.0; dim];
        }
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        (0..dim).map(|_| normal.sample(rng)).collect()
    }
}
