use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::digrad::{NetworkConfig, TrainConfig};
use crate::environment::{Env, EnvConfig};
use crate::error::{Error, Result};
use crate::kinematics::{planar_dual_arm, RobotModel, RobotSpec};
use crate::smoothing::SmoothingConfig;

/// Everything one run needs, read from a single TOML file with the sections
/// `[robot]`, `[env]`, `[network]`, `[train]` and `[smoothing]`. A missing
/// section falls back to the planar dual-arm testbed defaults; a present
/// `[robot]` or `[env]` section must be complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "planar_dual_arm")]
    pub robot: RobotSpec,
    #[serde(default = "EnvConfig::planar")]
    pub env: EnvConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub smoothing: SmoothingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            robot: planar_dual_arm(),
            env: EnvConfig::planar(),
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            smoothing: SmoothingConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        RobotModel::from_spec(&self.robot)?;
        self.env.validate()?;
        self.network.validate()?;
        self.train.validate()?;
        self.smoothing.validate()
    }

    pub fn model(&self) -> Result<Arc<RobotModel>> {
        Ok(Arc::new(RobotModel::from_spec(&self.robot)?))
    }

    pub fn env(&self) -> Result<Env> {
        Env::new(self.model()?, self.env.clone())
    }
}
