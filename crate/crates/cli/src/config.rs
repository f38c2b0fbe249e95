//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` is a valid config: a priced,
//! posted-price mechanism with an adaptive `K` on a 30-dimensional
//! synthetic task with uniform costs, budget 200, one trial, seed 0,
//! artifacts in `./out`.

use std::path::{Path, PathBuf};

use procure_learn::idx::{DEFAULT_NEGATIVE, DEFAULT_POSITIVE};
use procure_learn::mechanism::{KPolicy, PaymentMode, PurchasePolicy};
use procure_learn::{Bias, CostModel, LinearTask, LossFamily};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub mechanism: MechanismSection,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Budgets for `sweep`; ignored by `run`.
    pub budget_grid: Option<Vec<f64>>,
    pub evaluate: Evaluation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: InstanceConfig::default(),
            mechanism: MechanismSection::default(),
            trials: 1,
            seed: 0,
            output_dir: PathBuf::from("out"),
            budget_grid: None,
            evaluate: Evaluation::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if let Some(grid) = &self.budget_grid {
            if let Some(b) = grid.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
                return Err(HarnessError::Config(format!("budget grid entry {b} is not positive")));
            }
        }
        if !(self.mechanism.budget > 0.0 && self.mechanism.budget.is_finite()) {
            return Err(HarnessError::Config(format!("budget must be positive, got {}", self.mechanism.budget)));
        }
        match self.mechanism.eta {
            EtaSpec::Fixed { eta: v } | EtaSpec::Theory { c_eta: v } | EtaSpec::FeatureScaled { scale: v }
                if !(v > 0.0 && v.is_finite()) =>
            {
                Err(HarnessError::Config(format!("learning-rate parameter must be positive, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

fn default_rounds() -> usize {
    10_000
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_bias() -> Bias {
    Bias::Heads
}

fn default_gamma() -> f64 {
    0.3
}

fn default_radius() -> f64 {
    10.0
}

fn default_family() -> LossFamily {
    LossFamily::Hinge
}

fn default_costs() -> CostModel {
    CostModel::IndependentUniform { lo: 0.0, hi: 1.0 }
}

fn default_positive() -> Vec<u8> {
    DEFAULT_POSITIVE.to_vec()
}

fn default_negative() -> Vec<u8> {
    DEFAULT_NEGATIVE.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Unit-cost coin flips with heads probability `½ ± ε`.
    Coin {
        #[serde(default = "default_rounds")]
        rounds: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_bias")]
        bias: Bias,
    },
    /// Free null points followed by `γT` unit-cost coin flips.
    Gamma {
        #[serde(default = "default_rounds")]
        rounds: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_bias")]
        bias: Bias,
    },
    Linear {
        #[serde(default)]
        task: LinearTask,
        #[serde(default = "default_costs")]
        costs: CostModel,
    },
    /// IDX image and label files, split in half at random.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default = "default_positive")]
        positive: Vec<u8>,
        #[serde(default = "default_negative")]
        negative: Vec<u8>,
        #[serde(default)]
        limit: Option<usize>,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_family")]
        family: LossFamily,
        #[serde(default = "default_costs")]
        costs: CostModel,
    },
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig::Linear { task: LinearTask::default(), costs: default_costs() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaSpec {
    Fixed {
        eta: f64,
    },
    /// `η = c_η √β / max{√T, K√B}`.
    Theory {
        c_eta: f64,
    },
    /// `η = scale / (mean feature norm)`, falling back to `scale` when the
    /// instance has no feature vectors.
    FeatureScaled {
        scale: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismSection {
    pub policy: PurchasePolicy,
    pub payment_mode: PaymentMode,
    pub budget: f64,
    pub k: KPolicy,
    pub eta: EtaSpec,
    pub hard_stop: bool,
    pub c_max: f64,
}

impl Default for MechanismSection {
    fn default() -> Self {
        Self {
            policy: PurchasePolicy::Priced,
            payment_mode: PaymentMode::PostedPrice,
            budget: 200.0,
            k: KPolicy::Adaptive,
            eta: EtaSpec::FeatureScaled { scale: 0.1 },
            hard_stop: false,
            c_max: 1.0,
        }
    }
}

/// Which per-trial metrics to compute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluation {
    /// Regret needs the offline benchmark, which is the slowest step on
    /// large continuous instances.
    pub regret: bool,
    /// Mean test risk of the per-round hypotheses.
    pub round_risk: bool,
    pub offline_iterations: usize,
}

impl Default for Evaluation {
    fn default() -> Self {
        Self { regret: true, round_risk: false, offline_iterations: 20_000 }
    }
}
