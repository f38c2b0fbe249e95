//! Seeded trial execution.
//!
//! Trial `i` of an experiment with base seed `s` uses seed `s + i` (wrapping).
//! That seed generates the instance, and an independent ChaCha stream of it
//! drives the mechanism's price draws, one uniform per round whatever the
//! policy. Every policy at a given trial index therefore sees the same
//! instance and the same uniforms.

use std::time::Instant;

use procure_learn::environment::{instance_from_dataset, HEADS};
use procure_learn::idx::load_idx;
use procure_learn::mechanism::{EtaPolicy, MechanismConfig, PurchasePolicy};
use procure_learn::metrics::{
    mean_round_risk, offline_best, regret, risk, sequence_stats, OfflineBest, RiskMetric, SequenceStats,
};
use procure_learn::{
    gen_coin_sequence, gen_gamma_sequence, gen_linear_task, CostModel, DataPoint, Hypothesis, LossFamily, Mechanism,
    ProblemInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EtaSpec, Evaluation, InstanceConfig, MechanismSection};
use crate::error::{HarnessError, Result};

const MECHANISM_STREAM: u64 = 7;

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

/// Uniform draws that price each round of a trial.
pub fn price_uniforms(seed: u64) -> impl Iterator<Item = f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MECHANISM_STREAM);
    std::iter::repeat_with(move || rng.random::<f64>())
}

/// An instance source with any file input already loaded.
#[derive(Clone, Debug)]
pub enum PreparedInstance {
    Generated(InstanceConfig),
    Dataset { data: Vec<DataPoint>, radius: f64, family: LossFamily, costs: CostModel },
}

impl PreparedInstance {
    pub fn new(config: &InstanceConfig) -> Result<Self> {
        match config {
            InstanceConfig::Idx { images, labels, positive, negative, limit, radius, family, costs } => {
                let data = load_idx(images, labels, positive, negative, *limit)?;
                Ok(PreparedInstance::Dataset { data, radius: *radius, family: *family, costs: costs.clone() })
            }
            other => Ok(PreparedInstance::Generated(other.clone())),
        }
    }

    pub fn build(&self, seed: u64) -> Result<ProblemInstance> {
        let instance = match self {
            PreparedInstance::Generated(InstanceConfig::Coin { rounds, epsilon, bias }) => {
                gen_coin_sequence(*rounds, *epsilon, *bias, seed)?
            }
            PreparedInstance::Generated(InstanceConfig::Gamma { rounds, gamma, epsilon, bias }) => {
                gen_gamma_sequence(*rounds, *gamma, *epsilon, *bias, seed)?
            }
            PreparedInstance::Generated(InstanceConfig::Linear { task, costs }) => gen_linear_task(task, costs, seed)?,
            PreparedInstance::Generated(InstanceConfig::Idx { .. }) => unreachable!("dataset sources are loaded"),
            PreparedInstance::Dataset { data, radius, family, costs } => {
                instance_from_dataset(data.clone(), costs, *radius, *family, seed)?
            }
        };
        Ok(instance)
    }
}

/// One trial's instance and its offline benchmark, shared by every policy
/// and budget run on it.
#[derive(Clone, Debug)]
pub struct TrialContext {
    pub trial: usize,
    pub seed: u64,
    pub instance: ProblemInstance,
    pub offline: Option<OfflineBest>,
}

pub fn prepare_trial(
    source: &PreparedInstance,
    base_seed: u64,
    trial: usize,
    eval: &Evaluation,
) -> Result<TrialContext> {
    let seed = trial_seed(base_seed, trial);
    let instance = source.build(seed)?;
    let offline = if eval.regret {
        Some(offline_best(&instance.arrivals, &instance.space, instance.family, eval.offline_iterations)?)
    } else {
        None
    };
    Ok(TrialContext { trial, seed, instance, offline })
}

pub fn mechanism_config(section: &MechanismSection, instance: &ProblemInstance, budget: f64) -> MechanismConfig {
    let eta_policy = match section.eta {
        EtaSpec::Fixed { eta } => EtaPolicy::Fixed { eta },
        EtaSpec::Theory { c_eta } => EtaPolicy::Theory { c_eta },
        EtaSpec::FeatureScaled { scale } => {
            let norm = instance.mean_feature_norm();
            EtaPolicy::Fixed { eta: if norm > 0.0 { scale / norm } else { scale } }
        }
    };
    MechanismConfig {
        rounds: instance.rounds(),
        budget,
        payment_mode: section.payment_mode,
        policy: section.policy,
        k_policy: section.k,
        eta_policy,
        hard_stop: section.hard_stop,
        c_max: section.c_max,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub policy: PurchasePolicy,
    pub budget: f64,
    pub spend: f64,
    pub purchases: usize,
    pub regret: Option<f64>,
    pub risk_surrogate: Option<f64>,
    pub risk_zero_one: Option<f64>,
    pub round_risk_surrogate: Option<f64>,
    /// `gamma_star` is NaN when the offline benchmark was not computed.
    pub stats: SequenceStats,
    pub final_k: f64,
    pub eta: f64,
    pub offline_converged: Option<bool>,
    pub wall_time: f64,
}

/// Expected loss of a mixed prediction against the instance's coin.
fn coin_risk(h: &Hypothesis, instance: &ProblemInstance) -> Option<f64> {
    let p_heads = *instance.metadata.get("p_heads")?;
    Some(1.0 - (p_heads * h[HEADS] + (1.0 - p_heads) * h[1 - HEADS]))
}

pub fn run_trial(
    ctx: &TrialContext,
    section: &MechanismSection,
    budget: f64,
    eval: &Evaluation,
) -> Result<(TrialResult, Mechanism)> {
    let start = Instant::now();
    let inst = &ctx.instance;
    let config = mechanism_config(section, inst, budget);
    let mut mech = Mechanism::new(config, inst.space.clone(), inst.family)?;
    for (arrival, u) in inst.arrivals.iter().zip(price_uniforms(ctx.seed)) {
        mech.round(arrival, u)?;
    }
    let h_bar = mech.finalize()?;

    let regret = match &ctx.offline {
        Some(best) => Some(regret(mech.transcript(), &inst.arrivals, inst.family, &best.hypothesis)?),
        None => None,
    };
    let (risk_surrogate, risk_zero_one, round_risk_surrogate) = if inst.test_set.is_empty() {
        let rounds = if eval.round_risk {
            let posted = mech.posted_hypotheses();
            posted.iter().map(|h| coin_risk(h, inst)).sum::<Option<f64>>().map(|s| s / posted.len() as f64)
        } else {
            None
        };
        (coin_risk(&h_bar, inst), None, rounds)
    } else {
        let zero_one = match inst.test_set[0] {
            DataPoint::Labeled { .. } => Some(risk(&h_bar, &inst.test_set, inst.family, RiskMetric::ZeroOne)?),
            _ => None,
        };
        let rounds = if eval.round_risk {
            Some(mean_round_risk(mech.posted_hypotheses(), &inst.test_set, inst.family, RiskMetric::Surrogate)?)
        } else {
            None
        };
        (Some(risk(&h_bar, &inst.test_set, inst.family, RiskMetric::Surrogate)?), zero_one, rounds)
    };
    let h_star = ctx.offline.as_ref().map(|b| b.hypothesis.clone()).unwrap_or_else(|| inst.space.center());
    let mut stats = sequence_stats(&inst.arrivals, mech.posted_hypotheses(), &h_star, &inst.space, inst.family)?;
    if ctx.offline.is_none() {
        stats.gamma_star = f64::NAN;
    }

    let result = TrialResult {
        trial: ctx.trial,
        seed: ctx.seed,
        policy: section.policy,
        budget,
        spend: mech.spend(),
        purchases: mech.purchases(),
        regret,
        risk_surrogate,
        risk_zero_one,
        round_risk_surrogate,
        stats,
        final_k: mech.k(),
        eta: mech.learner().eta(),
        offline_converged: ctx.offline.as_ref().map(|b| b.converged),
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((result, mech))
}

/// Maps `f` over trial indices on `jobs` worker threads, returning results
/// in trial order.
pub fn par_trials<T, F>(trials: usize, jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(f).collect())
}

/// Sample mean and standard error; the error is 0 for a single value.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of a metric that every trial reported.
pub fn mean_se_opt(values: impl IntoIterator<Item = Option<f64>>) -> Option<(f64, f64)> {
    let v: Option<Vec<f64>> = values.into_iter().collect();
    v.filter(|v| !v.is_empty()).map(|v| mean_se(&v))
}
