//! `run`, `sweep` and `oracle`.
//!
//! Artifacts written to the output directory:
//!
//! * `run`: `transcript.csv` (trial 0, one row per round), `summary.csv` (one
//!   row per trial), `timings.csv` (wall time per trial).
//! * `sweep`: `sweep.csv` (one row per policy and budget) and
//!   `sweep_trials.csv` (one row per policy, budget and trial).
//!
//! Floats are written with 17 significant digits, missing values as empty
//! fields. Every file except `timings.csv` is a pure function of the config.

use std::fs::File;
use std::path::Path;

use procure_learn::mechanism::{PurchasePolicy, RoundRecord};
use procure_learn::metrics::{instance_stats, SequenceStats};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::harness::{mean_se, mean_se_opt, par_trials, prepare_trial, run_trial, PreparedInstance, TrialResult};

pub const TRANSCRIPT_HEADER: [&str; 9] =
    ["t", "delta", "cost", "price", "accepted", "q", "payment", "loss", "cum_spend"];

pub const SUMMARY_HEADER: [&str; 18] = [
    "trial",
    "seed",
    "policy",
    "budget",
    "spend",
    "purchases",
    "regret",
    "risk_surrogate",
    "risk_zero_one",
    "round_risk_surrogate",
    "gamma",
    "gamma_max",
    "c_bar",
    "mu",
    "gamma_star",
    "final_k",
    "eta",
    "offline_converged",
];

pub const SWEEP_HEADER: [&str; 14] = [
    "policy",
    "budget",
    "trials",
    "risk_zero_one_mean",
    "risk_zero_one_se",
    "risk_surrogate_mean",
    "risk_surrogate_se",
    "regret_mean",
    "regret_se",
    "spend_mean",
    "spend_se",
    "purchases_mean",
    "gamma_mean",
    "gamma_se",
];

pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Output(format!("{}: {e}", dir.display())))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| HarnessError::Output(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_transcript(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRANSCRIPT_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            num(r.delta),
            num(r.cost),
            num(r.price),
            r.accepted.to_string(),
            num(r.q),
            num(r.payment),
            num(r.loss),
            num(r.cum_spend),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn summary_row(r: &TrialResult) -> Vec<String> {
    vec![
        r.trial.to_string(),
        r.seed.to_string(),
        r.policy.name().to_string(),
        num(r.budget),
        num(r.spend),
        r.purchases.to_string(),
        opt(r.regret),
        opt(r.risk_surrogate),
        opt(r.risk_zero_one),
        opt(r.round_risk_surrogate),
        num(r.stats.gamma),
        num(r.stats.gamma_max),
        num(r.stats.c_bar),
        num(r.stats.mu),
        num(r.stats.gamma_star),
        num(r.final_k),
        num(r.eta),
        r.offline_converged.map(|c| c.to_string()).unwrap_or_default(),
    ]
}

pub fn write_summary(path: &Path, results: &[TrialResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in results {
        w.write_record(summary_row(r))?;
    }
    w.flush()?;
    Ok(())
}

fn write_timings(path: &Path, results: &[TrialResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["trial", "wall_time_s"])?;
    for r in results {
        w.write_record([r.trial.to_string(), format!("{:.6}", r.wall_time)])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error of one metric across trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn of(values: &[f64]) -> Self {
        let (mean, se) = mean_se(values);
        Self { mean, se }
    }

    fn of_opt(values: impl IntoIterator<Item = Option<f64>>) -> Option<Self> {
        mean_se_opt(values).map(|(mean, se)| Self { mean, se })
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6} ± {:.6}", self.mean, self.se)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub trials: usize,
    pub regret: Option<Estimate>,
    pub risk_surrogate: Option<Estimate>,
    pub risk_zero_one: Option<Estimate>,
    pub spend: Estimate,
    pub results: Vec<TrialResult>,
}

impl RunSummary {
    pub fn report(&self) -> String {
        let show = |e: &Option<Estimate>| e.map(|e| e.to_string()).unwrap_or_else(|| "n/a".into());
        format!(
            "trials: {}\nregret: {}\nrisk (surrogate): {}\nrisk (zero-one): {}\nspend: {}",
            self.trials,
            show(&self.regret),
            show(&self.risk_surrogate),
            show(&self.risk_zero_one),
            self.spend
        )
    }
}

/// Runs `config.trials` seeded trials and writes the run artifacts.
pub fn cmd_run(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunSummary> {
    config.validate()?;
    create_dir(&config.output_dir)?;
    let source = PreparedInstance::new(&config.instance)?;
    let outputs = par_trials(config.trials, jobs, |trial| {
        let ctx = prepare_trial(&source, config.seed, trial, &config.evaluate)?;
        let (result, mech) = run_trial(&ctx, &config.mechanism, config.mechanism.budget, &config.evaluate)?;
        let transcript = (trial == 0).then(|| mech.transcript().to_vec());
        Ok((result, transcript))
    })?;

    let mut results = Vec::with_capacity(outputs.len());
    for (result, transcript) in outputs {
        if let Some(records) = transcript {
            write_transcript(&config.output_dir.join("transcript.csv"), &records)?;
        }
        results.push(result);
    }
    write_summary(&config.output_dir.join("summary.csv"), &results)?;
    write_timings(&config.output_dir.join("timings.csv"), &results)?;

    Ok(RunSummary {
        trials: results.len(),
        regret: Estimate::of_opt(results.iter().map(|r| r.regret)),
        risk_surrogate: Estimate::of_opt(results.iter().map(|r| r.risk_surrogate)),
        risk_zero_one: Estimate::of_opt(results.iter().map(|r| r.risk_zero_one)),
        spend: Estimate::of(&results.iter().map(|r| r.spend).collect::<Vec<_>>()),
        results,
    })
}

pub const SWEEP_POLICIES: [PurchasePolicy; 3] =
    [PurchasePolicy::Priced, PurchasePolicy::Naive, PurchasePolicy::Baseline];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub policy: PurchasePolicy,
    pub budget: f64,
    pub trials: usize,
    pub risk_zero_one: Option<Estimate>,
    pub risk_surrogate: Option<Estimate>,
    pub regret: Option<Estimate>,
    pub spend: Estimate,
    pub purchases_mean: f64,
    pub gamma: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Per-trial results, grouped like `rows`.
    pub trials: Vec<Vec<TrialResult>>,
}

impl SweepOutput {
    pub fn row(&self, policy: PurchasePolicy, budget: f64) -> Option<(&SweepRow, &[TrialResult])> {
        let i = self.rows.iter().position(|r| r.policy == policy && r.budget == budget)?;
        Some((&self.rows[i], &self.trials[i]))
    }
}

/// Runs every policy at every budget of the grid on the same per-trial
/// instances. The baseline ignores the budget and is run once per trial.
pub fn sweep(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepOutput> {
    config.validate()?;
    let grid = match &config.budget_grid {
        Some(grid) if !grid.is_empty() => grid.clone(),
        _ => return Err(HarnessError::Config("sweep needs a nonempty budget_grid".into())),
    };
    let source = PreparedInstance::new(&config.instance)?;
    // per trial: results indexed [policy][budget]
    let per_trial = par_trials(config.trials, jobs, |trial| {
        let ctx = prepare_trial(&source, config.seed, trial, &config.evaluate)?;
        let mut by_policy = Vec::new();
        for policy in SWEEP_POLICIES {
            let section = crate::config::MechanismSection { policy, ..config.mechanism.clone() };
            let runs = if policy == PurchasePolicy::Baseline {
                let (result, _) = run_trial(&ctx, &section, grid[0], &config.evaluate)?;
                grid.iter().map(|&budget| TrialResult { budget, ..result.clone() }).collect()
            } else {
                grid.iter()
                    .map(|&b| run_trial(&ctx, &section, b, &config.evaluate).map(|(r, _)| r))
                    .collect::<Result<Vec<_>>>()?
            };
            by_policy.push(runs);
        }
        Ok(by_policy)
    })?;

    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for (p, policy) in SWEEP_POLICIES.into_iter().enumerate() {
        for (b, &budget) in grid.iter().enumerate() {
            let results: Vec<TrialResult> = per_trial.iter().map(|t| t[p][b].clone()).collect();
            rows.push(SweepRow {
                policy,
                budget,
                trials: results.len(),
                risk_zero_one: Estimate::of_opt(results.iter().map(|r| r.risk_zero_one)),
                risk_surrogate: Estimate::of_opt(results.iter().map(|r| r.risk_surrogate)),
                regret: Estimate::of_opt(results.iter().map(|r| r.regret)),
                spend: Estimate::of(&results.iter().map(|r| r.spend).collect::<Vec<_>>()),
                purchases_mean: results.iter().map(|r| r.purchases as f64).sum::<f64>() / results.len() as f64,
                gamma: Estimate::of(&results.iter().map(|r| r.stats.gamma).collect::<Vec<_>>()),
            });
            trials.push(results);
        }
    }
    Ok(SweepOutput { rows, trials })
}

pub fn cmd_sweep(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepOutput> {
    config.validate()?;
    create_dir(&config.output_dir)?;
    let out = sweep(config, jobs)?;

    let mut w = writer(&config.output_dir.join("sweep.csv"))?;
    w.write_record(SWEEP_HEADER)?;
    let pair = |e: Option<Estimate>| match e {
        Some(e) => [num(e.mean), num(e.se)],
        None => [String::new(), String::new()],
    };
    for row in &out.rows {
        let mut record = vec![row.policy.name().to_string(), num(row.budget), row.trials.to_string()];
        record.extend(pair(row.risk_zero_one));
        record.extend(pair(row.risk_surrogate));
        record.extend(pair(row.regret));
        record.extend(pair(Some(row.spend)));
        record.push(num(row.purchases_mean));
        record.extend(pair(Some(row.gamma)));
        w.write_record(record)?;
    }
    w.flush()?;

    let all: Vec<TrialResult> = out.trials.iter().flatten().cloned().collect();
    write_summary(&config.output_dir.join("sweep_trials.csv"), &all)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub rounds: usize,
    pub hypothesis: Vec<f64>,
    pub hypothesis_norm: f64,
    pub total_loss: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Statistics with every round evaluated at the offline optimum, so
    /// `gamma` and `gamma_star` coincide.
    pub stats: SequenceStats,
}

/// Offline benchmark of the trial-0 instance.
pub fn cmd_oracle(config: &ExperimentConfig) -> Result<OracleReport> {
    config.validate()?;
    let source = PreparedInstance::new(&config.instance)?;
    let eval = crate::config::Evaluation { regret: true, ..config.evaluate.clone() };
    let ctx = prepare_trial(&source, config.seed, 0, &eval)?;
    let best = ctx.offline.expect("regret evaluation computes the benchmark");
    let inst = &ctx.instance;
    let stats = instance_stats(&inst.arrivals, &best.hypothesis, &inst.space, inst.family)?;
    Ok(OracleReport {
        seed: ctx.seed,
        rounds: inst.rounds(),
        hypothesis_norm: inst.space.norm().primal(&best.hypothesis),
        hypothesis: best.hypothesis.into_inner(),
        total_loss: best.total_loss,
        converged: best.converged,
        iterations: best.iterations,
        stats,
    })
}
