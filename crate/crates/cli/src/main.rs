use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use procure_learn_cli::commands::{cmd_oracle, cmd_run, cmd_sweep};
use procure_learn_cli::verify::{law_sampler, verify, VerifyOptions};
use procure_learn_cli::{resolve_seed, ExperimentConfig, HarnessError, SEED_ENV};

#[derive(Parser)]
#[command(name = "procure-learn", version, about = "Online learning with purchased data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write transcript and summary CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare priced, naive and baseline policies over the config's budget grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the pricing law and learner invariants; prints a JSON report.
    Verify {
        /// Use 10x fewer Monte-Carlo samples.
        #[arg(long)]
        quick: bool,
    },
    /// Solve for the best fixed hypothesis in hindsight on the trial-0 instance.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, HarnessError> {
    let mut config = ExperimentConfig::load(path)?;
    let env = std::env::var(SEED_ENV).ok();
    resolve_seed(&mut config, seed, env.as_deref())?;
    Ok(config)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

fn execute(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run { config, jobs, seed } => {
            let config = load(&config, seed)?;
            let summary = cmd_run(&config, jobs)?;
            println!("{}", summary.report());
            println!("artifacts: {}", config.output_dir.display());
        }
        Command::Sweep { config, jobs, seed } => {
            let config = load(&config, seed)?;
            let out = cmd_sweep(&config, jobs)?;
            for row in &out.rows {
                let risk = row.risk_zero_one.or(row.risk_surrogate);
                println!(
                    "{:<8} B={:<10} risk={} regret={} spend={}",
                    row.policy.name(),
                    row.budget,
                    risk.map(|e| e.to_string()).unwrap_or_else(|| "n/a".into()),
                    row.regret.map(|e| e.to_string()).unwrap_or_else(|| "n/a".into()),
                    row.spend
                );
            }
            println!("artifacts: {}", config.output_dir.display());
        }
        Command::Verify { quick } => {
            let options = if quick { VerifyOptions::quick() } else { VerifyOptions::full() };
            let report = verify(options, &law_sampler);
            println!("{}", to_json(&report));
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Oracle { config, seed } => {
            let config = load(&config, seed)?;
            println!("{}", to_json(&cmd_oracle(&config)?));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
