//! End-to-end acceptance checks, run by a plain `main` so that the PASS/FAIL
//! report shows up in `cargo test` output. Each check prints its line and then
//! asserts; a failed assertion is counted and the process exits nonzero.
//!
//! `cargo test --test acceptance -- 06` runs only the checks whose name
//! contains `06`.

use std::panic::catch_unwind;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use procure_learn::mechanism::{EtaPolicy, KPolicy, MechanismConfig, PaymentMode, PriorKnowledge, PurchasePolicy};
use procure_learn::metrics::regret;
use procure_learn::{gen_coin_sequence, gen_linear_task, Bias, CostModel, LinearTask, Mechanism, PricingQuote};
use procure_learn_cli::commands::{cmd_run, sweep};
use procure_learn_cli::config::{EtaSpec, Evaluation, ExperimentConfig, InstanceConfig, MechanismSection};
use procure_learn_cli::harness::{mean_se, par_trials, prepare_trial, run_trial, PreparedInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("{status} [{id}] {name}: {detail}");
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn no_regret_eval() -> Evaluation {
    Evaluation { regret: false, round_risk: false, offline_iterations: 0 }
}

// Survival of the price law written out directly.
fn survival_oracle(delta: f64, k: f64, c: f64) -> f64 {
    if c == 0.0 {
        1.0
    } else {
        (delta / (k * c.sqrt())).min(1.0)
    }
}

fn criterion_01_pricing_law_fidelity() {
    const SAMPLES: usize = 200_000;
    const TOL: f64 = 0.005;
    let grid = [0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for delta in [0.1, 0.5, 1.0] {
        for k in [0.5, 2.0, 4.0] {
            let quote = PricingQuote::new(delta, k, 1.0).unwrap();
            let prices: Vec<f64> = (0..SAMPLES).map(|_| quote.sample(rng.random())).collect();
            for c in grid {
                let empirical = prices.iter().filter(|&&p| p >= c).count() as f64 / SAMPLES as f64;
                worst = worst.max((empirical - survival_oracle(delta, k, c)).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = worst <= TOL && within(elapsed, 5);
    report(1, "pricing-law fidelity", passed, &format!("max |error| {worst:.5} (tol {TOL}), {elapsed:.2?}"));
    assert!(passed);
}

fn criterion_02_expected_payment() {
    const SAMPLES: usize = 200_000;
    const SIGMAS: f64 = 3.0;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_z: f64 = 0.0;
    for (delta, k) in [(0.1, 0.5), (0.5, 2.0), (1.0, 4.0)] {
        for c in [0.0, 0.3, 0.8] {
            let quote = PricingQuote::new(delta, k, 1.0).unwrap();
            let payments: Vec<f64> = (0..SAMPLES)
                .map(|_| {
                    let p = quote.sample(rng.random());
                    if p >= c {
                        p
                    } else {
                        0.0
                    }
                })
                .collect();
            let (mean, se) = mean_se(&payments);
            let reserve = (delta / k).powi(2);
            let expected = (delta / k) * (2.0 - f64::max(c, reserve).sqrt());
            worst_z = worst_z.max((mean - expected).abs() / se);
        }
    }
    let elapsed = start.elapsed();
    let passed = worst_z <= SIGMAS && within(elapsed, 5);
    report(2, "expected payment", passed, &format!("max |z| {worst_z:.2} (tol {SIGMAS}), {elapsed:.2?}"));
    assert!(passed);
}

fn criterion_03_full_information_bound() {
    let start = Instant::now();
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for seed in 0..50u64 {
        let (instance, eta, beta) = if seed % 2 == 0 {
            let rounds = 2000;
            let inst = gen_coin_sequence(rounds, 0.1, Bias::Heads, seed).unwrap();
            (inst, (2f64.ln() / (2.0 * rounds as f64)).sqrt(), 2f64.ln())
        } else {
            let task = LinearTask { rounds: 1000, test_size: 10, ..LinearTask::default() };
            let inst = gen_linear_task(&task, &CostModel::Constant { cost: 0.0 }, seed).unwrap();
            let eta = 0.1 / inst.mean_feature_norm();
            (inst, eta, task.radius * task.radius / 2.0)
        };
        let config = MechanismConfig {
            rounds: instance.rounds(),
            budget: 1.0,
            payment_mode: PaymentMode::PostedPrice,
            policy: PurchasePolicy::Baseline,
            k_policy: KPolicy::Fixed { k: 1.0 },
            eta_policy: EtaPolicy::Fixed { eta },
            hard_stop: false,
            c_max: 1.0,
        };
        let mut mech = Mechanism::new(config, instance.space.clone(), instance.family).unwrap();
        for a in &instance.arrivals {
            mech.round(a, 0.5).unwrap();
        }
        let best = procure_learn::offline_best(&instance.arrivals, &instance.space, instance.family, 20_000).unwrap();
        let realized = regret(mech.transcript(), &instance.arrivals, instance.family, &best.hypothesis).unwrap();
        let sum_sq: f64 = mech.transcript().iter().map(|r| r.delta * r.delta).sum();
        let bound = beta / eta + 2.0 * eta * sum_sq;
        if realized > bound {
            violations += 1;
        }
        tightest = tightest.max(realized / bound);
    }
    let elapsed = start.elapsed();
    let passed = violations == 0 && within(elapsed, 30);
    report(
        3,
        "full-information regret bound",
        passed,
        &format!("{violations} of 50 runs over the bound, max regret/bound {tightest:.3}, {elapsed:.2?}"),
    );
    assert!(passed);
}

fn criterion_04_budget_compliance() {
    let budget = 200.0;
    let start = Instant::now();
    let out_dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        instance: InstanceConfig::Gamma { rounds: 10_000, gamma: 0.3, epsilon: 0.1, bias: Bias::Heads },
        mechanism: MechanismSection {
            policy: PurchasePolicy::Priced,
            payment_mode: PaymentMode::PostedPrice,
            budget,
            k: KPolicy::FromKnowledge { knowledge: PriorKnowledge::GammaAndMax { gamma: 0.3, gamma_max: 0.3 } },
            eta: EtaSpec::Theory { c_eta: 1.0 },
            hard_stop: false,
            c_max: 1.0,
        },
        trials: 100,
        seed: 40,
        output_dir: out_dir.path().to_path_buf(),
        budget_grid: None,
        evaluate: no_regret_eval(),
    };
    let summary = cmd_run(&config, None).unwrap();
    let elapsed = start.elapsed();
    let mean = summary.spend.mean;
    let passed = mean <= 1.05 * budget && within(elapsed, 60);
    report(
        4,
        "budget compliance",
        passed,
        &format!("mean spend {mean:.2} vs limit {:.2}, {elapsed:.2?}", 1.05 * budget),
    );
    assert!(passed);
}

fn criterion_05_no_data_no_regret_scaling() {
    const ROUNDS: usize = 20_000;
    const TRIALS: usize = 200;
    let start = Instant::now();
    let budgets = [100.0, 400.0, 1600.0];
    let mut means = Vec::new();
    for &budget in &budgets {
        let epsilon = 1.0 / f64::sqrt(budget);
        let config = ExperimentConfig {
            instance: InstanceConfig::Coin { rounds: ROUNDS, epsilon, bias: Bias::Heads },
            mechanism: MechanismSection {
                policy: PurchasePolicy::Priced,
                payment_mode: PaymentMode::AtCost,
                budget,
                k: KPolicy::FromKnowledge { knowledge: PriorKnowledge::Gamma { gamma: 1.0 } },
                eta: EtaSpec::Theory { c_eta: 1.0 },
                hard_stop: false,
                c_max: 1.0,
            },
            trials: TRIALS,
            seed: 50,
            ..ExperimentConfig::default()
        };
        let source = PreparedInstance::new(&config.instance).unwrap();
        let eval = Evaluation { regret: true, ..no_regret_eval() };
        let regrets = par_trials(TRIALS, None, |trial| {
            let ctx = prepare_trial(&source, config.seed, trial, &eval)?;
            Ok(run_trial(&ctx, &config.mechanism, budget, &eval)?.0.regret.unwrap())
        })
        .unwrap();
        means.push(mean_se(&regrets).0);
    }
    let ratios: Vec<f64> = means.windows(2).map(|w| w[0] / w[1]).collect();
    let elapsed = start.elapsed();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let in_band = ratios.iter().all(|r| (1.3..=3.0).contains(r));
    let passed = decreasing && in_band && within(elapsed, 600);
    report(
        5,
        "no data, no regret scaling",
        passed,
        &format!("mean regret {means:.2?} at B {budgets:?}, ratios {ratios:.3?} (band [1.3, 3.0]), {elapsed:.2?}"),
    );
    assert!(passed);
}

fn criterion_06_correlation_sensitivity() {
    const TRIALS: usize = 100;
    let start = Instant::now();
    let task = LinearTask::default();
    let models = [
        CostModel::TwoPointCorrelated { p_high: 0.2, high_cost: 1.0, target_groups: vec![0, 1] },
        CostModel::TwoPointIndependent { p_high: 0.2, high_cost: 1.0 },
    ];
    let sources: Vec<PreparedInstance> = models
        .iter()
        .map(|costs| {
            PreparedInstance::new(&InstanceConfig::Linear { task: task.clone(), costs: costs.clone() }).unwrap()
        })
        .collect();
    let priced = MechanismSection { payment_mode: PaymentMode::AtCost, ..MechanismSection::default() };
    let naive = MechanismSection { policy: PurchasePolicy::Naive, ..MechanismSection::default() };
    let eval = no_regret_eval();
    // per trial: [model] -> (priced risk, naive risk, priced gamma)
    let per_trial = par_trials(TRIALS, None, |trial| {
        let mut out = Vec::new();
        for source in &sources {
            let ctx = prepare_trial(source, 60, trial, &eval)?;
            let budget = 0.25 * ctx.instance.total_cost();
            let (p, _) = run_trial(&ctx, &priced, budget, &eval)?;
            let (n, _) = run_trial(&ctx, &naive, budget, &eval)?;
            out.push((p.risk_zero_one.unwrap(), n.risk_zero_one.unwrap(), p.stats.gamma));
        }
        Ok(out)
    })
    .unwrap();
    let paired = |f: fn(&(f64, f64, f64)) -> f64| -> (f64, f64) {
        mean_se(&per_trial.iter().map(|t| f(&t[0]) - f(&t[1])).collect::<Vec<_>>())
    };
    let gamma_corr = mean_se(&per_trial.iter().map(|t| t[0].2).collect::<Vec<_>>()).0;
    let gamma_ind = mean_se(&per_trial.iter().map(|t| t[1].2).collect::<Vec<_>>()).0;
    let (priced_diff, priced_se) = paired(|x| x.0);
    let (naive_diff, naive_se) = paired(|x| x.1);
    let elapsed = start.elapsed();
    let gamma_ok = gamma_corr >= 1.5 * gamma_ind;
    let priced_ok = priced_diff > 3.0 * priced_se;
    let naive_ok = naive_diff.abs() <= 2.0 * naive_se;
    let passed = gamma_ok && priced_ok && naive_ok && within(elapsed, 600);
    report(
        6,
        "correlation sensitivity",
        passed,
        &format!(
            "gamma {gamma_corr:.4} vs {gamma_ind:.4}; priced risk diff {priced_diff:.5} ± {priced_se:.5}; \
             naive risk diff {naive_diff:.5} ± {naive_se:.5}; {elapsed:.2?}"
        ),
    );
    assert!(passed);
}

fn criterion_07_priced_beats_naive() {
    let start = Instant::now();
    let budgets = vec![100.0, 200.0, 400.0];
    let config = ExperimentConfig {
        instance: InstanceConfig::Linear {
            task: LinearTask { rounds: 8000, ..LinearTask::default() },
            costs: CostModel::IndependentUniform { lo: 0.0, hi: 1.0 },
        },
        trials: 100,
        seed: 70,
        budget_grid: Some(budgets.clone()),
        evaluate: no_regret_eval(),
        ..ExperimentConfig::default()
    };
    let out = sweep(&config, None).unwrap();
    let mut lines = Vec::new();
    let mut all_ok = true;
    for &b in &budgets {
        let priced = out.row(PurchasePolicy::Priced, b).unwrap().0.risk_zero_one.unwrap().mean;
        let naive = out.row(PurchasePolicy::Naive, b).unwrap().0.risk_zero_one.unwrap().mean;
        all_ok &= priced <= naive;
        lines.push(format!("B={b}: {priced:.4} vs {naive:.4}"));
    }
    let elapsed = start.elapsed();
    let passed = all_ok && within(elapsed, 600);
    report(7, "priced vs naive", passed, &format!("{}; {elapsed:.2?}", lines.join(", ")));
    assert!(passed);
}

fn criterion_08_online_to_batch() {
    let start = Instant::now();
    let eval = Evaluation { regret: false, round_risk: true, offline_iterations: 0 };
    let task = LinearTask { rounds: 2000, test_size: 500, ..LinearTask::default() };
    let mut runs = 0;
    let mut violations = 0;
    for costs in [
        CostModel::IndependentUniform { lo: 0.0, hi: 1.0 },
        CostModel::TwoPointIndependent { p_high: 0.2, high_cost: 1.0 },
    ] {
        let source = PreparedInstance::new(&InstanceConfig::Linear { task: task.clone(), costs }).unwrap();
        for trial in 0..8 {
            let ctx = prepare_trial(&source, 80, trial, &eval).unwrap();
            for policy in [PurchasePolicy::Priced, PurchasePolicy::Naive, PurchasePolicy::Baseline] {
                for payment_mode in [PaymentMode::PostedPrice, PaymentMode::AtCost] {
                    let section = MechanismSection { policy, payment_mode, ..MechanismSection::default() };
                    let (r, _) = run_trial(&ctx, &section, 60.0, &eval).unwrap();
                    runs += 1;
                    if r.risk_surrogate.unwrap() > r.round_risk_surrogate.unwrap() {
                        violations += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = violations == 0;
    report(8, "online-to-batch inequality", passed, &format!("{violations} of {runs} runs violate, {elapsed:.2?}"));
    assert!(passed);
}

fn criterion_09_determinism() {
    let start = Instant::now();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let config_for = |dir: PathBuf| ExperimentConfig {
        instance: InstanceConfig::Linear {
            task: LinearTask { rounds: 1500, test_size: 300, ..LinearTask::default() },
            costs: CostModel::IndependentUniform { lo: 0.0, hi: 1.0 },
        },
        trials: 4,
        seed: 90,
        output_dir: dir,
        ..ExperimentConfig::default()
    };
    // different worker counts must not change the output
    cmd_run(&config_for(dirs[0].path().to_path_buf()), Some(1)).unwrap();
    cmd_run(&config_for(dirs[1].path().to_path_buf()), Some(3)).unwrap();
    let mut mismatched = Vec::new();
    for file in ["transcript.csv", "summary.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        if a != b || a.is_empty() {
            mismatched.push(file);
        }
    }
    let elapsed = start.elapsed();
    let passed = mismatched.is_empty();
    report(9, "determinism", passed, &format!("mismatched files {mismatched:?}, {elapsed:.2?}"));
    assert!(passed);
}

fn criterion_10_mnist_replication() {
    let Some(dir) = std::env::var_os("PROCURE_LEARN_MNIST_DIR").map(PathBuf::from) else {
        println!("SKIPPED [10] mnist replication: set PROCURE_LEARN_MNIST_DIR to a directory with the IDX files");
        return;
    };
    let start = Instant::now();
    let instance = InstanceConfig::Idx {
        images: dir.join("train-images-idx3-ubyte"),
        labels: dir.join("train-labels-idx1-ubyte"),
        positive: vec![9, 8],
        negative: vec![1, 4],
        limit: None,
        radius: 10.0,
        family: procure_learn::LossFamily::Hinge,
        costs: CostModel::IndependentUniform { lo: 0.0, hi: 1.0 },
    };
    let budgets = vec![100.0, 400.0, 1600.0];
    let config = ExperimentConfig {
        instance,
        trials: 5,
        seed: 100,
        budget_grid: Some(budgets.clone()),
        evaluate: no_regret_eval(),
        ..ExperimentConfig::default()
    };
    let source = PreparedInstance::new(&config.instance).unwrap();
    let rounds = source.build(config.seed).unwrap().rounds();
    let out = sweep(&config, None).unwrap();
    let risk = |p, b| out.row(p, b).unwrap().0.risk_zero_one.unwrap().mean;
    let ordered = budgets.iter().all(|&b| {
        risk(PurchasePolicy::Baseline, b) <= risk(PurchasePolicy::Priced, b)
            && risk(PurchasePolicy::Priced, b) <= risk(PurchasePolicy::Naive, b)
    });
    let passed = rounds == 8503 && ordered;
    report(
        10,
        "mnist replication",
        passed,
        &format!("train size {rounds} (expected 8503), ordering holds: {ordered}, {:.2?}", start.elapsed()),
    );
    assert!(passed);
}

fn main() -> ExitCode {
    let checks: [(&str, fn()); 10] = [
        ("criterion_01_pricing_law_fidelity", criterion_01_pricing_law_fidelity),
        ("criterion_02_expected_payment", criterion_02_expected_payment),
        ("criterion_03_full_information_bound", criterion_03_full_information_bound),
        ("criterion_04_budget_compliance", criterion_04_budget_compliance),
        ("criterion_05_no_data_no_regret_scaling", criterion_05_no_data_no_regret_scaling),
        ("criterion_06_correlation_sensitivity", criterion_06_correlation_sensitivity),
        ("criterion_07_priced_beats_naive", criterion_07_priced_beats_naive),
        ("criterion_08_online_to_batch", criterion_08_online_to_batch),
        ("criterion_09_determinism", criterion_09_determinism),
        ("criterion_10_mnist_replication", criterion_10_mnist_replication),
    ];
    // libtest flags such as --nocapture are accepted and ignored
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        if catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} checks failed {failed:?}", failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
