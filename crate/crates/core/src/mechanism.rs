//! The posted-price purchasing mechanism, its budget ledger and `K`/`η`
//! policies, hypothesis averaging, and the naive and unlimited comparison
//! mechanisms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ftrl::Learner;
use crate::loss::{eval_gradient, eval_loss, Arrival, LossFamily};
use crate::pricing::PricingQuote;
use crate::space::{Hypothesis, HypothesisSpace};

/// Largest `K` the burn-rate rule will produce.
pub const MAX_ADAPTIVE_K: f64 = 1e6;
/// Remaining-budget floor for the burn-rate rule, as a fraction of `B`.
pub const BUDGET_FLOOR_FRACTION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaymentMode {
    /// The agent is paid the posted price.
    PostedPrice,
    /// The agent is paid only its cost. Naive purchases always pay the
    /// posted price.
    AtCost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PurchasePolicy {
    /// Randomized posted prices with importance weighting.
    Priced,
    /// Offer `c_max` to everyone until the budget cannot cover another
    /// purchase.
    Naive,
    /// Obtain every point for free; the no-budget reference.
    Baseline,
}

impl PurchasePolicy {
    pub fn name(self) -> &'static str {
        match self {
            PurchasePolicy::Priced => "priced",
            PurchasePolicy::Naive => "naive",
            PurchasePolicy::Baseline => "baseline",
        }
    }
}

/// Prior knowledge about the instance used to pick `K`. All values lie in
/// `[0, 1]` for unit maximum cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorKnowledge {
    /// `γ = (1/T) Σ Δ_t √c_t` and `γ^max = (1/T) Σ Δ_t`.
    GammaAndMax {
        gamma: f64,
        gamma_max: f64,
    },
    Gamma {
        gamma: f64,
    },
    /// `c̄ = (1/T) Σ √c_t`.
    RootCostMean {
        c_bar: f64,
    },
    /// `μ = (1/T) Σ c_t`.
    CostMean {
        mu: f64,
    },
}

impl PriorKnowledge {
    fn values(&self) -> Vec<f64> {
        match *self {
            PriorKnowledge::GammaAndMax { gamma, gamma_max } => vec![gamma, gamma_max],
            PriorKnowledge::Gamma { gamma } => vec![gamma],
            PriorKnowledge::RootCostMean { c_bar } => vec![c_bar],
            PriorKnowledge::CostMean { mu } => vec![mu],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KPolicy {
    Fixed {
        k: f64,
    },
    FromKnowledge {
        knowledge: PriorKnowledge,
    },
    /// Start at `K = 0` and re-estimate from the burn rate after every round.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EtaPolicy {
    Fixed {
        eta: f64,
    },
    /// `η = c_η √β / max{√T, K√B}` with the initial `K`.
    Theory {
        c_eta: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub rounds: usize,
    pub budget: f64,
    pub payment_mode: PaymentMode,
    pub policy: PurchasePolicy,
    pub k_policy: KPolicy,
    pub eta_policy: EtaPolicy,
    /// Stop buying once realized spend reaches the budget.
    pub hard_stop: bool,
    pub c_max: f64,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("a run needs at least one round"));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(Error::config(format!("budget must be positive, got {}", self.budget)));
        }
        if !(self.c_max > 0.0 && self.c_max.is_finite()) {
            return Err(Error::config(format!("maximum cost must be positive, got {}", self.c_max)));
        }
        match self.k_policy {
            KPolicy::Fixed { k } if !(k >= 0.0 && k.is_finite()) => {
                return Err(Error::config(format!("K must be nonnegative, got {k}")));
            }
            KPolicy::FromKnowledge { knowledge } if knowledge.values().iter().any(|v| !(0.0..=1.0).contains(v)) => {
                return Err(Error::config(format!("prior knowledge out of [0, 1]: {knowledge:?}")));
            }
            _ => {}
        }
        match self.eta_policy {
            EtaPolicy::Fixed { eta } if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::config(format!("learning rate must be positive, got {eta}")))
            }
            EtaPolicy::Theory { c_eta } if !(c_eta > 0.0 && c_eta.is_finite()) => {
                Err(Error::config(format!("c_eta must be positive, got {c_eta}")))
            }
            _ => Ok(()),
        }
    }

    /// `K` in force before the first round.
    pub fn initial_k(&self) -> Result<f64> {
        match self.k_policy {
            KPolicy::Fixed { k } => Ok(k),
            KPolicy::FromKnowledge { knowledge } => {
                choose_k(&knowledge, self.rounds, self.budget, self.payment_mode, self.c_max)
            }
            KPolicy::Adaptive => Ok(0.0),
        }
    }

    pub fn resolve_eta(&self, beta: f64) -> Result<f64> {
        match self.eta_policy {
            EtaPolicy::Fixed { eta } => Ok(eta),
            EtaPolicy::Theory { c_eta } => Ok(choose_eta(self.initial_k()?, self.rounds, self.budget, beta, c_eta)),
        }
    }
}

/// Normalization constant that keeps expected spend within `B`.
///
/// Posted-price payment uses `K_min = (T/B)(2√c_max·γ^max − γ)` when both
/// statistics are known; with less knowledge it substitutes the upper bounds
/// `γ^max ≤ 1` and `γ ≥ 0`. At-cost payment uses `(T/B)·g` with `g` the best
/// known upper bound on `γ` (`γ`, `c̄`, or `√μ`).
pub fn choose_k(knowledge: &PriorKnowledge, rounds: usize, budget: f64, mode: PaymentMode, c_max: f64) -> Result<f64> {
    if budget.is_nan() || budget <= 0.0 {
        return Err(Error::config(format!("budget must be positive, got {budget}")));
    }
    if knowledge.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::config(format!("prior knowledge out of [0, 1]: {knowledge:?}")));
    }
    let scale = rounds as f64 / budget;
    let root_max = c_max.sqrt();
    let k = match (mode, *knowledge) {
        (PaymentMode::AtCost, PriorKnowledge::GammaAndMax { gamma, .. } | PriorKnowledge::Gamma { gamma }) => {
            scale * gamma
        }
        (PaymentMode::AtCost, PriorKnowledge::RootCostMean { c_bar }) => scale * c_bar,
        (PaymentMode::AtCost, PriorKnowledge::CostMean { mu }) => scale * mu.sqrt(),
        (PaymentMode::PostedPrice, PriorKnowledge::GammaAndMax { gamma, gamma_max }) => {
            scale * (2.0 * root_max * gamma_max - gamma)
        }
        (PaymentMode::PostedPrice, PriorKnowledge::Gamma { gamma }) => scale * (2.0 * root_max - gamma),
        (PaymentMode::PostedPrice, PriorKnowledge::RootCostMean { .. } | PriorKnowledge::CostMean { .. }) => {
            scale * 2.0 * root_max
        }
    };
    Ok(k.max(0.0))
}

/// `η = c_η √β / max{√T, K√B}`.
pub fn choose_eta(k: f64, rounds: usize, budget: f64, beta: f64, c_eta: f64) -> f64 {
    let scale = (rounds as f64).sqrt().max(k * budget.sqrt());
    c_eta * beta.sqrt() / scale
}

/// Burn-rate rule `K = γ̂ · T̂ / B̂` with `T̂` rounds and `B̂` budget left.
pub fn adaptive_k(gamma_hat: f64, remaining_rounds: usize, remaining_budget: f64, budget: f64) -> f64 {
    let floor = BUDGET_FLOOR_FRACTION * budget;
    let k = gamma_hat * remaining_rounds as f64 / remaining_budget.max(floor);
    k.min(MAX_ADAPTIVE_K)
}

/// One row of the audit transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub delta: f64,
    pub cost: f64,
    pub price: f64,
    pub accepted: bool,
    /// Probability the round's price law accepts this cost.
    pub q: f64,
    pub payment: f64,
    /// Loss of the posted hypothesis on this round's point, bought or not.
    pub loss: f64,
    pub cum_spend: f64,
}

/// One run of a purchasing mechanism over a fixed number of rounds.
#[derive(Clone, Debug)]
pub struct Mechanism {
    config: MechanismConfig,
    family: LossFamily,
    learner: Learner,
    spend: f64,
    purchases: usize,
    k: f64,
    /// Σ over purchases of Δ√c/q.
    gamma_sum: f64,
    hypothesis_sum: Vec<f64>,
    posted: Vec<Hypothesis>,
    transcript: Vec<RoundRecord>,
}

impl Mechanism {
    pub fn new(config: MechanismConfig, space: HypothesisSpace, family: LossFamily) -> Result<Self> {
        config.validate()?;
        let k = config.initial_k()?;
        let eta = config.resolve_eta(space.beta())?;
        let dim = space.dim();
        let learner = Learner::for_space(space, eta)?;
        Ok(Self {
            family,
            learner,
            spend: 0.0,
            purchases: 0,
            k,
            gamma_sum: 0.0,
            hypothesis_sum: vec![0.0; dim],
            posted: Vec::with_capacity(config.rounds),
            transcript: Vec::with_capacity(config.rounds),
            config,
        })
    }

    pub fn config(&self) -> &MechanismConfig {
        &self.config
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn elapsed(&self) -> usize {
        self.transcript.len()
    }

    pub fn spend(&self) -> f64 {
        self.spend
    }

    pub fn purchases(&self) -> usize {
        self.purchases
    }

    /// `K` that will price the next round.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn transcript(&self) -> &[RoundRecord] {
        &self.transcript
    }

    pub fn posted_hypotheses(&self) -> &[Hypothesis] {
        &self.posted
    }

    pub fn hypothesis_sum(&self) -> &[f64] {
        &self.hypothesis_sum
    }

    fn budget_exhausted(&self) -> bool {
        self.config.hard_stop && self.spend >= self.config.budget
    }

    /// Plays one round against `arrival`, using the uniform draw `u ∈ [0, 1)`
    /// for the price.
    pub fn round(&mut self, arrival: &Arrival, u: f64) -> Result<&RoundRecord> {
        let t = self.elapsed();
        if t >= self.config.rounds {
            return Err(Error::SequenceOverflow { rounds: self.config.rounds });
        }
        let c_max = self.config.c_max;
        let cost = arrival.cost;
        if !(0.0..=c_max).contains(&cost) {
            return Err(Error::input(format!("cost {cost} outside [0, {c_max}]")));
        }

        let h = self.learner.post().clone();
        let loss = eval_loss(self.family, &h, &arrival.data)?;
        let gradient = eval_gradient(self.family, &h, &arrival.data)?;
        let delta = self.learner.space().norm().dual(&gradient);

        // A deterministic price p accepts cost c with probability 1{p ≥ c}.
        let fixed = |price: f64| (price, if price >= cost { 1.0 } else { 0.0 });
        // Out of budget the mechanism posts no offer at all (recorded as
        // price 0), so not even free points are acquired.
        let withdrawn = (0.0, 0.0);
        let (price, q) = match self.config.policy {
            PurchasePolicy::Baseline => (c_max, 1.0),
            PurchasePolicy::Naive => {
                if self.spend + c_max <= self.config.budget {
                    fixed(c_max)
                } else {
                    withdrawn
                }
            }
            PurchasePolicy::Priced => {
                if self.budget_exhausted() {
                    withdrawn
                } else if delta == 0.0 {
                    fixed(0.0)
                } else {
                    let quote = PricingQuote::new(delta, self.k, c_max)?;
                    (quote.sample(u), quote.survival(cost))
                }
            }
        };
        let accepted = q > 0.0 && price >= cost;

        let payment = match (self.config.policy, accepted) {
            (PurchasePolicy::Baseline, _) | (_, false) => 0.0,
            // Naive buys at its posted price whatever the payment mode.
            (PurchasePolicy::Naive, true) => price,
            (PurchasePolicy::Priced, true) => match self.config.payment_mode {
                PaymentMode::PostedPrice => price,
                PaymentMode::AtCost => cost,
            },
        };

        if accepted {
            if q <= 0.0 {
                return Err(Error::Numeric(format!("accepted round {t} has observation probability {q}")));
            }
            // Only the priced mechanism reweights; the others treat what they
            // buy as a plain sample.
            let weight = if self.config.policy == PurchasePolicy::Priced { q } else { 1.0 };
            self.learner.feed_importance_weighted(weight, true, &gradient, delta)?;
            self.purchases += 1;
            self.gamma_sum += delta * cost.sqrt() / q;
        } else {
            self.learner.feed_importance_weighted(q, false, &gradient, delta)?;
        }
        self.spend += payment;

        for (acc, x) in self.hypothesis_sum.iter_mut().zip(h.iter()) {
            *acc += x;
        }
        self.posted.push(h);
        self.transcript.push(RoundRecord { t, delta, cost, price, accepted, q, payment, loss, cum_spend: self.spend });

        if self.config.policy == PurchasePolicy::Priced && self.config.k_policy == KPolicy::Adaptive {
            self.k = self.adapt_k();
        }
        Ok(self.transcript.last().expect("just pushed"))
    }

    /// `γ̂ = (1/t) Σ_{purchased} Δ_s √c_s / q_s`, clipped to `[0, 1]`; 0 before
    /// the first round.
    pub fn gamma_estimate(&self) -> f64 {
        let t = self.elapsed();
        if t == 0 {
            return 0.0;
        }
        (self.gamma_sum / t as f64).clamp(0.0, 1.0)
    }

    /// `K` for the next round under the burn-rate rule.
    pub fn adapt_k(&self) -> f64 {
        let t = self.elapsed();
        if t == 0 {
            return 0.0;
        }
        adaptive_k(self.gamma_estimate(), self.config.rounds - t, self.config.budget - self.spend, self.config.budget)
    }

    /// Average of the posted hypotheses; only defined once every round has
    /// been played.
    pub fn finalize(&self) -> Result<Hypothesis> {
        let elapsed = self.elapsed();
        if elapsed < self.config.rounds {
            return Err(Error::IncompleteRun { elapsed, rounds: self.config.rounds });
        }
        let n = elapsed as f64;
        let mean: Vec<f64> = self.hypothesis_sum.iter().map(|x| x / n).collect();
        Ok(self.learner.space().project(&mean))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::DataPoint;

    fn config(policy: PurchasePolicy, mode: PaymentMode, k: f64, rounds: usize, budget: f64) -> MechanismConfig {
        MechanismConfig {
            rounds,
            budget,
            payment_mode: mode,
            policy,
            k_policy: KPolicy::Fixed { k },
            eta_policy: EtaPolicy::Fixed { eta: 0.1 },
            hard_stop: false,
            c_max: 1.0,
        }
    }

    fn coin_mechanism(cfg: MechanismConfig) -> Mechanism {
        Mechanism::new(cfg, HypothesisSpace::simplex(2).unwrap(), LossFamily::LinearSimplex).unwrap()
    }

    fn heads(cost: f64) -> Arrival {
        Arrival { cost, data: DataPoint::Outcome { index: 0 } }
    }

    #[test]
    fn choose_k_examples() {
        let k = choose_k(&PriorKnowledge::Gamma { gamma: 0.3 }, 1000, 100.0, PaymentMode::AtCost, 1.0).unwrap();
        assert!((k - 3.0).abs() < 1e-12);
        let both = PriorKnowledge::GammaAndMax { gamma: 0.3, gamma_max: 0.5 };
        let k = choose_k(&both, 1000, 100.0, PaymentMode::PostedPrice, 1.0).unwrap();
        assert!((k - 7.0).abs() < 1e-12);
        // huge budgets drive K to the buy-everything regime
        let k = choose_k(&both, 1000, 1e12, PaymentMode::PostedPrice, 1.0).unwrap();
        assert!(k < 1e-8);

        let k = choose_k(&PriorKnowledge::Gamma { gamma: 0.3 }, 1000, 100.0, PaymentMode::PostedPrice, 1.0).unwrap();
        assert!((k - 17.0).abs() < 1e-12);
        let k = choose_k(&PriorKnowledge::CostMean { mu: 0.25 }, 1000, 100.0, PaymentMode::PostedPrice, 1.0).unwrap();
        assert!((k - 20.0).abs() < 1e-12);
        let k = choose_k(&PriorKnowledge::CostMean { mu: 0.25 }, 1000, 100.0, PaymentMode::AtCost, 1.0).unwrap();
        assert!((k - 5.0).abs() < 1e-12);
        let k = choose_k(&PriorKnowledge::RootCostMean { c_bar: 0.4 }, 1000, 100.0, PaymentMode::AtCost, 1.0).unwrap();
        assert!((k - 4.0).abs() < 1e-12);

        assert!(matches!(
            choose_k(&PriorKnowledge::Gamma { gamma: 0.3 }, 1000, 0.0, PaymentMode::AtCost, 1.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(choose_k(&PriorKnowledge::Gamma { gamma: 1.3 }, 1000, 10.0, PaymentMode::AtCost, 1.0).is_err());
    }

    #[test]
    fn choose_eta_examples() {
        assert!((choose_eta(3.0, 10_000, 100.0, 1.0, 1.0) - 0.01).abs() < 1e-15);
        assert!((choose_eta(0.0, 400, 100.0, 4.0, 1.0) - 0.1).abs() < 1e-15);
        assert!((choose_eta(0.0, 100, 5.0, 50.0, 1.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn adaptive_k_examples() {
        assert!((adaptive_k(0.3, 500, 50.0, 100.0) - 3.0).abs() < 1e-12);
        assert_eq!(adaptive_k(0.3, 500, 0.0, 100.0), MAX_ADAPTIVE_K);
        assert_eq!(adaptive_k(0.3, 500, -3.0, 100.0), MAX_ADAPTIVE_K);
        assert_eq!(adaptive_k(0.0, 500, 50.0, 100.0), 0.0);
    }

    #[test]
    fn worthless_data_is_never_bought() {
        let mut m = coin_mechanism(config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 2.0, 3, 10.0));
        let null = Arrival { cost: 0.4, data: DataPoint::Null };
        let r = m.round(&null, 0.99).unwrap().clone();
        assert_eq!(r.delta, 0.0);
        assert!(!r.accepted);
        assert_eq!(r.payment, 0.0);
        assert_eq!(m.learner().gradient_sum(), &[0.0, 0.0]);
    }

    #[test]
    fn free_data_is_always_bought() {
        for (mode, expect_payment) in [(PaymentMode::PostedPrice, true), (PaymentMode::AtCost, false)] {
            let mut m = coin_mechanism(config(PurchasePolicy::Priced, mode, 2.0, 3, 10.0));
            let r = m.round(&heads(0.0), 0.3).unwrap().clone();
            assert!(r.accepted);
            assert_eq!(r.q, 1.0);
            if expect_payment {
                assert_eq!(r.payment, r.price);
                assert!(r.payment > 0.0);
            } else {
                assert_eq!(r.payment, 0.0);
            }
        }
    }

    #[test]
    fn ties_accept() {
        // Δ = 1, K = 2: u = 0.5 prices at (1/(2·0.5))² = 1 = c_max.
        let mut m = coin_mechanism(config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 2.0, 2, 10.0));
        let r = m.round(&heads(1.0), 0.5).unwrap().clone();
        assert_eq!(r.price, 1.0);
        assert!(r.accepted);
        assert_eq!(r.payment, 1.0);
        assert!((r.q - 0.5).abs() < 1e-15);
        // Δ = 1, K = 4, u = 0.5 → price 0.25 against cost 0.25
        let mut m = coin_mechanism(config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 4.0, 2, 10.0));
        let r = m.round(&heads(0.25), 0.5).unwrap().clone();
        assert_eq!(r.price, 0.25);
        assert!(r.accepted);
    }

    #[test]
    fn importance_weight_is_survival_at_cost() {
        let mut m = coin_mechanism(config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 4.0, 2, 10.0));
        let r = m.round(&heads(0.25), 0.9).unwrap().clone();
        assert!(r.accepted);
        assert!((r.q - 0.5).abs() < 1e-15);
        assert_eq!(m.learner().gradient_sum(), &[-2.0, 0.0]);
    }

    #[test]
    fn overflow_and_premature_finalize() {
        let mut m = coin_mechanism(config(PurchasePolicy::Baseline, PaymentMode::PostedPrice, 0.0, 1, 10.0));
        assert!(matches!(m.finalize(), Err(Error::IncompleteRun { elapsed: 0, rounds: 1 })));
        m.round(&heads(0.5), 0.1).unwrap();
        assert!(matches!(m.round(&heads(0.5), 0.1), Err(Error::SequenceOverflow { rounds: 1 })));
        assert!(m.finalize().is_ok());
    }

    #[test]
    fn rejects_out_of_range_costs() {
        let mut m = coin_mechanism(config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 1.0, 2, 10.0));
        assert!(m.round(&heads(1.5), 0.1).is_err());
        assert!(m.round(&heads(-0.1), 0.1).is_err());
    }

    #[test]
    fn baseline_buys_everything_for_free() {
        let mut m = coin_mechanism(config(PurchasePolicy::Baseline, PaymentMode::PostedPrice, 0.0, 5, 1.0));
        for _ in 0..5 {
            let r = m.round(&heads(1.0), 0.0).unwrap();
            assert!(r.accepted);
            assert_eq!(r.payment, 0.0);
        }
        assert_eq!(m.spend(), 0.0);
        assert_eq!(m.purchases(), 5);
    }

    #[test]
    fn naive_spends_budget_at_unit_price() {
        let mut m = coin_mechanism(config(PurchasePolicy::Naive, PaymentMode::PostedPrice, 0.0, 10, 5.5));
        for i in 0..10 {
            m.round(&heads(0.1 * i as f64), 0.5).unwrap();
        }
        assert_eq!(m.spend(), 5.0);
        assert_eq!(m.transcript().iter().filter(|r| r.accepted).count(), 5);
        assert!(m.transcript()[..5].iter().all(|r| r.payment == 1.0));
    }

    #[test]
    fn exhausted_mechanisms_skip_free_points() {
        let mut m = coin_mechanism(config(PurchasePolicy::Naive, PaymentMode::PostedPrice, 0.0, 4, 1.0));
        m.round(&heads(0.5), 0.5).unwrap();
        for _ in 0..3 {
            let r = m.round(&heads(0.0), 0.5).unwrap();
            assert!(!r.accepted);
            assert_eq!((r.price, r.q), (0.0, 0.0));
        }
        assert_eq!(m.purchases(), 1);

        let mut cfg = config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 0.0, 3, 1.0);
        cfg.hard_stop = true;
        let mut m = coin_mechanism(cfg);
        m.round(&heads(0.5), 0.5).unwrap();
        assert!(!m.round(&heads(0.0), 0.5).unwrap().accepted);
    }

    #[test]
    fn hard_stop_keeps_posting() {
        let mut cfg = config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 0.0, 6, 2.0);
        cfg.hard_stop = true;
        let mut m = coin_mechanism(cfg);
        for _ in 0..6 {
            m.round(&heads(0.5), 0.5).unwrap();
        }
        // K = 0 buys at c_max until spend reaches B
        assert_eq!(m.spend(), 2.0);
        assert_eq!(m.purchases(), 2);
        assert_eq!(m.transcript().len(), 6);
        assert!(m.transcript()[2..].iter().all(|r| r.price == 0.0 && !r.accepted));
    }

    #[test]
    fn gamma_estimate_examples() {
        let mut cfg = config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 0.0, 10, 100.0);
        cfg.k_policy = KPolicy::Adaptive;
        let mut m = coin_mechanism(cfg);
        assert_eq!(m.gamma_estimate(), 0.0);
        assert_eq!(m.k(), 0.0);
        // K = 0: everything bought with q = 1, so γ̂ is the plain mean of Δ√c
        m.round(&heads(0.25), 0.1).unwrap();
        assert!((m.gamma_estimate() - 0.5).abs() < 1e-15);
        // K̂ = γ̂ (T − t) / (B − spend) = 0.5 · 9 / 99
        assert!((m.k() - 0.5 * 9.0 / 99.0).abs() < 1e-15);

        // a single purchase with q = 0.5: Δ√c/q = 1
        let mut m = coin_mechanism(config(PurchasePolicy::Priced, PaymentMode::PostedPrice, 4.0, 10, 100.0));
        let r = m.round(&heads(0.25), 0.9).unwrap().clone();
        assert!(r.accepted && (r.q - 0.5).abs() < 1e-15);
        assert_eq!(m.gamma_estimate(), 1.0);
    }

    #[test]
    fn finalize_averages() {
        let mut m = Mechanism::new(
            config(PurchasePolicy::Baseline, PaymentMode::PostedPrice, 0.0, 2, 1.0),
            HypothesisSpace::l2_ball(2, 10.0).unwrap(),
            LossFamily::Hinge,
        )
        .unwrap();
        let z = DataPoint::labeled(vec![-1.0, 0.0], 1, 0).unwrap();
        m.round(&Arrival { cost: 0.0, data: z.clone() }, 0.0).unwrap();
        // η = 0.1: second hypothesis is (-0.1, 0)
        m.round(&Arrival { cost: 0.0, data: z }, 0.0).unwrap();
        assert_eq!(m.posted_hypotheses()[1].as_slice(), &[-0.1, 0.0]);
        assert_eq!(m.finalize().unwrap().as_slice(), &[-0.05, 0.0]);

        let mut m = coin_mechanism(config(PurchasePolicy::Baseline, PaymentMode::PostedPrice, 0.0, 3, 1.0));
        for i in 0..3 {
            m.round(&Arrival { cost: 0.2, data: DataPoint::Outcome { index: i % 2 } }, 0.0).unwrap();
        }
        let avg = m.finalize().unwrap();
        assert!((avg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theory_eta_uses_initial_k() {
        let mut cfg = config(PurchasePolicy::Priced, PaymentMode::AtCost, 3.0, 10_000, 100.0);
        cfg.eta_policy = EtaPolicy::Theory { c_eta: 1.0 };
        let m = Mechanism::new(cfg, HypothesisSpace::l2_ball(2, 2f64.sqrt()).unwrap(), LossFamily::Hinge).unwrap();
        assert!((m.learner().eta() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        let space = HypothesisSpace::simplex(2).unwrap();
        let mut cfg = config(PurchasePolicy::Priced, PaymentMode::AtCost, 1.0, 10, 0.0);
        assert!(Mechanism::new(cfg.clone(), space.clone(), LossFamily::LinearSimplex).is_err());
        cfg.budget = 1.0;
        cfg.rounds = 0;
        assert!(Mechanism::new(cfg.clone(), space.clone(), LossFamily::LinearSimplex).is_err());
        cfg.rounds = 10;
        cfg.eta_policy = EtaPolicy::Fixed { eta: -1.0 };
        assert!(Mechanism::new(cfg, space, LossFamily::LinearSimplex).is_err());
    }
}
