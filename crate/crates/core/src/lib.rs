//! Online learning with actively purchased data.
//!
//! A [`Mechanism`] faces a stream of agents, each holding a data point and a
//! private cost. It posts a randomized price scaled to the value of the point
//! to the current hypothesis, buys when the price meets the cost, and feeds
//! importance-weighted gradients to a follow-the-regularized-leader learner.
//! The averaged hypothesis is the batch predictor.

pub mod environment;
pub mod error;
pub mod ftrl;
pub mod idx;
pub mod loss;
pub mod mechanism;
pub mod metrics;
pub mod pricing;
pub mod space;

pub use environment::{
    attach_costs, gen_coin_sequence, gen_gamma_sequence, gen_linear_task, Bias, CostModel, LinearTask, ProblemInstance,
};
pub use error::{Error, Result};
pub use ftrl::{Learner, Regularizer, WeightedFeed};
pub use loss::{eval_gradient, eval_loss, Arrival, DataPoint, LossFamily};
pub use mechanism::{
    choose_eta, choose_k, EtaPolicy, KPolicy, Mechanism, MechanismConfig, PaymentMode, PriorKnowledge, PurchasePolicy,
    RoundRecord,
};
pub use metrics::{offline_best, regret, risk, sequence_stats, OfflineBest, RiskMetric, SequenceStats};
pub use pricing::{delta, PricingQuote};
pub use space::{Hypothesis, HypothesisSpace, NormKind, SpaceKind};
