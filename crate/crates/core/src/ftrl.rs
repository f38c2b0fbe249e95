//! Follow-the-Regularized-Leader over linearized losses, and the
//! importance-weighted feeding rule for partially observed sequences.
//!
//! The learner posts `argmin_h ⟨θ, h⟩ + G(h)/η` where `θ` is the sum of all
//! (importance-weighted) gradients fed so far. Both supported regularizers
//! have closed forms: lazy projection `Π(−ηθ)` for `G = ½‖h‖₂²` on a ball,
//! and `softmax(−ηθ)` for negative entropy on the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Hypothesis, HypothesisSpace, SpaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    /// `½‖h‖₂²`; online gradient descent with lazy projection.
    Euclidean,
    /// `Σ hᵢ ln hᵢ`; multiplicative weights.
    NegEntropy,
}

impl Regularizer {
    /// The regularizer that pairs with a space's geometry.
    pub fn natural_for(space: &HypothesisSpace) -> Self {
        match space.kind() {
            SpaceKind::L2Ball { .. } => Regularizer::Euclidean,
            SpaceKind::Simplex => Regularizer::NegEntropy,
        }
    }
}

/// What the learner is told about one round.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightedFeed {
    /// The round was not observed; the learner sees the zero function.
    Zero,
    Weighted {
        gradient: Vec<f64>,
        /// `1/q` for an observation made with probability `q`.
        inverse_weight: f64,
        /// Dual norm of the unweighted gradient.
        delta: f64,
    },
}

/// `value/q` if the `q`-coin came up, else 0. Its expectation over the coin is
/// `value` for any `q > 0`.
pub fn importance_weighted(value: f64, q: f64, obtained: bool) -> f64 {
    if obtained {
        value / q
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct Learner {
    space: HypothesisSpace,
    regularizer: Regularizer,
    eta: f64,
    gradient_sum: Vec<f64>,
    current: Hypothesis,
    /// Σ (Δ/q)² over observed rounds.
    bound_sum: f64,
}

impl Learner {
    pub fn new(space: HypothesisSpace, regularizer: Regularizer, eta: f64) -> Result<Self> {
        if regularizer != Regularizer::natural_for(&space) {
            return Err(Error::config(format!(
                "{regularizer:?} regularizer does not match a {:?} hypothesis space",
                space.kind()
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {eta}")));
        }
        let current = space.center();
        Ok(Self { gradient_sum: vec![0.0; space.dim()], space, regularizer, eta, current, bound_sum: 0.0 })
    }

    /// Learner with the regularizer matching the space.
    pub fn for_space(space: HypothesisSpace, eta: f64) -> Result<Self> {
        let regularizer = Regularizer::natural_for(&space);
        Self::new(space, regularizer, eta)
    }

    pub fn post(&self) -> &Hypothesis {
        &self.current
    }

    pub fn space(&self) -> &HypothesisSpace {
        &self.space
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gradient_sum(&self) -> &[f64] {
        &self.gradient_sum
    }

    pub fn bound_sum(&self) -> f64 {
        self.bound_sum
    }

    pub fn feed(&mut self, feed: &WeightedFeed) -> Result<()> {
        let WeightedFeed::Weighted { gradient, inverse_weight, delta } = feed else {
            return Ok(());
        };
        if gradient.len() != self.space.dim() {
            return Err(Error::input(format!(
                "gradient has dimension {}, learner has {}",
                gradient.len(),
                self.space.dim()
            )));
        }
        if gradient.iter().any(|g| !g.is_finite()) || !delta.is_finite() || !inverse_weight.is_finite() {
            return Err(Error::Numeric("fed a non-finite gradient or weight".into()));
        }
        if *inverse_weight < 1.0 {
            return Err(Error::input(format!("inverse weight must be at least 1, got {inverse_weight}")));
        }

        for (acc, g) in self.gradient_sum.iter_mut().zip(gradient) {
            *acc += g * inverse_weight;
        }
        let scaled = delta * inverse_weight;
        self.bound_sum += scaled * scaled;
        self.current = self.leader();
        Ok(())
    }

    /// Feeds `gradient/q` when the round was obtained, the zero function
    /// otherwise.
    pub fn feed_importance_weighted(&mut self, q: f64, obtained: bool, gradient: &[f64], delta: f64) -> Result<()> {
        if !obtained {
            return self.feed(&WeightedFeed::Zero);
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::input(format!("observation probability must lie in (0, 1], got {q}")));
        }
        self.feed(&WeightedFeed::Weighted {
            gradient: gradient.to_vec(),
            inverse_weight: importance_weighted(1.0, q, true),
            delta,
        })
    }

    /// Realized-path regret bound `β/η + 2η Σ (Δ/q)²`. With every `q = 1` this
    /// bounds the actual regret on the fed sequence.
    pub fn regret_bound(&self) -> f64 {
        self.space.beta() / self.eta + 2.0 * self.eta * self.bound_sum
    }

    fn leader(&self) -> Hypothesis {
        match self.regularizer {
            Regularizer::Euclidean => {
                let target: Vec<f64> = self.gradient_sum.iter().map(|g| -self.eta * g).collect();
                self.space.project(&target)
            }
            Regularizer::NegEntropy => {
                let exponents: Vec<f64> = self.gradient_sum.iter().map(|g| -self.eta * g).collect();
                let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = exponents.iter().map(|e| (e - top).exp()).collect();
                let total: f64 = weights.iter().sum();
                Hypothesis::from_vec(weights.into_iter().map(|w| w / total).collect())
            }
        }
    }
}
