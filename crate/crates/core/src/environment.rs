//! Problem instances: adversarial coin sequences, synthetic linear
//! classification tasks, and cost models.
//!
//! Every generator is a pure function of its parameters and seed. Data and
//! costs are drawn from separate ChaCha streams of the same seed, so two cost
//! models applied with one seed see exactly the same data points.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{Arrival, DataPoint, LossFamily};
use crate::space::HypothesisSpace;

const DATA_STREAM: u64 = 0;
const COST_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;

/// Outcome index of heads; tails is 1.
pub const HEADS: usize = 0;
pub const TAILS: usize = 1;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bias {
    Heads,
    Tails,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostModel {
    Constant {
        cost: f64,
    },
    IndependentUniform {
        lo: f64,
        hi: f64,
    },
    /// `high_cost` with marginal probability `p_high`, free otherwise, with all
    /// of the high-cost mass on points whose group is in `target_groups`.
    TwoPointCorrelated {
        p_high: f64,
        high_cost: f64,
        target_groups: Vec<u32>,
    },
    /// `high_cost` with probability `p_high` independently of the data.
    TwoPointIndependent {
        p_high: f64,
        high_cost: f64,
    },
}

impl CostModel {
    fn validate(&self, c_max: f64) -> Result<()> {
        let in_range = |c: f64| (0.0..=c_max).contains(&c);
        let ok = match self {
            CostModel::Constant { cost } => in_range(*cost),
            CostModel::IndependentUniform { lo, hi } => in_range(*lo) && in_range(*hi) && lo <= hi,
            CostModel::TwoPointCorrelated { p_high, high_cost, .. }
            | CostModel::TwoPointIndependent { p_high, high_cost } => {
                in_range(*high_cost) && (0.0..=1.0).contains(p_high)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("cost model emits costs outside [0, {c_max}]: {self:?}")))
        }
    }
}

/// A full problem: the arrival sequence, a held-out test set, and the
/// geometry and loss the learner uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub arrivals: Vec<Arrival>,
    pub test_set: Vec<DataPoint>,
    pub space: HypothesisSpace,
    pub family: LossFamily,
    /// Generator parameters, for audit trails.
    pub metadata: BTreeMap<String, f64>,
}

impl ProblemInstance {
    pub fn rounds(&self) -> usize {
        self.arrivals.len()
    }

    pub fn total_cost(&self) -> f64 {
        self.arrivals.iter().map(|a| a.cost).sum()
    }

    /// Mean Euclidean norm of the arrivals' feature vectors (0 when there are
    /// none).
    pub fn mean_feature_norm(&self) -> f64 {
        let norms: Vec<f64> = self
            .arrivals
            .iter()
            .filter_map(|a| match &a.data {
                DataPoint::Labeled { features, .. } => Some(crate::space::l2_norm(features)),
                _ => None,
            })
            .collect();
        if norms.is_empty() {
            0.0
        } else {
            norms.iter().sum::<f64>() / norms.len() as f64
        }
    }
}

/// `T` i.i.d. flips of a coin with heads probability `½ ± ε`, each costing 1.
pub fn gen_coin_sequence(rounds: usize, epsilon: f64, bias: Bias, seed: u64) -> Result<ProblemInstance> {
    gen_gamma_sequence(rounds, 1.0, epsilon, bias, seed)
}

/// `(1 − γ)T` free "no coin" points followed by `γT` unit-cost coin flips.
///
/// On this sequence every coin point has `Δ = 1` under the l-infinity dual
/// norm and every null point is free, so `(1/T) Σ Δ√c = γ` for any learner.
pub fn gen_gamma_sequence(rounds: usize, gamma: f64, epsilon: f64, bias: Bias, seed: u64) -> Result<ProblemInstance> {
    if rounds == 0 {
        return Err(Error::input("a sequence needs at least one round"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::input(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::input(format!("coin bias must lie in [0, 1/2), got {epsilon}")));
    }
    let coins = (gamma * rounds as f64).round() as usize;
    let p_heads = match bias {
        Bias::Heads => 0.5 + epsilon,
        Bias::Tails => 0.5 - epsilon,
    };
    let mut rng = stream_rng(seed, DATA_STREAM);
    let mut arrivals = Vec::with_capacity(rounds);
    arrivals.extend((0..rounds - coins).map(|_| Arrival { cost: 0.0, data: DataPoint::Null }));
    arrivals.extend((0..coins).map(|_| {
        let index = if rng.random::<f64>() < p_heads { HEADS } else { TAILS };
        Arrival { cost: 1.0, data: DataPoint::Outcome { index } }
    }));

    let metadata = BTreeMap::from([
        ("rounds".to_string(), rounds as f64),
        ("gamma".to_string(), gamma),
        ("epsilon".to_string(), epsilon),
        ("p_heads".to_string(), p_heads),
        ("coin_rounds".to_string(), coins as f64),
    ]);
    Ok(ProblemInstance {
        arrivals,
        test_set: Vec::new(),
        space: HypothesisSpace::simplex(2)?,
        family: LossFamily::LinearSimplex,
        metadata,
    })
}

/// Synthetic two-class task built from Gaussian clusters.
///
/// Each class has `clusters` clusters, paired across classes. Pair `j` is
/// split along its own axis `e_{j mod d}`: its centres are
/// `±sep_j·e_{j mod d} + offset·e_{(clusters + j) mod d}`, where pair 0 (the
/// hard pair) uses `separation` and the others use `easy_separation`. A
/// linear separator therefore has to learn the hard pair's axis from hard
/// points alone. Points get isotropic noise of standard deviation `spread/√d`
/// and are shrunk into the unit ball. Group ids are `2j` for the positive and
/// `2j + 1` for the negative cluster `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearTask {
    pub dim: usize,
    pub clusters: usize,
    pub separation: f64,
    pub easy_separation: f64,
    pub spread: f64,
    pub offset: f64,
    /// Share of the points drawn from the two clusters nearest the boundary;
    /// the rest is split evenly over the other clusters.
    pub hard_fraction: f64,
    pub rounds: usize,
    pub test_size: usize,
    pub radius: f64,
    pub family: LossFamily,
}

impl Default for LinearTask {
    fn default() -> Self {
        Self {
            dim: 30,
            clusters: 2,
            separation: 0.1,
            easy_separation: 0.6,
            spread: 0.5,
            offset: 0.5,
            hard_fraction: 0.25,
            rounds: 8000,
            test_size: 2000,
            radius: 10.0,
            family: LossFamily::Hinge,
        }
    }
}

impl LinearTask {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::input(format!("linear tasks need d ≥ 2, got {}", self.dim)));
        }
        if self.clusters == 0 || self.rounds == 0 {
            return Err(Error::input("linear tasks need at least one cluster and one round"));
        }
        if !(0.0..=1.0).contains(&self.hard_fraction) || (self.clusters == 1 && self.hard_fraction < 1.0) {
            return Err(Error::input(format!("hard fraction {} is not attainable", self.hard_fraction)));
        }
        if self.family == LossFamily::LinearSimplex {
            return Err(Error::input("linear tasks need a margin-based loss"));
        }
        Ok(())
    }

    /// Cluster centre for class `label` and cluster `j`.
    pub fn center(&self, label: i8, j: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        let sep = if j == 0 { self.separation } else { self.easy_separation };
        c[j % self.dim] += f64::from(label) * sep;
        c[(self.clusters + j) % self.dim] += self.offset;
        c
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<DataPoint> {
        let label: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let j = if self.clusters == 1 || rng.random::<f64>() < self.hard_fraction {
            0
        } else {
            1 + rng.random_range(0..self.clusters - 1)
        };
        let sigma = self.spread / (self.dim as f64).sqrt();
        let features =
            self.center(label, j).into_iter().map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        let group = 2 * j as u32 + u32::from(label < 0);
        DataPoint::labeled(features, label, group)
    }
}

pub fn gen_linear_task(task: &LinearTask, costs: &CostModel, seed: u64) -> Result<ProblemInstance> {
    task.validate()?;
    let mut rng = stream_rng(seed, DATA_STREAM);
    let train = (0..task.rounds).map(|_| task.draw(&mut rng)).collect::<Result<Vec<_>>>()?;
    let test_set = (0..task.test_size).map(|_| task.draw(&mut rng)).collect::<Result<Vec<_>>>()?;
    let arrivals = attach_costs(train, costs, seed)?;

    let metadata = BTreeMap::from([
        ("dim".to_string(), task.dim as f64),
        ("clusters".to_string(), task.clusters as f64),
        ("separation".to_string(), task.separation),
        ("easy_separation".to_string(), task.easy_separation),
        ("spread".to_string(), task.spread),
        ("offset".to_string(), task.offset),
        ("hard_fraction".to_string(), task.hard_fraction),
        ("rounds".to_string(), task.rounds as f64),
        ("test_size".to_string(), task.test_size as f64),
    ]);
    Ok(ProblemInstance {
        arrivals,
        test_set,
        space: HypothesisSpace::l2_ball(task.dim, task.radius)?,
        family: task.family,
        metadata,
    })
}

/// Attaches a cost to every data point, deterministically in `seed`.
///
/// The correlated model puts all high costs on the target groups, raising the
/// within-group probability to `p_high / (target share)` so the marginal cost
/// distribution is unchanged.
pub fn attach_costs(data: Vec<DataPoint>, model: &CostModel, seed: u64) -> Result<Vec<Arrival>> {
    model.validate(f64::INFINITY)?;
    let mut rng = stream_rng(seed, COST_STREAM);
    let within = match model {
        CostModel::TwoPointCorrelated { p_high, target_groups, .. } => {
            let hits = data.iter().filter(|z| z.group().is_some_and(|g| target_groups.contains(&g))).count();
            let share = hits as f64 / data.len().max(1) as f64;
            let within = if *p_high == 0.0 { 0.0 } else { p_high / share };
            if within.is_nan() || within > 1.0 + 1e-12 {
                return Err(Error::config(format!(
                    "target groups hold {share:.4} of the data, too little for a high-cost probability of {p_high}"
                )));
            }
            within.min(1.0)
        }
        _ => 0.0,
    };

    let arrivals = data
        .into_iter()
        .map(|data| {
            let cost = match model {
                CostModel::Constant { cost } => *cost,
                CostModel::IndependentUniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                CostModel::TwoPointIndependent { p_high, high_cost } => {
                    if rng.random::<f64>() < *p_high {
                        *high_cost
                    } else {
                        0.0
                    }
                }
                CostModel::TwoPointCorrelated { high_cost, target_groups, .. } => {
                    let target = data.group().is_some_and(|g| target_groups.contains(&g));
                    // one draw per point keeps the stream aligned across models
                    let u = rng.random::<f64>();
                    if target && u < within {
                        *high_cost
                    } else {
                        0.0
                    }
                }
            };
            Arrival { cost, data }
        })
        .collect();
    Ok(arrivals)
}

/// Random half split: the first `⌊n/2⌋` shuffled points train, the rest test.
pub fn split_half(mut data: Vec<DataPoint>, seed: u64) -> (Vec<DataPoint>, Vec<DataPoint>) {
    let mut rng = stream_rng(seed, SPLIT_STREAM);
    data.shuffle(&mut rng);
    let test = data.split_off(data.len() / 2);
    (data, test)
}

/// Builds an instance from labeled data: random half split, costs on the
/// training half.
pub fn instance_from_dataset(
    data: Vec<DataPoint>,
    costs: &CostModel,
    radius: f64,
    family: LossFamily,
    seed: u64,
) -> Result<ProblemInstance> {
    let dim = match data.first() {
        Some(DataPoint::Labeled { features, .. }) => features.len(),
        _ => return Err(Error::input("dataset is empty or unlabeled")),
    };
    let total = data.len();
    let (train, test_set) = split_half(data, seed);
    let rounds = train.len();
    if rounds == 0 {
        return Err(Error::input("dataset is too small to split"));
    }
    let arrivals = attach_costs(train, costs, seed)?;
    Ok(ProblemInstance {
        arrivals,
        test_set,
        space: HypothesisSpace::l2_ball(dim, radius)?,
        family,
        metadata: BTreeMap::from([("dataset_size".to_string(), total as f64), ("rounds".to_string(), rounds as f64)]),
    })
}
