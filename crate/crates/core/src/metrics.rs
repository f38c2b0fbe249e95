//! Best-in-hindsight benchmark, regret, held-out risk, and the sequence
//! statistics that measure how expensive a run's data was.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{eval_loss, Arrival, DataPoint, LossFamily};
use crate::mechanism::RoundRecord;
use crate::pricing::delta;
use crate::space::{dot, Hypothesis, HypothesisSpace, SpaceKind};

/// Relative objective change at which the offline solver stops.
pub const OFFLINE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineBest {
    pub hypothesis: Hypothesis,
    pub total_loss: f64,
    /// False when the iteration cap was hit before the tolerance was met.
    pub converged: bool,
    pub iterations: usize,
}

fn total_loss(arrivals: &[Arrival], family: LossFamily, h: &[f64]) -> Result<f64> {
    arrivals.iter().map(|a| eval_loss(family, h, &a.data)).sum()
}

/// Minimizer of `Σ_t f_t` over the space.
///
/// Linear losses on the simplex are minimized exactly by checking every
/// vertex. Margin losses on a ball are minimized by accelerated projected
/// gradient descent; the hinge loss is smoothed with a sequence of shrinking
/// Huber parameters and the best iterate under the true objective is kept.
pub fn offline_best(
    arrivals: &[Arrival],
    space: &HypothesisSpace,
    family: LossFamily,
    iterations: usize,
) -> Result<OfflineBest> {
    if arrivals.is_empty() {
        return Err(Error::input("offline benchmark needs at least one arrival"));
    }
    match (space.kind(), family) {
        (SpaceKind::Simplex, LossFamily::LinearSimplex) => best_vertex(arrivals, space),
        (SpaceKind::L2Ball { .. }, LossFamily::Hinge | LossFamily::Logistic | LossFamily::SquaredHinge) => {
            best_in_ball(arrivals, space, family, iterations)
        }
        (kind, family) => Err(Error::input(format!("no offline solver for {family:?} losses on {kind:?}"))),
    }
}

fn best_vertex(arrivals: &[Arrival], space: &HypothesisSpace) -> Result<OfflineBest> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for i in 0..space.dim() {
        let mut vertex = vec![0.0; space.dim()];
        vertex[i] = 1.0;
        let loss = total_loss(arrivals, LossFamily::LinearSimplex, &vertex)?;
        // strict comparison keeps the lowest index among ties
        if best.as_ref().is_none_or(|(_, b)| loss < *b) {
            best = Some((vertex, loss));
        }
    }
    let (vertex, total_loss) = best.expect("simplex has at least one vertex");
    Ok(OfflineBest { hypothesis: Hypothesis::from_vec(vertex), total_loss, converged: true, iterations: space.dim() })
}

/// Margin-loss objective `(1/n) Σ φ(y⟨h,x⟩)` on the labeled points.
struct MarginObjective<'a> {
    points: Vec<(&'a [f64], f64)>,
    family: LossFamily,
    /// Huber parameter for the hinge; unused by the smooth families.
    smoothing: f64,
}

impl MarginObjective<'_> {
    fn phi(&self, m: f64) -> (f64, f64) {
        match self.family {
            LossFamily::Hinge => {
                let mu = self.smoothing;
                if m >= 1.0 {
                    (0.0, 0.0)
                } else if m > 1.0 - mu {
                    ((1.0 - m).powi(2) / (2.0 * mu), -(1.0 - m) / mu)
                } else {
                    (1.0 - m - mu / 2.0, -1.0)
                }
            }
            LossFamily::Logistic => {
                let value = if m >= 0.0 { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
                let slope = if m >= 0.0 {
                    let e = (-m).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + m.exp())
                };
                (value, slope)
            }
            LossFamily::SquaredHinge => {
                let s = (1.0 - m).max(0.0);
                (0.5 * s * s, -s)
            }
            LossFamily::LinearSimplex => unreachable!("not a margin loss"),
        }
    }

    fn value(&self, h: &[f64]) -> f64 {
        let n = self.points.len() as f64;
        self.points.iter().map(|(x, y)| self.phi(y * dot(h, x)).0).sum::<f64>() / n
    }

    fn value_and_gradient(&self, h: &[f64]) -> (f64, Vec<f64>) {
        let n = self.points.len() as f64;
        let mut grad = vec![0.0; h.len()];
        let mut value = 0.0;
        for (x, y) in &self.points {
            let (v, s) = self.phi(y * dot(h, x));
            value += v;
            if s != 0.0 {
                grad.iter_mut().zip(x.iter()).for_each(|(g, xi)| *g += s * y * xi);
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        (value / n, grad)
    }

    /// Power-iteration estimate of the largest eigenvalue of `(1/n) XᵀX`.
    fn second_moment_scale(&self, dim: usize) -> f64 {
        let n = self.points.len() as f64;
        let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut lambda = 0.0;
        for _ in 0..50 {
            let mut w = vec![0.0; dim];
            for (x, _) in &self.points {
                let p = dot(x, &v);
                w.iter_mut().zip(x.iter()).for_each(|(wi, xi)| *wi += p * xi / n);
            }
            let norm = crate::space::l2_norm(&w);
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = w.into_iter().map(|wi| wi / norm).collect();
        }
        lambda
    }
}

fn best_in_ball(
    arrivals: &[Arrival],
    space: &HypothesisSpace,
    family: LossFamily,
    iterations: usize,
) -> Result<OfflineBest> {
    let mut points = Vec::new();
    for a in arrivals {
        match &a.data {
            DataPoint::Labeled { features, label, .. } => {
                if features.len() != space.dim() {
                    return Err(Error::input("feature dimension does not match the hypothesis space"));
                }
                points.push((features.as_slice(), f64::from(*label)));
            }
            DataPoint::Null => {}
            z => return Err(Error::input(format!("{family:?} loss cannot be evaluated on {z:?}"))),
        }
    }
    let dim = space.dim();
    if points.is_empty() {
        let h = space.center();
        let total_loss = total_loss(arrivals, family, &h)?;
        return Ok(OfflineBest { hypothesis: h, total_loss, converged: true, iterations: 0 });
    }

    let stages: Vec<f64> = match family {
        LossFamily::Hinge => (1..=8).map(|e| 10f64.powi(-e)).collect(),
        _ => vec![0.0],
    };
    let mut objective = MarginObjective { points, family, smoothing: stages[0] };
    let curvature = match family {
        LossFamily::Logistic => 0.25,
        _ => 1.0,
    };
    let moment = objective.second_moment_scale(dim).max(1e-12);

    let mut x = space.center().into_inner();
    let mut best = (x.clone(), objective.value_exact(&x));
    let mut used = 0;
    let mut converged = true;

    for &mu in &stages {
        objective.smoothing = mu;
        let smooth_curv = if family == LossFamily::Hinge { 1.0 / mu } else { curvature };
        let mut lipschitz = smooth_curv * moment;
        let mut y = x.clone();
        let mut momentum: f64 = 1.0;
        let mut f_x = objective.value(&x);
        let mut stage_done = false;
        while used < iterations {
            used += 1;
            let (f_y, g_y) = objective.value_and_gradient(&y);
            // backtrack until the quadratic upper model holds
            let (next, f_next) = loop {
                let step: Vec<f64> = y.iter().zip(&g_y).map(|(yi, gi)| yi - gi / lipschitz).collect();
                let cand = space.project(&step).into_inner();
                let diff: Vec<f64> = cand.iter().zip(&y).map(|(c, yi)| c - yi).collect();
                let model = f_y + dot(&g_y, &diff) + 0.5 * lipschitz * dot(&diff, &diff);
                let f_cand = objective.value(&cand);
                if f_cand <= model + 1e-15 * model.abs().max(1.0) || lipschitz > 1e300 {
                    break (cand, f_cand);
                }
                lipschitz *= 2.0;
            };

            let true_value = objective.value_exact(&next);
            if true_value < best.1 {
                best = (next.clone(), true_value);
            }

            let change = (f_x - f_next).abs();
            let restart = f_next > f_x;
            let next_momentum = if restart { 1.0 } else { (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0 };
            let beta = if restart { 0.0 } else { (momentum - 1.0) / next_momentum };
            y = next.iter().zip(&x).map(|(n, o)| n + beta * (n - o)).collect();
            y = space.project(&y).into_inner();
            momentum = next_momentum;
            let prev = f_x;
            if !restart {
                x = next;
                f_x = f_next;
            } else {
                y = x.clone();
            }
            if !restart && change <= OFFLINE_TOL * prev.abs().max(f64::MIN_POSITIVE) {
                stage_done = true;
                break;
            }
        }
        if !stage_done {
            converged = false;
            break;
        }
    }

    let hypothesis = Hypothesis::from_vec(best.0);
    let total_loss = total_loss(arrivals, family, &hypothesis)?;
    Ok(OfflineBest { hypothesis, total_loss, converged, iterations: used })
}

impl MarginObjective<'_> {
    /// Unsmoothed mean loss.
    fn value_exact(&self, h: &[f64]) -> f64 {
        let n = self.points.len() as f64;
        self.points
            .iter()
            .map(|(x, y)| {
                let m = y * dot(h, x);
                match self.family {
                    LossFamily::Hinge => (1.0 - m).max(0.0),
                    _ => self.phi(m).0,
                }
            })
            .sum::<f64>()
            / n
    }
}

/// `Σ_t f_t(h_t) − Σ_t f_t(h*)`, with the posted losses read off the
/// transcript whether or not each point was bought.
pub fn regret(transcript: &[RoundRecord], arrivals: &[Arrival], family: LossFamily, h_star: &[f64]) -> Result<f64> {
    if transcript.len() != arrivals.len() {
        return Err(Error::input(format!(
            "transcript covers {} rounds but there are {} arrivals",
            transcript.len(),
            arrivals.len()
        )));
    }
    let online: f64 = transcript.iter().map(|r| r.loss).sum();
    Ok(online - total_loss(arrivals, family, h_star)?)
}

/// Regret recomputed from the posted hypotheses alone.
pub fn regret_from_hypotheses(
    posted: &[Hypothesis],
    arrivals: &[Arrival],
    family: LossFamily,
    h_star: &[f64],
) -> Result<f64> {
    if posted.len() != arrivals.len() {
        return Err(Error::input(format!("{} hypotheses for {} arrivals", posted.len(), arrivals.len())));
    }
    let mut online = 0.0;
    for (h, a) in posted.iter().zip(arrivals) {
        online += eval_loss(family, h, &a.data)?;
    }
    Ok(online - total_loss(arrivals, family, h_star)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMetric {
    Surrogate,
    /// Misclassification rate, with `⟨h,x⟩ = 0` counted as an error.
    ZeroOne,
}

pub fn risk(h: &[f64], test_set: &[DataPoint], family: LossFamily, metric: RiskMetric) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::input("risk needs a nonempty test set"));
    }
    let mut total = 0.0;
    for z in test_set {
        total += match metric {
            RiskMetric::Surrogate => eval_loss(family, h, z)?,
            RiskMetric::ZeroOne => match z {
                DataPoint::Labeled { features, label, .. } => {
                    if features.len() != h.len() {
                        return Err(Error::input("feature dimension does not match the hypothesis"));
                    }
                    if f64::from(*label) * dot(h, features) > 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => return Err(Error::input("zero-one risk needs labeled points")),
            },
        };
    }
    Ok(total / test_set.len() as f64)
}

/// Mean over rounds of the posted hypotheses' test risk.
pub fn mean_round_risk(
    posted: &[Hypothesis],
    test_set: &[DataPoint],
    family: LossFamily,
    metric: RiskMetric,
) -> Result<f64> {
    if posted.is_empty() {
        return Err(Error::input("no posted hypotheses"));
    }
    let mut total = 0.0;
    for h in posted {
        total += risk(h, test_set, family, metric)?;
    }
    Ok(total / posted.len() as f64)
}

/// Monetary difficulty of a realized run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    /// `(1/T) Σ Δ(h_t) √c_t`
    pub gamma: f64,
    /// `(1/T) Σ Δ(h_t)`
    pub gamma_max: f64,
    /// `(1/T) Σ √c_t`
    pub c_bar: f64,
    /// `(1/T) Σ c_t`
    pub mu: f64,
    /// `(1/T) Σ Δ(h*) √c_t`
    pub gamma_star: f64,
}

pub fn sequence_stats(
    arrivals: &[Arrival],
    posted: &[Hypothesis],
    h_star: &[f64],
    space: &HypothesisSpace,
    family: LossFamily,
) -> Result<SequenceStats> {
    if arrivals.len() != posted.len() {
        return Err(Error::input(format!("{} hypotheses for {} arrivals", posted.len(), arrivals.len())));
    }
    if arrivals.is_empty() {
        return Ok(SequenceStats::default());
    }
    let norm = space.norm();
    let mut s = SequenceStats::default();
    for (a, h) in arrivals.iter().zip(posted) {
        let root = a.cost.max(0.0).sqrt();
        let d = delta(h, family, &a.data, norm)?;
        s.gamma += d * root;
        s.gamma_max += d;
        s.c_bar += root;
        s.mu += a.cost;
        s.gamma_star += delta(h_star, family, &a.data, norm)? * root;
    }
    let n = arrivals.len() as f64;
    s.gamma /= n;
    s.gamma_max /= n;
    s.c_bar /= n;
    s.mu /= n;
    s.gamma_star /= n;
    Ok(s)
}

/// Statistics that depend only on the costs and a single hypothesis, for
/// runs that have not happened yet.
pub fn instance_stats(
    arrivals: &[Arrival],
    h: &[f64],
    space: &HypothesisSpace,
    family: LossFamily,
) -> Result<SequenceStats> {
    let posted = vec![Hypothesis::from_vec(h.to_vec()); arrivals.len()];
    sequence_stats(arrivals, &posted, h, space, family)
}
