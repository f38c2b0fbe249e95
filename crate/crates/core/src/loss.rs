//! Data points, arrivals, and the convex loss families evaluated on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{dot, l2_norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFamily {
    /// `max{0, 1 − y⟨h,x⟩}`
    Hinge,
    /// `ln(1 + exp(−y⟨h,x⟩))`
    Logistic,
    /// `½ max{0, 1 − y⟨h,x⟩}²`. Smooth with a 1-Lipschitz derivative, but its
    /// own Lipschitz constant grows with the hypothesis radius.
    SquaredHinge,
    /// `1 − h[outcome]` on the simplex: expected 0-1 loss of a mixed prediction.
    LinearSimplex,
}

/// One data point. Feature vectors always satisfy `‖x‖₂ ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataPoint {
    /// A binary classification example. `group` is a source tag (digit,
    /// cluster) that cost models may key on.
    Labeled { features: Vec<f64>, label: i8, group: u32 },
    /// The realized outcome of a discrete experiment (0 = heads, 1 = tails).
    Outcome { index: usize },
    /// A point on which every hypothesis has loss 1 and that carries no
    /// gradient information.
    Null,
}

impl DataPoint {
    /// Builds a labeled point, shrinking the features into the unit ball.
    pub fn labeled(mut features: Vec<f64>, label: i8, group: u32) -> Result<Self> {
        if label != 1 && label != -1 {
            return Err(Error::input(format!("label must be ±1, got {label}")));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("feature vector has a non-finite entry".into()));
        }
        let norm = l2_norm(&features);
        if norm > 1.0 {
            features.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(DataPoint::Labeled { features, label, group })
    }

    pub fn group(&self) -> Option<u32> {
        match self {
            DataPoint::Labeled { group, .. } => Some(*group),
            _ => None,
        }
    }
}

/// One agent's offer: the private cost and the data point it holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub cost: f64,
    pub data: DataPoint,
}

fn margin(h: &[f64], features: &[f64], label: i8) -> Result<f64> {
    if features.len() != h.len() {
        return Err(Error::input(format!(
            "feature dimension {} does not match hypothesis dimension {}",
            features.len(),
            h.len()
        )));
    }
    Ok(f64::from(label) * dot(h, features))
}

fn incompatible(family: LossFamily, z: &DataPoint) -> Error {
    Error::input(format!("{family:?} loss cannot be evaluated on {z:?}"))
}

/// Numerically stable `ln(1 + e^{-m})`.
fn softplus_neg(m: f64) -> f64 {
    if m >= 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn eval_loss(family: LossFamily, h: &[f64], z: &DataPoint) -> Result<f64> {
    match (family, z) {
        (_, DataPoint::Null) => Ok(1.0),
        (LossFamily::LinearSimplex, DataPoint::Outcome { index }) => h
            .get(*index)
            .map(|p| 1.0 - p)
            .ok_or_else(|| Error::input(format!("outcome {index} out of range for dimension {}", h.len()))),
        (LossFamily::Hinge, DataPoint::Labeled { features, label, .. }) => {
            Ok((1.0 - margin(h, features, *label)?).max(0.0))
        }
        (LossFamily::Logistic, DataPoint::Labeled { features, label, .. }) => {
            Ok(softplus_neg(margin(h, features, *label)?))
        }
        (LossFamily::SquaredHinge, DataPoint::Labeled { features, label, .. }) => {
            let slack = (1.0 - margin(h, features, *label)?).max(0.0);
            Ok(0.5 * slack * slack)
        }
        _ => Err(incompatible(family, z)),
    }
}

/// A subgradient of [`eval_loss`] in `h`. At the hinge kink (margin exactly
/// 1) this is the zero vector.
pub fn eval_gradient(family: LossFamily, h: &[f64], z: &DataPoint) -> Result<Vec<f64>> {
    match (family, z) {
        (_, DataPoint::Null) => Ok(vec![0.0; h.len()]),
        (LossFamily::LinearSimplex, DataPoint::Outcome { index }) => {
            if *index >= h.len() {
                return Err(Error::input(format!("outcome {index} out of range for dimension {}", h.len())));
            }
            let mut g = vec![0.0; h.len()];
            g[*index] = -1.0;
            Ok(g)
        }
        (
            LossFamily::Hinge | LossFamily::Logistic | LossFamily::SquaredHinge,
            DataPoint::Labeled { features, label, .. },
        ) => {
            let m = margin(h, features, *label)?;
            // d loss / d margin, negated
            let weight = match family {
                LossFamily::Hinge => {
                    if m < 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                LossFamily::Logistic => sigmoid(-m),
                _ => (1.0 - m).max(0.0),
            };
            let y = f64::from(*label);
            Ok(features.iter().map(|x| -weight * y * x).collect())
        }
        _ => Err(incompatible(family, z)),
    }
}
