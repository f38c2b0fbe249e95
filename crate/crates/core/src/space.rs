//! Hypothesis sets, their norms, and Euclidean projections onto them.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership slack for the simplex and the ball boundary.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// The primal norm a regularizer is strongly convex in. Gradients are
/// measured in the corresponding dual norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    L2,
    L1,
}

impl NormKind {
    pub fn primal(self, v: &[f64]) -> f64 {
        match self {
            NormKind::L2 => l2_norm(v),
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        }
    }

    /// Dual of the primal norm: l2 is self-dual, the dual of l1 is l-infinity.
    pub fn dual(self, v: &[f64]) -> f64 {
        dual_norm(self, v)
    }
}

pub fn dual_norm(kind: NormKind, v: &[f64]) -> f64 {
    match kind {
        NormKind::L2 => l2_norm(v),
        NormKind::L1 => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceKind {
    L2Ball { radius: f64 },
    Simplex,
}

/// A bounded convex hypothesis set: either a Euclidean ball centred at the
/// origin or the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    kind: SpaceKind,
    dim: usize,
}

impl HypothesisSpace {
    pub fn l2_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("hypothesis dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { kind: SpaceKind::L2Ball { radius }, dim })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("hypothesis dimension must be at least 1"));
        }
        Ok(Self { kind: SpaceKind::Simplex, dim })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Range of the matching regularizer over the set: `radius²/2` for
    /// `½‖h‖₂²` on the ball, `ln d` for negative entropy on the simplex.
    pub fn beta(&self) -> f64 {
        match self.kind {
            SpaceKind::L2Ball { radius } => radius * radius / 2.0,
            SpaceKind::Simplex => (self.dim as f64).ln(),
        }
    }

    /// Norm the natural regularizer of this set is strongly convex in.
    pub fn norm(&self) -> NormKind {
        match self.kind {
            SpaceKind::L2Ball { .. } => NormKind::L2,
            SpaceKind::Simplex => NormKind::L1,
        }
    }

    /// Minimizer of the regularizer: the origin or the uniform distribution.
    pub fn center(&self) -> Hypothesis {
        match self.kind {
            SpaceKind::L2Ball { .. } => Hypothesis(vec![0.0; self.dim]),
            SpaceKind::Simplex => Hypothesis(vec![1.0 / self.dim as f64; self.dim]),
        }
    }

    pub fn contains(&self, h: &[f64]) -> bool {
        if h.len() != self.dim || h.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self.kind {
            SpaceKind::L2Ball { radius } => l2_norm(h) <= radius * (1.0 + MEMBERSHIP_TOL),
            SpaceKind::Simplex => {
                h.iter().all(|&x| x >= -MEMBERSHIP_TOL) && (h.iter().sum::<f64>() - 1.0).abs() <= MEMBERSHIP_TOL
            }
        }
    }

    /// Checked conversion of raw coordinates into a member of the set.
    pub fn hypothesis(&self, coords: Vec<f64>) -> Result<Hypothesis> {
        if coords.len() != self.dim {
            return Err(Error::input(format!(
                "hypothesis has {} coordinates, space has dimension {}",
                coords.len(),
                self.dim
            )));
        }
        if !self.contains(&coords) {
            return Err(Error::input("point lies outside the hypothesis space"));
        }
        Ok(Hypothesis(coords))
    }

    /// Euclidean projection onto the set.
    ///
    /// Panics if `v` does not have the space's dimension.
    pub fn project(&self, v: &[f64]) -> Hypothesis {
        assert_eq!(v.len(), self.dim, "projection input has the wrong dimension");
        match self.kind {
            SpaceKind::L2Ball { radius } => {
                let norm = l2_norm(v);
                if norm <= radius {
                    Hypothesis(v.to_vec())
                } else {
                    let scale = radius / norm;
                    Hypothesis(v.iter().map(|x| x * scale).collect())
                }
            }
            SpaceKind::Simplex => Hypothesis(project_simplex(v)),
        }
    }
}

/// Sort-based Euclidean projection onto `{p ≥ 0, Σp = 1}`.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// A point of a hypothesis space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypothesis(Vec<f64>);

impl Hypothesis {
    /// Wraps coordinates without a membership check; see
    /// [`HypothesisSpace::hypothesis`] for the checked form.
    pub fn from_vec(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Hypothesis {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
