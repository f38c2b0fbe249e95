//! The randomized posted-price law.
//!
//! For data value `Δ` and normalization `K > 0`, prices are drawn so that
//! `Pr[price ≥ c] = min{1, Δ/(K√c)}`. The law has support `[c*, c_max]` with
//! `c* = Δ²/K²`, density `Δ / (2K π^{3/2})` on the interior, and a point mass
//! of `min{1, Δ/(K√c_max)}` at `c_max`.

use crate::error::{Error, Result};
use crate::loss::{eval_gradient, DataPoint, LossFamily};
use crate::space::{dual_norm, NormKind};

/// Data value `Δ`: dual norm of the loss gradient at the posted hypothesis.
pub fn delta(h: &[f64], family: LossFamily, z: &DataPoint, norm: NormKind) -> Result<f64> {
    Ok(dual_norm(norm, &eval_gradient(family, h, z)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PricingQuote {
    delta: f64,
    k: f64,
    c_max: f64,
}

impl PricingQuote {
    pub fn new(delta: f64, k: f64, c_max: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::input(format!("data value must be nonnegative, got {delta}")));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::input(format!("K must be nonnegative, got {k}")));
        }
        if !(c_max > 0.0 && c_max.is_finite()) {
            return Err(Error::input(format!("maximum price must be positive, got {c_max}")));
        }
        Ok(Self { delta, k, c_max })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Probability that the posted price is at least `c`.
    ///
    /// `K = 0` is the buy-everything regime (price fixed at `c_max`), and a
    /// zero cost is accepted whenever the data has any value.
    pub fn survival(&self, c: f64) -> f64 {
        if c > self.c_max {
            0.0
        } else if self.k == 0.0 {
            1.0
        } else if c <= 0.0 {
            if self.delta > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (self.delta / (self.k * c.sqrt())).min(1.0)
        }
    }

    /// Lowest price in the support, `Δ²/K²` capped at `c_max`.
    pub fn reserve(&self) -> Result<f64> {
        if self.k == 0.0 {
            return Err(Error::UndefinedReserve);
        }
        let ratio = self.delta / self.k;
        Ok((ratio * ratio).min(self.c_max))
    }

    /// Probability mass sitting on `c_max`.
    pub fn top_mass(&self) -> f64 {
        if self.k == 0.0 {
            1.0
        } else {
            (self.delta / (self.k * self.c_max.sqrt())).min(1.0)
        }
    }

    /// `Pr[price ≤ π]`.
    pub fn cdf(&self, price: f64) -> f64 {
        if price >= self.c_max {
            return 1.0;
        }
        if self.k == 0.0 {
            return 0.0;
        }
        if self.delta == 0.0 {
            return if price >= 0.0 { 1.0 } else { 0.0 };
        }
        // reserve() cannot fail here
        let reserve = (self.delta / self.k).powi(2).min(self.c_max);
        if price < reserve {
            0.0
        } else {
            (1.0 - self.delta / (self.k * price.sqrt())).max(0.0)
        }
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`. The top `top_mass()`
    /// quantiles map to `c_max`; worthless data (`Δ = 0`) is priced at 0.
    pub fn sample(&self, u: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        if self.k == 0.0 || u >= 1.0 - self.top_mass() {
            return self.c_max;
        }
        let root = self.delta / (self.k * (1.0 - u));
        (root * root).min(self.c_max)
    }

    /// `E[price · 1{price ≥ c}]`: expected spend under posted-price payment
    /// against an agent with cost `c`.
    pub fn expected_payment(&self, c: f64) -> f64 {
        if c > self.c_max || self.delta == 0.0 {
            return 0.0;
        }
        if self.k == 0.0 || self.top_mass() >= 1.0 {
            return self.c_max;
        }
        let reserve = (self.delta / self.k).powi(2);
        (self.delta / self.k) * (2.0 * self.c_max.sqrt() - c.max(reserve).sqrt())
    }

    /// `c · Pr[price ≥ c]`: expected spend when only the cost is paid.
    pub fn expected_cost_payment(&self, c: f64) -> f64 {
        c * self.survival(c)
    }
}
