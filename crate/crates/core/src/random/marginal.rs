use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;
use statrs::function::gamma::{gamma_lr, gamma_ur};

/// Regularized lower incomplete gamma `P(a, z)`, total on `z >= 0`.
pub(crate) fn gamma_p(a: f64, z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z.is_infinite() {
        1.0
    } else {
        gamma_lr(a, z)
    }
}

/// Regularized upper incomplete gamma `Q(a, z)`, total on `z >= 0`.
pub(crate) fn gamma_q(a: f64, z: f64) -> f64 {
    if z <= 0.0 {
        1.0
    } else if z.is_infinite() {
        0.0
    } else {
        gamma_ur(a, z)
    }
}

use super::RngStream;
use crate::error::{Error, Result};

/// Parametric law of a strictly positive quantity: a cycle length, a jump
/// size, an update size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Deterministic {
        value: f64,
    },
    /// Mass `weights[k]` at `(k + 1) * span`.
    Lattice {
        span: f64,
        weights: Vec<f64>,
    },
    ShiftedUniform {
        lo: f64,
        hi: f64,
    },
}

fn positive(value: f64, field: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {value}")))
    }
}

impl MarginalSpec {
    pub fn exponential(rate: f64) -> Self {
        MarginalSpec::Exponential { rate }
    }

    pub fn gamma(shape: f64, rate: f64) -> Self {
        MarginalSpec::Gamma { shape, rate }
    }

    pub fn deterministic(value: f64) -> Self {
        MarginalSpec::Deterministic { value }
    }

    pub fn lattice(span: f64, weights: Vec<f64>) -> Self {
        MarginalSpec::Lattice { span, weights }
    }

    pub fn shifted_uniform(lo: f64, hi: f64) -> Self {
        MarginalSpec::ShiftedUniform { lo, hi }
    }

    /// Checks parameter admissibility. Error paths are relative to the spec.
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginalSpec::Exponential { rate } => positive(rate, "rate"),
            MarginalSpec::Gamma { shape, rate } => {
                positive(shape, "shape")?;
                positive(rate, "rate")
            }
            MarginalSpec::Deterministic { value } => positive(value, "value"),
            MarginalSpec::Lattice { span, ref weights } => {
                positive(span, "span")?;
                if weights.is_empty() {
                    return Err(Error::config("weights", "must not be empty"));
                }
                for (k, w) in weights.iter().enumerate() {
                    if !(w.is_finite() && *w >= 0.0) {
                        return Err(Error::config(
                            format!("weights[{k}]"),
                            format!("must be a nonnegative probability, got {w}"),
                        ));
                    }
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::config("weights", format!("must sum to 1, got {total}")));
                }
                Ok(())
            }
            MarginalSpec::ShiftedUniform { lo, hi } => {
                if !(lo.is_finite() && lo >= 0.0) {
                    return Err(Error::config("lo", format!("must be finite and >= 0, got {lo}")));
                }
                if !(hi.is_finite() && hi > lo) {
                    return Err(Error::config("hi", format!("must be finite and > lo, got {hi}")));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginalSpec::Exponential { rate } => 1.0 / rate,
            MarginalSpec::Gamma { shape, rate } => shape / rate,
            MarginalSpec::Deterministic { value } => value,
            MarginalSpec::Lattice { span, ref weights } => {
                span * weights.iter().enumerate().map(|(k, w)| (k + 1) as f64 * w).sum::<f64>()
            }
            MarginalSpec::ShiftedUniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// E[T^2].
    pub fn second_moment(&self) -> f64 {
        match *self {
            MarginalSpec::Exponential { rate } => 2.0 / (rate * rate),
            MarginalSpec::Gamma { shape, rate } => shape * (shape + 1.0) / (rate * rate),
            MarginalSpec::Deterministic { value } => value * value,
            MarginalSpec::Lattice { span, ref weights } => {
                span * span * weights.iter().enumerate().map(|(k, w)| ((k + 1) as f64).powi(2) * w).sum::<f64>()
            }
            MarginalSpec::ShiftedUniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
        }
    }

    pub fn variance(&self) -> f64 {
        self.second_moment() - self.mean().powi(2)
    }

    /// True for laws concentrated on a lattice `{d, 2d, ...}`.
    pub fn is_arithmetic(&self) -> bool {
        matches!(self, MarginalSpec::Deterministic { .. } | MarginalSpec::Lattice { .. })
    }

    /// Upper end of the support, when finite.
    pub fn support_max(&self) -> Option<f64> {
        match *self {
            MarginalSpec::Exponential { .. } | MarginalSpec::Gamma { .. } => None,
            MarginalSpec::Deterministic { value } => Some(value),
            MarginalSpec::Lattice { span, ref weights } => {
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                Some(span * (last + 1) as f64)
            }
            MarginalSpec::ShiftedUniform { hi, .. } => Some(hi),
        }
    }

    /// Points where the CDF is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            MarginalSpec::Exponential { .. } | MarginalSpec::Gamma { .. } => Vec::new(),
            MarginalSpec::Deterministic { value } => vec![value],
            MarginalSpec::Lattice { span, ref weights } => (1..=weights.len()).map(|k| span * k as f64).collect(),
            MarginalSpec::ShiftedUniform { lo, hi } => vec![lo, hi],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            MarginalSpec::Exponential { rate } => -(-rate * x).exp_m1(),
            MarginalSpec::Gamma { shape, rate } => gamma_p(shape, rate * x),
            MarginalSpec::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            MarginalSpec::Lattice { span, ref weights } => {
                let atoms = ((x / span).floor() as usize).min(weights.len());
                weights[..atoms].iter().sum::<f64>().min(1.0)
            }
            MarginalSpec::ShiftedUniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// P(T > x), computed without cancellation where it matters.
    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match *self {
            MarginalSpec::Exponential { rate } => (-rate * x).exp(),
            MarginalSpec::Gamma { shape, rate } => gamma_q(shape, rate * x),
            MarginalSpec::Lattice { span, ref weights } => {
                let atoms = ((x / span).floor() as usize).min(weights.len());
                weights[atoms..].iter().sum::<f64>().min(1.0)
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Generalized inverse CDF, `inf { x : F(x) >= u }`, for `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            MarginalSpec::Exponential { rate } => -(-u).ln_1p() / rate,
            MarginalSpec::Gamma { shape, rate } => {
                statrs::distribution::Gamma::new(shape, rate).expect("validated gamma parameters").inverse_cdf(u)
            }
            MarginalSpec::Deterministic { value } => value,
            MarginalSpec::Lattice { span, ref weights } => {
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if acc >= u && *w > 0.0 {
                        return span * (k + 1) as f64;
                    }
                }
                self.support_max().unwrap_or(span)
            }
            MarginalSpec::ShiftedUniform { lo, hi } => lo + (hi - lo) * u,
        }
    }

    /// One draw by the fastest exact method for the kind.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            MarginalSpec::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            MarginalSpec::Gamma { shape, rate } => {
                Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters").sample(rng)
            }
            MarginalSpec::Deterministic { value } => value,
            MarginalSpec::Lattice { .. } => self.quantile(rng.open01()),
            MarginalSpec::ShiftedUniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// Draw from `spec` (see [`MarginalSpec::sample`]) after validating it.
pub fn sample_marginal(spec: &MarginalSpec, rng: &mut RngStream) -> Result<f64> {
    spec.validate()?;
    Ok(spec.sample(rng))
}

/// Exact mean of `spec`.
pub fn marginal_mean(spec: &MarginalSpec) -> f64 {
    spec.mean()
}
