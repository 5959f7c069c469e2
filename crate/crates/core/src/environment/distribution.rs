use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{FppError, Result};

/// An atomless edge-weight law supported in `[0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightDistribution {
    /// Uniform on `[a, b]`, `0 ≤ a < b`.
    Uniform { a: f64, b: f64 },
    /// Uniform on `[a, b]` with `a > 0`; weights are bounded away from zero.
    BoundedAway { a: f64, b: f64 },
    Exponential { rate: f64 },
    /// `N(mean, sd²)` conditioned to be nonnegative.
    TruncatedGaussian { mean: f64, sd: f64 },
}

/// Config form of a distribution: a `kind` plus parameters.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDescriptor {
    pub kind: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub sd: Option<f64>,
}

impl DistributionDescriptor {
    pub fn build(&self) -> Result<WeightDistribution> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| FppError::Config(format!("distribution `{}` needs `{name}`", self.kind)))
        };
        let d = match self.kind.as_str() {
            "uniform" => WeightDistribution::Uniform {
                a: need(self.a, "a")?,
                b: need(self.b, "b")?,
            },
            "bounded-away" => WeightDistribution::BoundedAway {
                a: need(self.a, "a")?,
                b: need(self.b, "b")?,
            },
            "exponential" => WeightDistribution::Exponential {
                rate: need(self.rate, "rate")?,
            },
            "truncated-gaussian" => WeightDistribution::TruncatedGaussian {
                mean: need(self.mean, "mean")?,
                sd: need(self.sd, "sd")?,
            },
            "discrete" | "bernoulli" | "constant" | "point-mass" | "atomic" => {
                return Err(FppError::Config(format!(
                    "distribution `{}` has atoms; edge weights must be atomless so that geodesics are a.s. unique",
                    self.kind
                )))
            }
            other => return Err(FppError::Config(format!("unknown distribution kind `{other}`"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightDistribution::Uniform { a, b } => a >= 0.0 && a < b && b.is_finite(),
            WeightDistribution::BoundedAway { a, b } => a > 0.0 && a < b && b.is_finite(),
            WeightDistribution::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            WeightDistribution::TruncatedGaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(FppError::Config(format!("invalid parameters for {self}")))
        }
    }

    /// `(α, Z)` of the truncated Gaussian: standardized floor and the mass
    /// above it.
    fn gaussian_floor(mean: f64, sd: f64) -> (f64, f64) {
        let alpha = -mean / sd;
        (alpha, std_normal().sf(alpha))
    }

    /// Quantile function on `(0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match *self {
            WeightDistribution::Uniform { a, b } | WeightDistribution::BoundedAway { a, b } => a + u * (b - a),
            WeightDistribution::Exponential { rate } => -(-u).ln_1p() / rate,
            WeightDistribution::TruncatedGaussian { mean, sd } => {
                let (alpha, z) = Self::gaussian_floor(mean, sd);
                let n = std_normal();
                let x = if alpha > 0.0 {
                    // floor in the upper tail: work with survival probabilities
                    mean - sd * n.inverse_cdf((1.0 - u) * z)
                } else {
                    mean + sd * n.inverse_cdf(n.cdf(alpha) + u * z)
                };
                x.max(f64::MIN_POSITIVE)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            WeightDistribution::Uniform { a, b } | WeightDistribution::BoundedAway { a, b } => {
                ((x - a) / (b - a)).clamp(0.0, 1.0)
            }
            _ if x <= 0.0 => 0.0,
            WeightDistribution::Exponential { rate } => -(-rate * x).exp_m1(),
            WeightDistribution::TruncatedGaussian { mean, sd } => {
                let (alpha, z) = Self::gaussian_floor(mean, sd);
                let n = std_normal();
                if alpha > 0.0 {
                    (1.0 - n.sf((x - mean) / sd) / z).clamp(0.0, 1.0)
                } else {
                    ((n.cdf((x - mean) / sd) - n.cdf(alpha)) / z).clamp(0.0, 1.0)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WeightDistribution::Uniform { a, b } | WeightDistribution::BoundedAway { a, b } => 0.5 * (a + b),
            WeightDistribution::Exponential { rate } => 1.0 / rate,
            WeightDistribution::TruncatedGaussian { mean, sd } => {
                let (alpha, z) = Self::gaussian_floor(mean, sd);
                mean + sd * std_normal().pdf(alpha) / z
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            WeightDistribution::Uniform { a, b } | WeightDistribution::BoundedAway { a, b } => (b - a).powi(2) / 12.0,
            WeightDistribution::Exponential { rate } => 1.0 / (rate * rate),
            WeightDistribution::TruncatedGaussian { mean, sd } => {
                let (alpha, z) = Self::gaussian_floor(mean, sd);
                let h = std_normal().pdf(alpha) / z;
                sd * sd * (1.0 + alpha * h - h * h)
            }
        }
    }

    /// Essential infimum of the support.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            WeightDistribution::Uniform { a, .. } | WeightDistribution::BoundedAway { a, .. } => a,
            _ => 0.0,
        }
    }

    /// Essential supremum (infinite for unbounded laws).
    pub fn upper_bound(&self) -> f64 {
        match *self {
            WeightDistribution::Uniform { b, .. } | WeightDistribution::BoundedAway { b, .. } => b,
            _ => f64::INFINITY,
        }
    }

    /// All catalog laws except the exponential have sub-Gaussian tails.
    pub fn is_sub_gaussian(&self) -> bool {
        !matches!(self, WeightDistribution::Exponential { .. })
    }

    /// Note attached to reports for laws outside the sub-Gaussian hypothesis.
    pub fn hypothesis_note(&self) -> Option<&'static str> {
        (!self.is_sub_gaussian()).then_some("beyond sub-Gaussian hypothesis")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WeightDistribution::Uniform { .. } => "uniform",
            WeightDistribution::BoundedAway { .. } => "bounded-away",
            WeightDistribution::Exponential { .. } => "exponential",
            WeightDistribution::TruncatedGaussian { .. } => "truncated-gaussian",
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WeightDistribution::Uniform { a, b } => write!(f, "uniform({a}, {b})"),
            WeightDistribution::BoundedAway { a, b } => write!(f, "bounded-away({a}, {b})"),
            WeightDistribution::Exponential { rate } => write!(f, "exponential({rate})"),
            WeightDistribution::TruncatedGaussian { mean, sd } => write!(f, "truncated-gaussian({mean}, {sd})"),
        }
    }
}
