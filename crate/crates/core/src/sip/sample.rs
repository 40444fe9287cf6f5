use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::model::DemandModel;
use super::SipError;
use crate::rng::RngStream;

/// Demand distribution of a single resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Marginal {
    UniformInteger {
        low: u64,
        high: u64,
    },
    /// `round(max(0, N(mean, std_dev)))`.
    DiscretizedNormal {
        mean: f64,
        std_dev: f64,
    },
}

impl Marginal {
    fn validate(&self) -> Result<(), SipError> {
        match *self {
            Marginal::UniformInteger { low, high } if low > high => Err(SipError::invalid(
                "low",
                format!("uniform-integer bounds [{low}, {high}] are inverted"),
            )),
            Marginal::DiscretizedNormal { mean, std_dev }
                if !(std_dev >= 0.0 && mean.is_finite() && std_dev.is_finite()) =>
            {
                Err(SipError::invalid(
                    "std_dev",
                    format!("must be non-negative, got {std_dev}"),
                ))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut RngStream) -> u64 {
        match *self {
            Marginal::UniformInteger { low, high } => rng.gen_range(low..=high),
            Marginal::DiscretizedNormal { mean, std_dev } => {
                let z = if std_dev == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std_dev).expect("validated").sample(rng)
                };
                z.max(0.0).round() as u64
            }
        }
    }
}

/// How scenario demand vectors are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Independent marginals, one per resource.
    Independent { marginals: Vec<Marginal> },
    /// Resample whole demand vectors from a history.
    Empirical { trace: Vec<Vec<u64>> },
}

impl DistributionSpec {
    pub fn resources(&self) -> Option<usize> {
        match self {
            DistributionSpec::Independent { marginals } => Some(marginals.len()),
            DistributionSpec::Empirical { trace } => trace.first().map(Vec::len),
        }
    }

    /// One demand vector.
    pub fn draw(&self, rng: &mut RngStream) -> Vec<u64> {
        match self {
            DistributionSpec::Independent { marginals } => marginals.iter().map(|m| m.draw(rng)).collect(),
            DistributionSpec::Empirical { trace } => trace[rng.gen_range(0..trace.len())].clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SipError> {
        match self {
            DistributionSpec::Independent { marginals } => {
                if marginals.is_empty() {
                    return Err(SipError::invalid("marginals", "at least one resource is required"));
                }
                marginals.iter().try_for_each(Marginal::validate)
            }
            DistributionSpec::Empirical { trace } => {
                let first = trace.first().ok_or(SipError::EmptyTrace)?;
                match trace.iter().find(|row| row.len() != first.len()) {
                    Some(row) => Err(SipError::Dimension {
                        expected: first.len(),
                        found: row.len(),
                    }),
                    None => Ok(()),
                }
            }
        }
    }
}

/// `n` equiprobable scenarios. An empirical spec with `n == trace.len()`
/// returns the trace itself.
pub fn sample_scenarios(spec: &DistributionSpec, n: usize, rng: &mut RngStream) -> Result<DemandModel, SipError> {
    if n == 0 {
        return Err(SipError::invalid("n", "at least one scenario is required"));
    }
    spec.validate()?;
    let demands = match spec {
        DistributionSpec::Empirical { trace } if trace.len() == n => trace.clone(),
        _ => (0..n).map(|_| spec.draw(rng)).collect(),
    };
    DemandModel::uniform(demands)
}
