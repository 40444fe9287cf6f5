//! Clock step-size controllers.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DdaError;
use crate::rng::RngStream;

/// What a controller sees before choosing the next clock move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockObservation {
    /// `(buyer clock - seller clock) / (p_high - p_low)`, clamped to `[0, 1]`.
    pub spread: f64,
    pub claimed_buyers: f64,
    pub claimed_sellers: f64,
    pub round: usize,
}

/// Anything that can supply the next clock step.
pub trait StepRule {
    fn next_step(&mut self, obs: &ClockObservation) -> f64;
}

/// Mean-reverting step sizes: `d' = clamp(d + theta (mu - d) + sigma eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Starting step; `mu` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
}

/// Discretizes observations into `spread_bins x claim_bins x claim_bins` states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateCoder {
    pub spread_bins: usize,
    pub claim_bins: usize,
}

impl Default for StateCoder {
    fn default() -> Self {
        Self {
            spread_bins: 10,
            claim_bins: 4,
        }
    }
}

fn bucket(x: f64, bins: usize) -> usize {
    ((x.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

impl StateCoder {
    pub fn states(&self) -> usize {
        self.spread_bins * self.claim_bins * self.claim_bins
    }

    pub fn encode(&self, obs: &ClockObservation) -> usize {
        let s = bucket(obs.spread, self.spread_bins);
        let b = bucket(obs.claimed_buyers, self.claim_bins);
        let k = bucket(obs.claimed_sellers, self.claim_bins);
        (s * self.claim_bins + b) * self.claim_bins + k
    }
}

/// Tabular action values over step multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub coder: StateCoder,
    pub multipliers: Vec<f64>,
    /// Action chosen when values tie.
    pub default_action: usize,
    pub values: Vec<Vec<f64>>,
}

impl QTable {
    /// Zero-initialized table. Ties favour the multiplier closest to 1.
    pub fn new(coder: StateCoder, multipliers: Vec<f64>) -> Result<Self, DdaError> {
        if multipliers.is_empty() {
            return Err(DdaError::invalid("multipliers", "action set is empty"));
        }
        if let Some(m) = multipliers.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(DdaError::invalid(
                "multipliers",
                format!("multiplier {m} is not positive"),
            ));
        }
        if coder.spread_bins == 0 || coder.claim_bins == 0 {
            return Err(DdaError::invalid("coder", "bin counts must be positive"));
        }
        let default_action = multipliers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(Self {
            values: vec![vec![0.0; multipliers.len()]; coder.states()],
            coder,
            multipliers,
            default_action,
        })
    }

    pub fn greedy(&self, state: usize) -> usize {
        let row = &self.values[state];
        let mut best = self.default_action;
        for (a, &q) in row.iter().enumerate() {
            if q > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.values[state][self.greedy(state)]
    }
}

/// Greedy policy over a trained table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedController {
    pub base_step: f64,
    pub table: QTable,
}

impl LearnedController {
    pub fn min_step(&self) -> f64 {
        self.base_step * self.table.multipliers.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClockController {
    Fixed { step: f64 },
    Ou { params: OuParams, seed: u64, label: String },
    Learned(LearnedController),
}

/// Builds an OU step controller whose noise comes from `rng`'s key.
pub fn make_ou_controller(params: OuParams, rng: &RngStream) -> Result<ClockController, DdaError> {
    let controller = ClockController::Ou {
        params,
        seed: rng.seed(),
        label: rng.label().to_string(),
    };
    controller.validate()?;
    Ok(controller)
}

impl ClockController {
    pub fn fixed(step: f64) -> Self {
        ClockController::Fixed { step }
    }

    pub fn validate(&self) -> Result<(), DdaError> {
        match self {
            ClockController::Fixed { step } => {
                if !(*step > 0.0 && step.is_finite()) {
                    return Err(DdaError::invalid("step", format!("must be positive, got {step}")));
                }
            }
            ClockController::Ou { params: p, .. } => {
                if !(p.theta > 0.0 && p.theta <= 1.0) {
                    return Err(DdaError::invalid(
                        "theta",
                        format!("must be in (0, 1], got {}", p.theta),
                    ));
                }
                if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
                    return Err(DdaError::invalid(
                        "sigma",
                        format!("must be non-negative, got {}", p.sigma),
                    ));
                }
                if !(p.min_step > 0.0 && p.min_step <= p.mu && p.mu <= p.max_step && p.max_step.is_finite()) {
                    return Err(DdaError::invalid(
                        "min_step",
                        format!(
                            "need 0 < min_step <= mu <= max_step, got {} / {} / {}",
                            p.min_step, p.mu, p.max_step
                        ),
                    ));
                }
                if let Some(init) = p.initial {
                    if !(init > 0.0 && init.is_finite()) {
                        return Err(DdaError::invalid("initial", format!("must be positive, got {init}")));
                    }
                }
            }
            ClockController::Learned(l) => {
                if !(l.base_step > 0.0 && l.base_step.is_finite()) {
                    return Err(DdaError::invalid(
                        "base_step",
                        format!("must be positive, got {}", l.base_step),
                    ));
                }
                let t = &l.table;
                if t.multipliers.is_empty() {
                    return Err(DdaError::invalid("multipliers", "action set is empty"));
                }
                if t.default_action >= t.multipliers.len()
                    || t.values.len() != t.coder.states()
                    || t.values.iter().any(|row| row.len() != t.multipliers.len())
                {
                    return Err(DdaError::invalid(
                        "table",
                        "Q-table shape does not match its coder/action set",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Smallest step this controller can emit.
    pub fn min_step(&self) -> f64 {
        match self {
            ClockController::Fixed { step } => *step,
            ClockController::Ou { params, .. } => params.min_step,
            ClockController::Learned(l) => l.min_step(),
        }
    }

    /// Fresh per-auction state; every call replays the same step sequence.
    pub fn start(&self) -> ControllerRun<'_> {
        match self {
            ClockController::Fixed { step } => ControllerRun::Fixed(*step),
            ClockController::Ou { params, seed, label } => ControllerRun::Ou {
                params,
                current: params
                    .initial
                    .unwrap_or(params.mu)
                    .clamp(params.min_step, params.max_step),
                rng: RngStream::new(*seed, label.clone()),
            },
            ClockController::Learned(l) => ControllerRun::Learned(l),
        }
    }
}

/// Mutable state of a controller during one auction.
#[derive(Debug)]
pub enum ControllerRun<'a> {
    Fixed(f64),
    Ou {
        params: &'a OuParams,
        current: f64,
        rng: RngStream,
    },
    Learned(&'a LearnedController),
}

impl StepRule for ControllerRun<'_> {
    fn next_step(&mut self, obs: &ClockObservation) -> f64 {
        match self {
            ControllerRun::Fixed(step) => *step,
            ControllerRun::Ou { params, current, rng } => {
                let step = *current;
                let eps: f64 = if params.sigma > 0.0 {
                    StandardNormal.sample(rng)
                } else {
                    0.0
                };
                *current = (*current + params.theta * (params.mu - *current) + params.sigma * eps)
                    .clamp(params.min_step, params.max_step);
                step
            }
            ControllerRun::Learned(l) => {
                let state = l.table.coder.encode(obs);
                l.base_step * l.table.multipliers[l.table.greedy(state)]
            }
        }
    }
}
