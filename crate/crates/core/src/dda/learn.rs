//! Tabular Q-learning of the clock step size.
//!
//! An episode is one auction. The agent picks a step multiplier whenever the
//! discretized state changes and keeps it until the next change; a single
//! clock move rarely leaves its state bin, so per-move decisions would make
//! every multiplier look alike. Each held segment costs `round_cost` per move
//! and the auction's welfare arrives at the end, so an episode's return is
//! `welfare - round_cost * rounds`. Updates are one-step (semi-Markov)
//! Q-learning applied backwards over the segments.
//!
//! The instance's maximum achievable welfare is subtracted from the terminal
//! reward before updating. It does not depend on the agent's actions, so the
//! greedy policy targets the same objective, but Q-values stop carrying the
//! instance-to-instance spread in market size.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::auction::{oracle_max_welfare, run_dda_with, DdaInstance};
use super::controller::{ClockController, ClockObservation, LearnedController, QTable, StateCoder, StepRule};
use super::DdaError;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Welfare units charged per clock move.
    pub round_cost: f64,
    pub learning_rate: f64,
    pub discount: f64,
    /// Exploration rate, decayed linearly from start to end over training.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub base_step: f64,
    pub multipliers: Vec<f64>,
    pub coder: StateCoder,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 20000,
            round_cost: 0.001,
            learning_rate: 0.05,
            discount: 1.0,
            epsilon_start: 0.3,
            epsilon_end: 0.0,
            base_step: 0.25,
            multipliers: vec![0.5, 1.0, 2.0, 4.0],
            coder: StateCoder::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DdaError> {
        if self.episodes == 0 {
            return Err(DdaError::invalid("episodes", "must be at least 1"));
        }
        if self.multipliers.is_empty() {
            return Err(DdaError::invalid("multipliers", "action set is empty"));
        }
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(DdaError::invalid(
                "base_step",
                format!("must be positive, got {}", self.base_step),
            ));
        }
        if !(self.round_cost >= 0.0 && self.round_cost.is_finite()) {
            return Err(DdaError::invalid(
                "round_cost",
                format!("must be non-negative, got {}", self.round_cost),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(DdaError::invalid(
                "learning_rate",
                format!("must be in (0, 1], got {}", self.learning_rate),
            ));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(DdaError::invalid(
                "discount",
                format!("must be in [0, 1], got {}", self.discount),
            ));
        }
        for (field, eps) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(DdaError::invalid(field, format!("must be in [0, 1], got {eps}")));
            }
        }
        Ok(())
    }

    fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_start;
        }
        let t = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Per-episode training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub reward: f64,
    pub welfare: f64,
    pub rounds: usize,
}

struct Exploring<'a> {
    table: &'a QTable,
    base_step: f64,
    epsilon: f64,
    rng: &'a mut RngStream,
    /// `(state, action, moves)` per held segment.
    path: Vec<(usize, usize, usize)>,
}

impl StepRule for Exploring<'_> {
    fn next_step(&mut self, obs: &ClockObservation) -> f64 {
        let state = self.table.coder.encode(obs);
        if let Some(last) = self.path.last_mut() {
            if last.0 == state {
                last.2 += 1;
                return self.base_step * self.table.multipliers[last.1];
            }
        }
        let action = if self.epsilon > 0.0 && self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..self.table.multipliers.len())
        } else {
            self.table.greedy(state)
        };
        self.path.push((state, action, 1));
        self.base_step * self.table.multipliers[action]
    }
}

/// Trains a greedy step controller on instances drawn from `generator`.
///
/// Returns the controller (exploration off) and one log entry per episode.
pub fn train_q_controller<G>(
    mut generator: G,
    cfg: &TrainConfig,
    rng: &RngStream,
) -> Result<(ClockController, Vec<EpisodeLog>), DdaError>
where
    G: FnMut(usize, &mut RngStream) -> Result<DdaInstance, DdaError>,
{
    cfg.validate()?;
    let mut table = QTable::new(cfg.coder, cfg.multipliers.clone())?;
    let min_step = cfg.base_step * cfg.multipliers.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut instance_rng = rng.substream("instances");
    let mut explore_rng = rng.substream("explore");
    let mut log = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let instance = generator(episode, &mut instance_rng)?;
        let mut policy = Exploring {
            table: &table,
            base_step: cfg.base_step,
            epsilon: cfg.epsilon(episode),
            rng: &mut explore_rng,
            path: Vec::new(),
        };
        let outcome = run_dda_with(&instance, &mut policy, min_step)?;
        let path = std::mem::take(&mut policy.path);
        let reward = outcome.welfare - cfg.round_cost * outcome.rounds as f64;
        let baseline = oracle_max_welfare(&instance.valuations(), &instance.costs());

        for i in (0..path.len()).rev() {
            let (state, action, moves) = path[i];
            let cost = cfg.round_cost * moves as f64;
            let target = if i + 1 == path.len() {
                outcome.welfare - baseline - cost
            } else {
                cfg.discount * table.max_value(path[i + 1].0) - cost
            };
            let q = &mut table.values[state][action];
            *q += cfg.learning_rate * (target - *q);
        }
        log.push(EpisodeLog {
            episode,
            reward,
            welfare: outcome.welfare,
            rounds: outcome.rounds,
        });
    }

    Ok((
        ClockController::Learned(LearnedController {
            base_step: cfg.base_step,
            table,
        }),
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dda::auction::run_dda;

    fn instance() -> DdaInstance {
        DdaInstance::from_values(&[9.3, 7.1, 6.4, 2.0], &[1.2, 3.9, 6.6, 8.0], 0.0, 10.0).unwrap()
    }

    fn single(inst: DdaInstance) -> impl FnMut(usize, &mut RngStream) -> Result<DdaInstance, DdaError> {
        move |_, _| Ok(inst.clone())
    }

    #[test]
    fn rejects_degenerate_configs() {
        let rng = RngStream::new(1, "train");
        let zero = TrainConfig {
            episodes: 0,
            ..TrainConfig::default()
        };
        assert!(train_q_controller(single(instance()), &zero, &rng).is_err());
        let empty = TrainConfig {
            multipliers: vec![],
            ..TrainConfig::default()
        };
        assert!(train_q_controller(single(instance()), &empty, &rng).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            episodes: 200,
            ..TrainConfig::default()
        };
        let rng = RngStream::new(5, "train");
        let (a, la) = train_q_controller(single(instance()), &cfg, &rng).unwrap();
        let (b, lb) = train_q_controller(single(instance()), &cfg, &rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn no_exploration_keeps_default_policy() {
        let cfg = TrainConfig {
            episodes: 50,
            round_cost: 0.0,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            ..TrainConfig::default()
        };
        let (c, _) = train_q_controller(single(instance()), &cfg, &RngStream::new(2, "t")).unwrap();
        let ClockController::Learned(l) = &c else { panic!() };
        for s in 0..l.table.values.len() {
            assert_eq!(l.table.greedy(s), l.table.default_action);
        }
    }

    #[test]
    fn welfare_only_training_matches_base_step() {
        let inst = instance();
        let cfg = TrainConfig {
            episodes: 2000,
            round_cost: 0.0,
            ..TrainConfig::default()
        };
        let (learned, _) = train_q_controller(single(inst.clone()), &cfg, &RngStream::new(11, "t")).unwrap();
        let base = run_dda(&inst, &ClockController::fixed(cfg.base_step)).unwrap();
        let got = run_dda(&inst, &learned).unwrap();
        assert!(got.welfare >= base.welfare - 1e-9, "{} < {}", got.welfare, base.welfare);
    }
}
