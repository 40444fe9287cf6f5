//! Multi-population replicator dynamics for the sensing market.
//!
//! Sensing service providers (SSPs) are grouped into populations. Each
//! population splits its members across virtual regions; a region's reward
//! pool is shared among the capability-weighted mass serving it, and shares
//! flow toward regions whose payoff beats the population average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|sum(shares) - 1|` for every population.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EvoError {
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("invalid population state: {0}")]
    InvalidState(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("simplex drift {drift:e} in population {population} at step {step}; reduce the step size")]
    SimplexDrift { step: usize, population: usize, drift: f64 },
}

/// A virtual region and the reward pool its operator posts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VspRegion {
    pub id: String,
    /// Currency per epoch shared among the SSPs serving the region.
    pub reward_pool: f64,
    /// Uploads per epoch per unit of serving mass.
    pub sync_coeff: f64,
}

/// A cluster of SSPs with common capability and cost profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SspPopulation {
    pub id: String,
    pub size: u64,
    pub capability: f64,
    /// Per-region service cost (energy, travel from the starting location).
    pub cost: Vec<f64>,
    pub learning_rate: f64,
}

/// Strategy shares `x[p][v]`, one simplex vector per population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    shares: Vec<Vec<f64>>,
}

impl PopulationState {
    /// Builds a state, rejecting any row that is off the simplex.
    pub fn new(shares: Vec<Vec<f64>>) -> Result<Self, EvoError> {
        for (p, row) in shares.iter().enumerate() {
            if row.is_empty() {
                return Err(EvoError::InvalidState(format!("population {p} has no regions")));
            }
            if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(EvoError::InvalidState(format!(
                    "population {p} has share {x} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(EvoError::InvalidState(format!("population {p} shares sum to {sum}")));
            }
        }
        Ok(Self { shares })
    }

    /// Every population spread evenly over `regions` regions.
    pub fn uniform(populations: usize, regions: usize) -> Self {
        let row = vec![1.0 / regions as f64; regions];
        Self {
            shares: vec![row; populations],
        }
    }

    pub fn shares(&self) -> &[Vec<f64>] {
        &self.shares
    }

    pub fn share(&self, p: usize, v: usize) -> f64 {
        self.shares[p][v]
    }

    pub fn populations(&self) -> usize {
        self.shares.len()
    }

    /// Largest componentwise difference to `other`.
    pub fn max_abs_diff(&self, other: &PopulationState) -> f64 {
        self.shares
            .iter()
            .flatten()
            .zip(other.shares.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Regions plus populations: everything the payoff function needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingGame {
    regions: Vec<VspRegion>,
    populations: Vec<SspPopulation>,
}

/// Fixed-step integration settings for [`SensingGame::evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub step: f64,
    pub tol: f64,
    pub max_steps: usize,
    /// Record every n-th step in the trajectory (the final state is always kept).
    pub record_every: usize,
}

impl Default for Integration {
    fn default() -> Self {
        Self {
            step: 0.01,
            tol: 1e-6,
            max_steps: 1_000_000,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: PopulationState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub converged: bool,
    pub steps: usize,
    /// `payoffs[p][v]` at the final state.
    pub final_payoffs: Vec<Vec<f64>>,
    /// Largest `|sum - 1|` seen before renormalization, over all steps.
    pub max_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &PopulationState {
        &self.points.last().expect("trajectory always has a point").state
    }
}

/// One grid point of a reward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub reward: f64,
    pub state: PopulationState,
    /// Serving mass per region.
    pub masses: Vec<f64>,
    /// Sync frequency per region.
    pub frequencies: Vec<f64>,
    pub converged: bool,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> EvoError {
    EvoError::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}

impl SensingGame {
    pub fn new(regions: Vec<VspRegion>, populations: Vec<SspPopulation>) -> Result<Self, EvoError> {
        if regions.is_empty() {
            return Err(invalid("regions", "at least one region is required"));
        }
        if populations.is_empty() {
            return Err(invalid("populations", "at least one population is required"));
        }
        for r in &regions {
            if !(r.reward_pool >= 0.0 && r.reward_pool.is_finite()) {
                return Err(invalid(
                    "reward_pool",
                    format!("region `{}` has {}", r.id, r.reward_pool),
                ));
            }
            if !(r.sync_coeff > 0.0 && r.sync_coeff.is_finite()) {
                return Err(invalid("sync_coeff", format!("region `{}` has {}", r.id, r.sync_coeff)));
            }
        }
        for p in &populations {
            if p.size == 0 {
                return Err(invalid("size", format!("population `{}` is empty", p.id)));
            }
            if !(p.capability > 0.0 && p.capability.is_finite()) {
                return Err(invalid(
                    "capability",
                    format!("population `{}` has {}", p.id, p.capability),
                ));
            }
            if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                return Err(invalid(
                    "learning_rate",
                    format!("population `{}` has {}", p.id, p.learning_rate),
                ));
            }
            if p.cost.len() != regions.len() {
                return Err(invalid(
                    "cost",
                    format!(
                        "population `{}` has {} costs for {} regions",
                        p.id,
                        p.cost.len(),
                        regions.len()
                    ),
                ));
            }
            if let Some(c) = p.cost.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
                return Err(invalid("cost", format!("population `{}` has cost {c}", p.id)));
            }
        }
        Ok(Self { regions, populations })
    }

    pub fn regions(&self) -> &[VspRegion] {
        &self.regions
    }

    pub fn populations(&self) -> &[SspPopulation] {
        &self.populations
    }

    pub fn region_index(&self, id: &str) -> Result<usize, EvoError> {
        self.regions
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| EvoError::UnknownRegion(id.to_string()))
    }

    /// Same game with one region's reward pool replaced.
    pub fn with_reward(&self, v: usize, reward: f64) -> Result<Self, EvoError> {
        let mut regions = self.regions.clone();
        regions[v].reward_pool = reward;
        Self::new(regions, self.populations.clone())
    }

    fn check_shape(&self, state: &PopulationState) -> Result<(), EvoError> {
        if state.populations() != self.populations.len()
            || state.shares.iter().any(|row| row.len() != self.regions.len())
        {
            return Err(EvoError::InvalidState(format!(
                "expected {} populations x {} regions",
                self.populations.len(),
                self.regions.len()
            )));
        }
        Ok(())
    }

    fn mass_raw(&self, shares: &[Vec<f64>], v: usize) -> f64 {
        self.populations
            .iter()
            .zip(shares)
            .map(|(pop, row)| row[v] * pop.size as f64 * pop.capability)
            .sum()
    }

    fn payoff_raw(&self, shares: &[Vec<f64>], p: usize, v: usize) -> f64 {
        let pop = &self.populations[p];
        let mass = self.mass_raw(shares, v).max(pop.capability);
        pop.capability * self.regions[v].reward_pool / mass - pop.cost[v]
    }

    fn derivative_raw(&self, shares: &[Vec<f64>]) -> Vec<Vec<f64>> {
        shares
            .iter()
            .enumerate()
            .map(|(p, row)| {
                let payoffs: Vec<f64> = (0..row.len()).map(|v| self.payoff_raw(shares, p, v)).collect();
                let mean: f64 = row.iter().zip(&payoffs).map(|(x, u)| x * u).sum();
                let rate = self.populations[p].learning_rate;
                row.iter().zip(&payoffs).map(|(x, u)| rate * x * (u - mean)).collect()
            })
            .collect()
    }

    /// Capability-weighted mass `n_v = sum_p x[p][v] * N_p * w_p` serving a region.
    pub fn serving_mass(&self, state: &PopulationState, region: &str) -> Result<f64, EvoError> {
        let v = self.region_index(region)?;
        self.check_shape(state)?;
        Ok(self.mass_raw(&state.shares, v))
    }

    pub fn serving_mass_at(&self, state: &PopulationState, v: usize) -> f64 {
        self.mass_raw(&state.shares, v)
    }

    /// Per-SSP payoff `w_p R_v / max(n_v, w_p) - c[p][v]`.
    ///
    /// The clamp makes a lone deviator into an empty region count its own mass.
    pub fn payoff(&self, state: &PopulationState, p: usize, v: usize) -> f64 {
        self.payoff_raw(&state.shares, p, v)
    }

    pub fn payoffs(&self, state: &PopulationState) -> Vec<Vec<f64>> {
        (0..self.populations.len())
            .map(|p| (0..self.regions.len()).map(|v| self.payoff(state, p, v)).collect())
            .collect()
    }

    /// Replicator rates `delta_p x[p][v] (u[p][v] - mean_p)`.
    pub fn replicator_derivative(&self, state: &PopulationState) -> Vec<Vec<f64>> {
        self.derivative_raw(&state.shares)
    }

    /// Uploads per epoch `kappa_v n_v`.
    pub fn sync_frequency(&self, state: &PopulationState, v: usize) -> f64 {
        self.regions[v].sync_coeff * self.mass_raw(&state.shares, v)
    }

    /// Integrates the replicator flow with classic RK4 until `max |dx/dt| < tol`.
    pub fn evolve(&self, init: &PopulationState, cfg: &Integration) -> Result<Trajectory, EvoError> {
        if !(cfg.step > 0.0 && cfg.step.is_finite()) {
            return Err(invalid("step", format!("must be positive, got {}", cfg.step)));
        }
        if !(cfg.tol >= 0.0) {
            return Err(invalid("tol", format!("must be non-negative, got {}", cfg.tol)));
        }
        self.check_shape(init)?;
        let record_every = cfg.record_every.max(1);
        let h = cfg.step;

        let mut x = init.shares.clone();
        let mut points = vec![TrajectoryPoint {
            time: 0.0,
            state: init.clone(),
        }];
        let mut max_drift = 0.0_f64;
        let mut converged = false;
        let mut steps = 0;

        let axpy = |x: &[Vec<f64>], k: &[Vec<f64>], a: f64| -> Vec<Vec<f64>> {
            x.iter()
                .zip(k)
                .map(|(xr, kr)| xr.iter().zip(kr).map(|(xi, ki)| xi + a * ki).collect())
                .collect()
        };

        while steps < cfg.max_steps {
            let k1 = self.derivative_raw(&x);
            if max_abs(&k1) < cfg.tol {
                converged = true;
                break;
            }
            let k2 = self.derivative_raw(&axpy(&x, &k1, h / 2.0));
            let k3 = self.derivative_raw(&axpy(&x, &k2, h / 2.0));
            let k4 = self.derivative_raw(&axpy(&x, &k3, h));
            for (p, row) in x.iter_mut().enumerate() {
                for v in 0..row.len() {
                    row[v] += h / 6.0 * (k1[p][v] + 2.0 * k2[p][v] + 2.0 * k3[p][v] + k4[p][v]);
                }
            }
            steps += 1;
            for (p, row) in x.iter_mut().enumerate() {
                let drift = renormalize(row).ok_or(EvoError::SimplexDrift {
                    step: steps,
                    population: p,
                    drift: f64::INFINITY,
                })?;
                if drift > SIMPLEX_TOL {
                    return Err(EvoError::SimplexDrift {
                        step: steps,
                        population: p,
                        drift,
                    });
                }
                max_drift = max_drift.max(drift);
            }
            if steps % record_every == 0 {
                points.push(TrajectoryPoint {
                    time: steps as f64 * h,
                    state: PopulationState { shares: x.clone() },
                });
            }
        }
        if !converged && cfg.tol > 0.0 {
            converged = max_abs(&self.derivative_raw(&x)) < cfg.tol;
        }
        if steps % record_every != 0 {
            points.push(TrajectoryPoint {
                time: steps as f64 * h,
                state: PopulationState { shares: x.clone() },
            });
        }
        let final_state = PopulationState { shares: x };
        Ok(Trajectory {
            final_payoffs: self.payoffs(&final_state),
            points,
            converged,
            steps,
            max_drift,
        })
    }

    /// Evolves once per reward value for region `v`; rows come back in grid order.
    pub fn reward_sweep(
        &self,
        region: &str,
        grid: &[f64],
        init: &PopulationState,
        cfg: &Integration,
    ) -> Result<Vec<SweepRow>, EvoError> {
        let v = self.region_index(region)?;
        if let Some(r) = grid.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(invalid("grid", format!("reward {r} is not a non-negative number")));
        }
        grid.par_iter()
            .map(|&reward| {
                let game = self.with_reward(v, reward)?;
                let traj = game.evolve(init, cfg)?;
                let state = traj.final_state().clone();
                let masses = (0..game.regions.len())
                    .map(|w| game.serving_mass_at(&state, w))
                    .collect();
                let frequencies = (0..game.regions.len())
                    .map(|w| game.sync_frequency(&state, w))
                    .collect();
                Ok(SweepRow {
                    reward,
                    state,
                    masses,
                    frequencies,
                    converged: traj.converged,
                })
            })
            .collect()
    }
}

fn max_abs(rates: &[Vec<f64>]) -> f64 {
    rates.iter().flatten().map(|r| r.abs()).fold(0.0, f64::max)
}

/// Clamps round-off negatives and rescales the row onto the simplex.
/// Returns the pre-rescale drift, or `None` for a share below `-SIMPLEX_TOL`.
fn renormalize(row: &mut [f64]) -> Option<f64> {
    for x in row.iter_mut() {
        if *x < -SIMPLEX_TOL || !x.is_finite() {
            return None;
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let sum: f64 = row.iter().sum();
    let drift = (sum - 1.0).abs();
    if drift <= SIMPLEX_TOL {
        row.iter_mut().for_each(|x| *x /= sum);
    }
    Some(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn region(id: &str, reward: f64) -> VspRegion {
        VspRegion {
            id: id.into(),
            reward_pool: reward,
            sync_coeff: 0.2,
        }
    }

    fn pop(size: u64, capability: f64, cost: Vec<f64>) -> SspPopulation {
        SspPopulation {
            id: format!("p{size}"),
            size,
            capability,
            cost,
            learning_rate: 1.0,
        }
    }

    fn two_region_game() -> SensingGame {
        SensingGame::new(
            vec![region("a", 100.0), region("b", 50.0)],
            vec![pop(10, 1.0, vec![0.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn mass_identity_and_split() {
        let game = two_region_game();
        let full = PopulationState::new(vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(game.serving_mass(&full, "a").unwrap(), 10.0);
        let half = PopulationState::uniform(1, 2);
        assert_eq!(game.serving_mass(&half, "a").unwrap(), 5.0);
        assert_eq!(game.serving_mass(&half, "b").unwrap(), 5.0);
        assert_eq!(
            game.serving_mass(&half, "zz"),
            Err(EvoError::UnknownRegion("zz".into()))
        );
    }

    #[test]
    fn mass_is_capability_weighted() {
        let game = SensingGame::new(
            vec![region("v", 1.0), region("w", 1.0)],
            vec![pop(10, 1.0, vec![0.0; 2]), pop(4, 2.0, vec![0.0; 2])],
        )
        .unwrap();
        let state = PopulationState::new(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        assert_abs_diff_eq!(game.serving_mass(&state, "v").unwrap(), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn payoff_cases() {
        let game = SensingGame::new(
            vec![region("a", 0.0), region("b", 50.0)],
            vec![pop(10, 1.0, vec![3.0, 0.0])],
        )
        .unwrap();
        let half = PopulationState::uniform(1, 2);
        assert_eq!(game.payoff(&half, 0, 0), -3.0);

        let game = two_region_game();
        assert_abs_diff_eq!(game.payoff(&half, 0, 0), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(game.payoff(&half, 0, 1), 10.0, epsilon = 1e-12);

        // lone deviator into an empty region sees its own unit mass
        let pure = PopulationState::new(vec![vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(game.payoff(&pure, 0, 1), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn derivative_cases() {
        let game = two_region_game();
        let d = game.replicator_derivative(&PopulationState::uniform(1, 2));
        assert_abs_diff_eq!(d[0][0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d[0][1], -2.5, epsilon = 1e-12);

        let pure = PopulationState::new(vec![vec![0.0, 1.0]]).unwrap();
        assert!(max_abs(&game.replicator_derivative(&pure)) < 1e-12);

        let equal = SensingGame::new(
            vec![region("a", 40.0), region("b", 40.0)],
            vec![pop(10, 1.0, vec![1.0, 1.0])],
        )
        .unwrap();
        assert!(max_abs(&equal.replicator_derivative(&PopulationState::uniform(1, 2))) < 1e-12);
    }

    #[test]
    fn sync_frequency_cases() {
        let game = SensingGame::new(
            vec![region("a", 10.0), region("b", 10.0)],
            vec![pop(10, 1.0, vec![0.0; 2])],
        )
        .unwrap();
        let pure = PopulationState::new(vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(game.sync_frequency(&pure, 1), 0.0);
        assert_abs_diff_eq!(game.sync_frequency(&pure, 0), 2.0, epsilon = 1e-12);
        let mut regions = game.regions().to_vec();
        regions[0].sync_coeff = 0.4;
        let doubled = SensingGame::new(regions, game.populations().to_vec()).unwrap();
        assert_abs_diff_eq!(doubled.sync_frequency(&pure, 0), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_converges_to_reward_ratio() {
        let game = two_region_game();
        let traj = game
            .evolve(&PopulationState::uniform(1, 2), &Integration::default())
            .unwrap();
        assert!(traj.converged);
        let x = traj.final_state();
        assert_abs_diff_eq!(x.share(0, 0), 2.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(x.share(0, 1), 1.0 / 3.0, epsilon = 1e-3);
        assert!(traj.points.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn symmetric_game_stays_put() {
        let game = SensingGame::new(
            vec![region("a", 30.0), region("b", 30.0)],
            vec![pop(6, 1.0, vec![1.0, 1.0])],
        )
        .unwrap();
        let traj = game
            .evolve(&PopulationState::uniform(1, 2), &Integration::default())
            .unwrap();
        assert!(traj.converged);
        assert_abs_diff_eq!(traj.final_state().share(0, 0), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn zero_tolerance_never_converges() {
        let game = two_region_game();
        let cfg = Integration {
            tol: 0.0,
            max_steps: 500,
            ..Integration::default()
        };
        let traj = game.evolve(&PopulationState::uniform(1, 2), &cfg).unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.steps, 500);
        assert_abs_diff_eq!(traj.points.last().unwrap().time, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn oversized_step_is_reported() {
        let game = two_region_game();
        let cfg = Integration {
            step: 5.0,
            ..Integration::default()
        };
        let err = game.evolve(&PopulationState::uniform(1, 2), &cfg).unwrap_err();
        assert!(matches!(err, EvoError::SimplexDrift { .. }), "{err:?}");
    }

    #[test]
    fn sweep_edge_cases() {
        let game = two_region_game();
        let init = PopulationState::uniform(1, 2);
        let cfg = Integration::default();
        assert!(game.reward_sweep("a", &[], &init, &cfg).unwrap().is_empty());
        let rows = game.reward_sweep("a", &[80.0], &init, &cfg).unwrap();
        let alone = game.with_reward(0, 80.0).unwrap().evolve(&init, &cfg).unwrap();
        assert_eq!(&rows[0].state, alone.final_state());
        assert!(game.reward_sweep("a", &[-1.0], &init, &cfg).is_err());
        assert!(game.reward_sweep("nope", &[1.0], &init, &cfg).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SensingGame::new(vec![region("a", -5.0)], vec![pop(1, 1.0, vec![0.0])]).is_err());
        assert!(SensingGame::new(vec![region("a", 5.0)], vec![pop(0, 1.0, vec![0.0])]).is_err());
        assert!(SensingGame::new(vec![region("a", 5.0)], vec![pop(1, 1.0, vec![0.0, 1.0])]).is_err());
        assert!(PopulationState::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(PopulationState::new(vec![vec![1.5, -0.5]]).is_err());
    }
}
