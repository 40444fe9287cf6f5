//! JSON experiment configuration.
//!
//! Unknown keys are rejected everywhere. Validation builds every domain
//! object once so errors surface before any simulation starts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dda::{
    make_ou_controller, ClockController, DdaError, DdaInstanceFile, InstanceGenerator, OuParams, TrainConfig,
};
use crate::evo::{EvoError, Integration, PopulationState, SensingGame, SspPopulation, VspRegion};
use crate::rng::RngStream;
use crate::sip::{DemandModel, RandomSipSpec, SipError, SipInstanceFile};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Parse(_) => None,
        }
    }
}

impl From<EvoError> for ConfigError {
    fn from(e: EvoError) -> Self {
        match e {
            EvoError::InvalidParameter { field, reason } => ConfigError::Invalid { field, reason },
            other => ConfigError::invalid("evo", other.to_string()),
        }
    }
}

impl From<DdaError> for ConfigError {
    fn from(e: DdaError) -> Self {
        match e {
            DdaError::InvalidParameter { field, reason } => ConfigError::Invalid { field, reason },
            DdaError::PriceBounds { .. } => ConfigError::invalid("p_low", e.to_string()),
            other => ConfigError::invalid("dda", other.to_string()),
        }
    }
}

impl From<SipError> for ConfigError {
    fn from(e: SipError) -> Self {
        match e {
            SipError::InvalidParameter { field, reason } => ConfigError::Invalid { field, reason },
            SipError::Infeasible(_) => ConfigError::invalid("budget", e.to_string()),
            SipError::EmptyTrace => ConfigError::invalid("trace", e.to_string()),
            SipError::NoScenarios => ConfigError::invalid("scenarios", e.to_string()),
            other => ConfigError::invalid("sip", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    pub mechanism: MechanismConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub dir: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self { dir: "results".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismConfig {
    Evo(EvoConfig),
    Dda(DdaConfig),
    Sip(SipConfig),
}

impl MechanismConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismConfig::Evo(_) => "evo",
            MechanismConfig::Dda(_) => "dda",
            MechanismConfig::Sip(_) => "sip",
        }
    }
}

fn d_step() -> f64 {
    0.01
}
fn d_tol() -> f64 {
    1e-6
}
fn d_max_steps() -> usize {
    1_000_000
}
fn d_record_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvoConfig {
    pub regions: Vec<VspRegion>,
    pub populations: Vec<SspPopulation>,
    /// Initial shares per population; uniform when absent.
    #[serde(default)]
    pub init: Option<Vec<Vec<f64>>>,
    #[serde(default = "d_step")]
    pub step: f64,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    #[serde(default = "d_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub region: String,
    pub grid: Vec<f64>,
}

impl EvoConfig {
    pub fn game(&self) -> Result<SensingGame, EvoError> {
        SensingGame::new(self.regions.clone(), self.populations.clone())
    }

    pub fn initial_state(&self) -> Result<PopulationState, EvoError> {
        match &self.init {
            Some(rows) => PopulationState::new(rows.clone()),
            None => Ok(PopulationState::uniform(self.populations.len(), self.regions.len())),
        }
    }

    pub fn integration(&self) -> Integration {
        Integration {
            step: self.step,
            tol: self.tol,
            max_steps: self.max_steps,
            record_every: self.record_every,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let game = self.game()?;
        let init = self.initial_state()?;
        if init.populations() != self.populations.len() || init.shares().iter().any(|r| r.len() != self.regions.len()) {
            return Err(ConfigError::invalid(
                "init",
                "shape does not match populations x regions",
            ));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(ConfigError::invalid(
                "step",
                format!("must be positive, got {}", self.step),
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(ConfigError::invalid(
                "tol",
                format!("must be non-negative, got {}", self.tol),
            ));
        }
        if let Some(sweep) = &self.sweep {
            game.region_index(&sweep.region)
                .map_err(|e| ConfigError::invalid("sweep.region", e.to_string()))?;
            if let Some(r) = sweep.grid.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
                return Err(ConfigError::invalid(
                    "sweep.grid",
                    format!("reward {r} must be non-negative"),
                ));
            }
        }
        Ok(())
    }
}

/// A named step controller as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControllerConfig {
    Fixed {
        name: String,
        step: f64,
    },
    Ou {
        name: String,
        theta: f64,
        mu: f64,
        sigma: f64,
        min_step: f64,
        max_step: f64,
        #[serde(default)]
        initial: Option<f64>,
    },
    Learned {
        name: String,
        #[serde(default)]
        train: TrainConfig,
        /// Pre-trained table written by `dda train`; skips training.
        #[serde(default)]
        qtable: Option<String>,
    },
}

impl ControllerConfig {
    pub fn name(&self) -> &str {
        match self {
            ControllerConfig::Fixed { name, .. }
            | ControllerConfig::Ou { name, .. }
            | ControllerConfig::Learned { name, .. } => name,
        }
    }

    /// Controller for non-learned kinds; the OU noise stream is keyed by the seed and name.
    pub fn build_static(&self, seed: u64) -> Result<Option<ClockController>, DdaError> {
        match self {
            ControllerConfig::Fixed { step, .. } => {
                let c = ClockController::fixed(*step);
                c.validate()?;
                Ok(Some(c))
            }
            ControllerConfig::Ou {
                name,
                theta,
                mu,
                sigma,
                min_step,
                max_step,
                initial,
            } => make_ou_controller(
                OuParams {
                    theta: *theta,
                    mu: *mu,
                    sigma: *sigma,
                    min_step: *min_step,
                    max_step: *max_step,
                    initial: *initial,
                },
                &RngStream::new(seed, format!("dda/ou/{name}")),
            )
            .map(Some),
            ControllerConfig::Learned { .. } => Ok(None),
        }
    }
}

fn default_controllers() -> Vec<ControllerConfig> {
    vec![
        ControllerConfig::Fixed {
            name: "fixed".into(),
            step: 0.25,
        },
        ControllerConfig::Ou {
            name: "ou".into(),
            theta: 0.3,
            mu: 0.5,
            sigma: 0.2,
            min_step: 0.125,
            max_step: 1.0,
            initial: None,
        },
        ControllerConfig::Learned {
            name: "learned".into(),
            train: TrainConfig::default(),
            qtable: None,
        },
    ]
}

fn default_bitrates() -> Vec<f64> {
    vec![1.0, 25.0, 50.0, 100.0, 250.0]
}

fn default_count() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdaConfig {
    /// Inline instances for `dda run`.
    #[serde(default)]
    pub instances: Vec<DdaInstanceFile>,
    /// Instance files, relative to the config file.
    #[serde(default)]
    pub instance_files: Vec<String>,
    #[serde(default)]
    pub generator: InstanceGenerator,
    /// Generated instances per bitrate (`dda compare`) or in total (`dda run`
    /// without explicit instances).
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_bitrates")]
    pub bitrates: Vec<f64>,
    #[serde(default = "default_controllers")]
    pub controllers: Vec<ControllerConfig>,
}

impl DdaConfig {
    fn validate(&self, seed: u64) -> Result<(), ConfigError> {
        for inst in &self.instances {
            inst.build()?;
        }
        self.generator.validate()?;
        if self.count == 0 {
            return Err(ConfigError::invalid("count", "must be at least 1"));
        }
        if let Some(b) = self.bitrates.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(ConfigError::invalid(
                "bitrates",
                format!("bitrate {b} must be non-negative"),
            ));
        }
        if self.controllers.is_empty() {
            return Err(ConfigError::invalid(
                "controllers",
                "at least one controller is required",
            ));
        }
        let mut names: Vec<&str> = Vec::new();
        for c in &self.controllers {
            if names.contains(&c.name()) {
                return Err(ConfigError::invalid(
                    "controllers",
                    format!("duplicate name `{}`", c.name()),
                ));
            }
            names.push(c.name());
            c.build_static(seed)?;
            if let ControllerConfig::Learned { train, .. } = c {
                train.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SipConfig {
    #[serde(default)]
    pub instances: Vec<SipInstanceFile>,
    /// Instance files, relative to the config file.
    #[serde(default)]
    pub instance_files: Vec<String>,
    /// Seeded random instances appended after the explicit ones.
    #[serde(default)]
    pub random: Option<RandomSipSpec>,
}

impl SipConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        for inst in &self.instances {
            validate_sip_file(inst)?;
        }
        if let Some(r) = &self.random {
            r.validate()?;
        }
        if self.instances.is_empty() && self.instance_files.is_empty() && self.random.is_none() {
            return Err(ConfigError::invalid(
                "instances",
                "no instances, instance files or random spec given",
            ));
        }
        Ok(())
    }
}

/// Checks an instance file without sampling anything.
pub fn validate_sip_file(inst: &SipInstanceFile) -> Result<(), ConfigError> {
    if inst.resources.is_empty() {
        return Err(ConfigError::invalid("resources", "at least one resource is required"));
    }
    for r in &inst.resources {
        r.validate()?;
    }
    match (&inst.scenarios, &inst.distribution) {
        (Some(s), None) => {
            let model = DemandModel::new(s.clone())?;
            if model.resources() != inst.resources.len() {
                return Err(ConfigError::invalid(
                    "scenarios",
                    "demand vectors do not match the resource list",
                ));
            }
        }
        (None, Some(d)) => {
            d.validate()?;
            if d.resources() != Some(inst.resources.len()) {
                return Err(ConfigError::invalid(
                    "distribution",
                    "dimension does not match the resource list",
                ));
            }
            if inst.samples == 0 {
                return Err(ConfigError::invalid("samples", "must be at least 1"));
            }
        }
        _ => {
            return Err(ConfigError::invalid(
                "scenarios",
                "exactly one of `scenarios` or `distribution` must be given",
            ))
        }
    }
    if let Some(t) = &inst.trace {
        if t.is_empty() {
            return Err(ConfigError::invalid("trace", "demand trace is empty"));
        }
        if t.iter().any(|row| row.len() != inst.resources.len()) {
            return Err(ConfigError::invalid(
                "trace",
                "trace rows do not match the resource list",
            ));
        }
    } else if inst.trace_len == 0 {
        return Err(ConfigError::invalid("trace_len", "must be at least 1"));
    }
    if let Some(b) = inst.budget {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(ConfigError::invalid("budget", format!("must be non-negative, got {b}")));
        }
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.mechanism {
            MechanismConfig::Evo(c) => c.validate(),
            MechanismConfig::Dda(c) => c.validate(self.seed),
            MechanismConfig::Sip(c) => c.validate(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a JSON configuration document.
pub fn validate_config(raw: &str) -> Result<SimConfig, ConfigError> {
    let cfg: SimConfig = serde_json::from_str(raw)?;
    cfg.validate()?;
    Ok(cfg)
}
