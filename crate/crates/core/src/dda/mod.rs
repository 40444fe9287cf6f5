//! Double Dutch Auction for edge VR rendering.
//!
//! VR users (buyers) value rendering service through a QoE proxy of bitrate
//! and head motion; edge servers (sellers) price it from energy and
//! occupancy. Clock step sizes come from a [`ClockController`]: a fixed
//! step, an Ornstein-Uhlenbeck process, or a tabular Q-learned policy.

mod auction;
mod controller;
mod experiment;
mod learn;
mod qoe;

use thiserror::Error;

pub use auction::{
    oracle_max_welfare, run_dda, run_dda_with, AuctionOutcome, Claim, ClockMove, DdaInstance, Match, Side,
};
pub use controller::{
    make_ou_controller, ClockController, ClockObservation, ControllerRun, LearnedController, OuParams, QTable,
    StateCoder, StepRule,
};
pub use experiment::{
    agent_utility, compare_controllers, summarize, train_on_bitrates, truthfulness_probe, Agent, BuyerSpec, Comparison,
    ControllerSummary, DdaInstanceFile, InstanceGenerator, RunRecord, SellerSpec,
};
pub use learn::{train_q_controller, EpisodeLog, TrainConfig};
pub use qoe::{buyer_valuation, perceptual_scores, seller_cost, EdgeSeller, QoeParams, VrUser};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdaError {
    #[error("invalid price bounds: p_low {p_low} must be below p_high {p_high}")]
    PriceBounds { p_low: f64, p_high: f64 },
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("unknown agent {0}")]
    UnknownAgent(String),
}

impl DdaError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        DdaError::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
