//! Two-stage stochastic reservation of edge resources.
//!
//! A provider reserves integer units at a discount before demand is known,
//! then covers any shortfall at the on-demand price. The exact solver is
//! compared with an expected-value plan and a historical-mean plan.

mod compare;
mod model;
mod sample;
mod solve;

use thiserror::Error;

pub use compare::{
    compare_schemes, draw_history, solve_scheme, RandomSipSpec, Scheme, SchemeComparison, SchemeRow, SipInstance,
    SipInstanceFile,
};
pub use model::{evaluate_plan, CostReport, DemandModel, ReservationPlan, ResourceType, Scenario, ScenarioCost};
pub use sample::{sample_scenarios, DistributionSpec, Marginal};
pub use solve::{
    cost_curve, curve_argmin, newsvendor_quantile, resource_cost, round_half_up, solve_average_historical, solve_evf,
    solve_sip,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SipError {
    #[error("demand model has no scenarios")]
    NoScenarios,
    #[error("demand trace is empty")]
    EmptyTrace,
    #[error("dimension mismatch: expected {expected} resources, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("budget {0} is infeasible")]
    Infeasible(f64),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("solver disagreement: {0}")]
    Inconsistent(String),
}

impl SipError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        SipError::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
