//! Market mechanisms for edge intelligence in virtual worlds.
//!
//! * [`evo`]: replicator dynamics of sensing providers over regional reward pools.
//! * [`dda`]: a Double Dutch Auction matching VR users to edge renderers.
//! * [`sip`]: two-stage stochastic reservation of edge resources.
//!
//! [`config`] loads seeded experiment descriptions, [`rng`] hands out
//! labeled reproducible random streams, and [`report`] writes CSV tables and
//! SVG charts.

pub mod config;
pub mod dda;
pub mod evo;
pub mod report;
pub mod rng;
pub mod sip;

pub use config::{validate_config, ConfigError, MechanismConfig, SimConfig};
pub use rng::{rng_stream, RngStream};
