//! Simulation of two pedestrians meeting head-on on a sidewalk, each running a
//! communication-enabled interaction loop: a deterministic plan, a
//! probabilistic belief about the other, and replanning whenever the perceived
//! risk exceeds a personal threshold.

pub mod agent;
pub mod belief;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod params;
pub mod perception;
pub mod planner;
pub mod risk;
pub mod simulator;
pub mod rng;
pub mod state;
pub mod trace;

pub use error::{Error, Result};
pub use params::{ModelParams, PlanRefresh, PlanShiftMode, RiskConstraint};
pub use rng::RandomSource;
pub use state::{ControlInput, PedestrianState, TrackFrame};
