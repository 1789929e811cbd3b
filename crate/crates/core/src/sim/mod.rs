//! Scenario execution: mobility models and the discrete-event world.

pub mod mobility;
mod world;

pub use mobility::Mobility;
pub use world::{run_scenario, RunOutput, RunOverrides, SimError};
