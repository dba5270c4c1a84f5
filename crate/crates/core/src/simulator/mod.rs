//! Stochastic traffic on an intersection.
//!
//! Robots appear at the spawn point of each lane at random, get priorities
//! from the first-come policy, and are driven by the planner until they
//! pass their lane's exit. The delay each robot suffers is its travel time
//! relative to driving alone.

mod config;
mod run;
mod sweep;

use thiserror::Error;

pub use config::{LaneConfig, LayoutConfig, PlannerSettings, RobotConfig, ScenarioConfig, Setup, SweepConfig};
pub use run::{
    cell_seed, run_cell, spawn_probability, spawn_process, try_spawn, RobotRecord, RunMetrics, RunOptions, RunResult,
    SpawnOutcome,
};
pub use sweep::{run_scenario, summarize, sweep, sweep_with, DensitySummary, SweepResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
}
