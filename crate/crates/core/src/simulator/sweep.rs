use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, Setup};
use super::run::{run_cell, RunMetrics, RunOptions, RunResult};
use super::SimError;

/// Per-density aggregate over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub density: f64,
    pub runs: usize,
    pub achieved_density: f64,
    /// Mean over seeds of each run's mean increase.
    pub mean_increase: f64,
    /// Sample standard deviation over seeds; zero for a single seed.
    pub std_increase: f64,
    pub completed: usize,
    pub deadlocks: usize,
    pub collisions: usize,
    pub invariant_failures: usize,
    pub priority_mismatches: usize,
    pub truncated: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Runs ordered by density then seed, as listed in the config.
    pub runs: Vec<RunResult>,
    pub summaries: Vec<DensitySummary>,
}

pub fn summarize(density: f64, runs: &[&RunMetrics]) -> DensitySummary {
    let n = runs.len();
    let means: Vec<f64> = runs.iter().map(|m| m.mean_increase).collect();
    let mean = means.iter().sum::<f64>() / n.max(1) as f64;
    let std = if n > 1 { (means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    DensitySummary {
        density,
        runs: n,
        achieved_density: runs.iter().map(|m| m.achieved_density).sum::<f64>() / n.max(1) as f64,
        mean_increase: mean,
        std_increase: std,
        completed: runs.iter().map(|m| m.completed).sum(),
        deadlocks: runs.iter().filter(|m| m.deadlock_step.is_some()).count(),
        collisions: runs.iter().map(|m| m.collisions).sum(),
        invariant_failures: runs.iter().map(|m| m.invariant_failures).sum(),
        priority_mismatches: runs.iter().map(|m| m.priority_mismatches).sum(),
        truncated: runs.iter().filter(|m| m.truncated).count(),
    }
}

/// Runs every (density, seed) cell of the config in parallel. Results do not
/// depend on the thread count.
pub fn sweep_with(cfg: &ScenarioConfig, setup: &Setup, record_trace: bool) -> SweepResult {
    let sw = &cfg.sweep;
    let cells: Vec<(f64, u64)> = sw.densities.iter().flat_map(|&d| sw.seeds.iter().map(move |&s| (d, s))).collect();
    let opts = RunOptions { verify: sw.verify, record_trace };
    let runs: Vec<RunResult> =
        cells.par_iter().map(|&(d, s)| run_cell(setup, d, s, sw.robots, sw.horizon, opts)).collect();
    let summaries = sw
        .densities
        .iter()
        .map(|&d| {
            let of: Vec<&RunMetrics> = runs.iter().map(|r| &r.metrics).filter(|m| m.density == d).collect();
            summarize(d, &of)
        })
        .collect();
    SweepResult { runs, summaries }
}

pub fn sweep(cfg: &ScenarioConfig) -> Result<SweepResult, SimError> {
    let setup = cfg.build()?;
    Ok(sweep_with(cfg, &setup, false))
}

/// Runs a single cell: the first density and seed of the config.
pub fn run_scenario(cfg: &ScenarioConfig, opts: RunOptions) -> Result<RunResult, SimError> {
    let setup = cfg.build()?;
    let density = *cfg.sweep.densities.first().ok_or_else(|| SimError::Config("no density given".into()))?;
    let seed = *cfg.sweep.seeds.first().ok_or_else(|| SimError::Config("no seed given".into()))?;
    Ok(run_cell(&setup, density, seed, cfg.sweep.robots, cfg.sweep.horizon, opts))
}
