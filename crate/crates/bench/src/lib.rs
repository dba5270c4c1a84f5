//! Fixtures shared by the benchmarks in `benches/`.

use priocoord::policy::assign_priorities;
use priocoord::simulator::ScenarioConfig;
use priocoord::{ConflictTable, PlannerConfig, PriorityGraph, Robot, RobotId, RobotState, SystemState};

/// `n` robots queued on the four lanes of the default crossroads, 3.5 apart,
/// with first-come priorities.
pub fn crowded(n: usize) -> (SystemState, PriorityGraph, ConflictTable, PlannerConfig) {
    let setup = ScenarioConfig::default().build().expect("default scenario");
    let robots = (0..n)
        .map(|k| {
            let x = -4.5 - 3.5 * (k / 4) as f64;
            Robot::new(RobotId(k as u32 + 1), k % 4, RobotState::new(x, 0.6), setup.model)
        })
        .collect();
    let s = SystemState::new(robots).expect("distinct ids");
    let g = assign_priorities(&s, &setup.table);
    (s, g, setup.table, setup.planner)
}
