use std::collections::BTreeMap;

use crate::kinodynamics::SystemState;
use crate::RobotId;

use super::table::ConflictTable;

/// Per-robot exit thresholds. A configuration is in the goal once every
/// robot is at or past its threshold; robots without one count as arrived.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoalRegion {
    thresholds: BTreeMap<RobotId, f64>,
}

impl GoalRegion {
    pub fn new(thresholds: impl IntoIterator<Item = (RobotId, f64)>) -> Self {
        Self { thresholds: thresholds.into_iter().collect() }
    }

    /// Thresholds at the supremum of every bounded section each robot shares
    /// with another robot of `state`. Same-lane strips never end and are
    /// left out.
    pub fn for_state(state: &SystemState, table: &ConflictTable) -> Self {
        let robots = state.robots();
        let thresholds = robots.iter().filter_map(|r| {
            robots
                .iter()
                .filter(|o| o.id != r.id)
                .filter_map(|o| {
                    let s = table.section(r.lane, o.lane);
                    s.is_bounded().then(|| s.bounds()).flatten().map(|b| b.i.1)
                })
                .reduce(f64::max)
                .map(|t| (r.id, t))
        });
        Self::new(thresholds)
    }

    pub fn threshold(&self, id: RobotId) -> Option<f64> {
        self.thresholds.get(&id).copied()
    }

    pub fn contains(&self, state: &SystemState) -> bool {
        state.robots().iter().all(|r| self.threshold(r.id).map_or(true, |t| r.state.x >= t))
    }
}

pub fn in_goal(state: &SystemState, goal: &GoalRegion) -> bool {
    goal.contains(state)
}
