//! Priority-based coordination of robots driving along fixed paths through an
//! intersection, under velocity and acceleration limits.
//!
//! Robots follow predefined tracks, so the system lives in the coordination
//! space of their curvilinear coordinates. Once every conflicting pair has a
//! priority, [`planner::plan`] drives each robot as fast as possible while
//! keeping a collision-free all-brake maneuver available at every step.
//!
//! Module map:
//! - [`geometry`]: paths, footprints, the geometric collision predicate.
//! - [`coordination`]: cross-sections, priority-shifted regions, priority graphs.
//! - [`kinodynamics`]: robot states and closed-form braking/accelerating motion.
//! - [`planner`]: the step-by-step planner, initial-state check, deadlock detection.
//! - [`policy`]: first-come priority assignment.
//! - [`simulator`]: stochastic traffic on an intersection and delay metrics.
//! - [`verify`]: independent oracles used to check everything above.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod coordination;
pub mod geometry;
pub mod kinodynamics;
pub mod planner;
pub mod policy;
pub mod simulator;
pub mod verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RobotId(pub u32);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub use coordination::{Configuration, ConflictTable, CrossSection, GoalRegion, PriorityGraph, ShiftBound};
pub use geometry::{IntersectionLayout, Lane, PathGeometry, Point, RobotFootprint};
pub use kinodynamics::{KinodynamicModel, Robot, RobotState, SystemState};
pub use planner::{Decision, PlanError, PlannerConfig, Trajectory};
