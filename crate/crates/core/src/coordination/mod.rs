//! The coordination space: one axis per robot, the curvilinear coordinate of
//! that robot along its path.
//!
//! Collisions between two robots only depend on their two coordinates, so the
//! obstacle region is a union of cylinders whose footprints are the pairwise
//! [`CrossSection`]s. Assigning priority `i ≻ j` turns a section into the
//! larger region encoded by a [`ShiftBound`].

mod goal;
mod graph;
mod section;
mod shift;
mod table;

use std::ops::{Deref, DerefMut};

use thiserror::Error;

use crate::RobotId;

pub use goal::{in_goal, GoalRegion};
pub use graph::{induced_priority_graph, InducedPriorities, PairRelation, PriorityGraph, PriorityObserver};
pub use section::{
    build_cross_section, build_grid_section, is_straight_pair, CrossSection, Ellipse, GridSection, SectionBounds,
    SectionShape, Strip,
};
pub use shift::{curve_intersects_shifted, in_shifted_obstacle, ShiftBound};
pub use table::ConflictTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoordinationError {
    #[error("cross-section of paths {0:?} is empty")]
    EmptySection((usize, usize)),
    #[error("samples are not monotone at index {sample}")]
    NonMonotone { sample: usize },
    #[error("robot {0} cannot have priority over itself")]
    SelfEdge(RobotId),
    #[error("edge {0} ≻ {1} contradicts an existing edge")]
    ConflictingOrientation(RobotId, RobotId),
    #[error("trajectory enters both shifted regions of robots {0} and {1}")]
    InconsistentPriorities(RobotId, RobotId),
}

/// Coordinates of all robots, indexed like the system state they come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration(pub Vec<f64>);

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

impl Deref for Configuration {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Configuration {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}
