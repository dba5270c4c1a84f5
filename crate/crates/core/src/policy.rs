//! First-come priority assignment: of two conflicting robots, the one whose
//! maximal trajectory reaches its side of the conflict first gets priority.
//! Robots sharing a lane keep their order, front first.
//!
//! Pairwise first-come orientation can close cycles, for instance four lane
//! heads each waiting at a different corner of a crossroads. The acyclic
//! variant reverses any new edge that would close a cycle; a source of the
//! graph never brakes, so an acyclic graph cannot deadlock.

use serde::{Deserialize, Serialize};

use crate::coordination::{ConflictTable, PriorityGraph, SectionShape};
use crate::kinodynamics::{max_arrival_time, Robot, SystemState};
use crate::RobotId;

/// When a robot would reach its entry into a conflict with another robot
/// if it drove unobstructed at full acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEstimate {
    pub robot: RobotId,
    pub pair: (RobotId, RobotId),
    /// Infimum of the section along the robot's own axis.
    pub entry: f64,
    /// Zero once the entry has been passed.
    pub time: f64,
}

/// `None` when the two robots cannot collide or share a strip section, which
/// has no entry.
pub fn arrival_estimate(robot: &Robot, other: &Robot, table: &ConflictTable) -> Option<ArrivalEstimate> {
    let section = table.section(robot.lane, other.lane);
    if !section.is_bounded() {
        return None;
    }
    let entry = section.bounds()?.i.0;
    Some(ArrivalEstimate {
        robot: robot.id,
        pair: (robot.id, other.id),
        entry,
        time: max_arrival_time(robot.state, &robot.model, entry),
    })
}

/// Orientation `(high, low)` of the pair under the first-come rule, `None`
/// if they never conflict.
pub fn orient(a: &Robot, b: &Robot, table: &ConflictTable) -> Option<(RobotId, RobotId)> {
    let section = table.section(a.lane, b.lane);
    let a_first = match &section.shape {
        SectionShape::Empty => return None,
        // front robot first; lower id breaks a tie
        SectionShape::Strip(s) => {
            let lead = a.state.x - b.state.x - s.offset;
            lead > 0.0 || (lead == 0.0 && a.id < b.id)
        }
        _ => {
            let ta = arrival_estimate(a, b, table)?.time;
            let tb = arrival_estimate(b, a, table)?.time;
            ta < tb || (ta == tb && a.id < b.id)
        }
    };
    Some(if a_first { (a.id, b.id) } else { (b.id, a.id) })
}

/// Priority graph over every conflicting pair of `s`.
pub fn assign_priorities(s: &SystemState, table: &ConflictTable) -> PriorityGraph {
    let mut g = PriorityGraph::new();
    let robots = s.robots();
    for (k, a) in robots.iter().enumerate() {
        g.add_vertex(a.id);
        for b in &robots[k + 1..] {
            if let Some((hi, lo)) = orient(a, b, table) {
                g.add_edge(hi, lo).expect("each pair is oriented once");
            }
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityPolicy {
    /// Plain first-come orientation of every pair.
    FirstCome,
    /// First-come, except that edges closing a cycle are reversed.
    #[default]
    FirstComeAcyclic,
}

impl PriorityPolicy {
    pub fn extend(self, g: &PriorityGraph, new: RobotId, s: &SystemState, table: &ConflictTable) -> PriorityGraph {
        match self {
            PriorityPolicy::FirstCome => extend_priorities(g, new, s, table),
            PriorityPolicy::FirstComeAcyclic => extend_priorities_acyclic(g, new, s, table),
        }
    }
}

/// Adds the edges between `new` and every robot of `s` it conflicts with.
/// Edges already present are kept as they are.
pub fn extend_priorities(g: &PriorityGraph, new: RobotId, s: &SystemState, table: &ConflictTable) -> PriorityGraph {
    extend_with(g, new, s, table, false)
}

/// Like [`extend_priorities`], but an edge that would close a cycle is
/// reversed. Same-lane edges are added first, so they are never reversed
/// when `new` is the rearmost robot of its lane. Keeps an acyclic graph
/// acyclic.
pub fn extend_priorities_acyclic(
    g: &PriorityGraph,
    new: RobotId,
    s: &SystemState,
    table: &ConflictTable,
) -> PriorityGraph {
    extend_with(g, new, s, table, true)
}

fn extend_with(
    g: &PriorityGraph,
    new: RobotId,
    s: &SystemState,
    table: &ConflictTable,
    acyclic: bool,
) -> PriorityGraph {
    let mut out = g.clone();
    let Some(me) = s.get(new) else { return out };
    out.add_vertex(new);
    let same_lane = |o: &&Robot| o.lane == me.lane;
    let (mut first, rest): (Vec<&Robot>, Vec<&Robot>) = s.robots().iter().filter(|o| o.id != new).partition(same_lane);
    first.extend(rest);
    for other in first {
        if out.has_edge(new, other.id) || out.has_edge(other.id, new) {
            continue;
        }
        if let Some((mut hi, mut lo)) = orient(me, other, table) {
            if acyclic && out.has_path(lo, hi) {
                std::mem::swap(&mut hi, &mut lo);
            }
            out.add_edge(hi, lo).expect("pair had no edge");
        }
    }
    out
}
