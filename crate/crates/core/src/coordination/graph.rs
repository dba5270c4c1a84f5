use std::collections::{BTreeMap, BTreeSet};

use crate::kinodynamics::SystemState;
use crate::RobotId;

use super::table::ConflictTable;
use super::CoordinationError;

/// Oriented graph over robot ids; edge `(i, j)` means `i ≻ j`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorityGraph {
    vertices: BTreeSet<RobotId>,
    succ: BTreeMap<RobotId, BTreeSet<RobotId>>,
    pred: BTreeMap<RobotId, BTreeSet<RobotId>>,
}

impl PriorityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (RobotId, RobotId)>) -> Result<Self, CoordinationError> {
        let mut g = Self::new();
        for (hi, lo) in edges {
            g.add_edge(hi, lo)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, id: RobotId) {
        self.vertices.insert(id);
    }

    /// Adds `hi ≻ lo`. Adding an existing edge is a no-op; adding the reverse
    /// of an existing edge is an error.
    pub fn add_edge(&mut self, hi: RobotId, lo: RobotId) -> Result<(), CoordinationError> {
        if hi == lo {
            return Err(CoordinationError::SelfEdge(hi));
        }
        if self.has_edge(lo, hi) {
            return Err(CoordinationError::ConflictingOrientation(hi, lo));
        }
        self.vertices.insert(hi);
        self.vertices.insert(lo);
        self.succ.entry(hi).or_default().insert(lo);
        self.pred.entry(lo).or_default().insert(hi);
        Ok(())
    }

    pub fn has_edge(&self, hi: RobotId, lo: RobotId) -> bool {
        self.succ.get(&hi).is_some_and(|s| s.contains(&lo))
    }

    /// Robots with priority over `id`.
    pub fn incoming(&self, id: RobotId) -> impl Iterator<Item = RobotId> + '_ {
        self.pred.get(&id).into_iter().flatten().copied()
    }

    /// Robots `id` has priority over.
    pub fn outgoing(&self, id: RobotId) -> impl Iterator<Item = RobotId> + '_ {
        self.succ.get(&id).into_iter().flatten().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (RobotId, RobotId)> + '_ {
        self.succ.iter().flat_map(|(&hi, los)| los.iter().map(move |&lo| (hi, lo)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.values().map(BTreeSet::len).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn contains_vertex(&self, id: RobotId) -> bool {
        self.vertices.contains(&id)
    }

    pub fn remove_vertex(&mut self, id: RobotId) {
        self.vertices.remove(&id);
        if let Some(los) = self.succ.remove(&id) {
            for lo in los {
                if let Some(p) = self.pred.get_mut(&lo) {
                    p.remove(&id);
                }
            }
        }
        if let Some(his) = self.pred.remove(&id) {
            for hi in his {
                if let Some(s) = self.succ.get_mut(&hi) {
                    s.remove(&id);
                }
            }
        }
    }

    /// Whether a chain of edges leads from `from` to `to`.
    pub fn has_path(&self, from: RobotId, to: RobotId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if seen.insert(v) {
                stack.extend(self.outgoing(v).filter(|w| !seen.contains(w)));
            }
        }
        false
    }

    pub fn is_acyclic(&self) -> bool {
        self.edges().all(|(hi, lo)| !self.has_path(lo, hi))
    }

    pub fn is_subgraph_of(&self, other: &PriorityGraph) -> bool {
        self.edges().all(|(hi, lo)| other.has_edge(hi, lo))
    }
}

/// Relation a trajectory induces on one pair of robots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    /// `(hi, lo)`: the trajectory never entered the region guarded by `hi ≻ lo`
    /// but did enter the one guarded by `lo ≻ hi`.
    Ordered(RobotId, RobotId),
    /// Free of both regions; either orientation would have held.
    Unconstrained,
    /// Entered both regions; not a collision-free trajectory.
    Inconsistent,
}

#[derive(Debug, Clone, Copy, Default)]
struct PairFlags {
    /// entered the region guarded by `first ≻ second`
    first_over_second: bool,
    second_over_first: bool,
}

/// Accumulates, over a sequence of system states, which shifted regions each
/// conflicting pair of robots entered. Uses the raw (uninflated) sections.
#[derive(Debug, Clone, Default)]
pub struct PriorityObserver {
    pairs: BTreeMap<(RobotId, RobotId), PairFlags>,
}

impl PriorityObserver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, state: &SystemState, table: &ConflictTable) {
        let robots = state.robots();
        for (k, a) in robots.iter().enumerate() {
            for b in &robots[k + 1..] {
                let (Some(ab), Some(ba)) = (table.raw_bound(a.lane, b.lane), table.raw_bound(b.lane, a.lane)) else {
                    continue;
                };
                let flags = self.pairs.entry((a.id, b.id)).or_default();
                flags.first_over_second |= ab.contains(a.state.x, b.state.x);
                flags.second_over_first |= ba.contains(b.state.x, a.state.x);
            }
        }
    }

    pub fn relation(&self, a: RobotId, b: RobotId) -> Option<PairRelation> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs.get(&key).map(|f| Self::classify(key, *f))
    }

    fn classify((a, b): (RobotId, RobotId), f: PairFlags) -> PairRelation {
        match (f.first_over_second, f.second_over_first) {
            (false, false) => PairRelation::Unconstrained,
            (false, true) => PairRelation::Ordered(a, b),
            (true, false) => PairRelation::Ordered(b, a),
            (true, true) => PairRelation::Inconsistent,
        }
    }

    pub fn relations(&self) -> impl Iterator<Item = ((RobotId, RobotId), PairRelation)> + '_ {
        self.pairs.iter().map(|(&k, &f)| (k, Self::classify(k, f)))
    }

    /// Drops the records of pairs involving `id`, returning their relations.
    pub fn take_robot(&mut self, id: RobotId) -> Vec<((RobotId, RobotId), PairRelation)> {
        let keys: Vec<_> = self.pairs.keys().copied().filter(|&(a, b)| a == id || b == id).collect();
        keys.into_iter()
            .map(|k| {
                let f = self.pairs.remove(&k).expect("key just listed");
                (k, Self::classify(k, f))
            })
            .collect()
    }
}

/// Pairs the induced relation leaves unconstrained are reported apart from
/// the graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InducedPriorities {
    pub graph: PriorityGraph,
    pub unconstrained: Vec<(RobotId, RobotId)>,
}

/// Priority graph induced by a collision-free sequence of system states.
pub fn induced_priority_graph(
    trajectory: &[SystemState],
    table: &ConflictTable,
) -> Result<InducedPriorities, CoordinationError> {
    let mut obs = PriorityObserver::new();
    for s in trajectory {
        obs.observe(s, table);
    }
    let mut out = InducedPriorities::default();
    for ((a, b), rel) in obs.relations() {
        match rel {
            PairRelation::Ordered(hi, lo) => out.graph.add_edge(hi, lo)?,
            PairRelation::Unconstrained => out.unconstrained.push((a, b)),
            PairRelation::Inconsistent => return Err(CoordinationError::InconsistentPriorities(a, b)),
        }
    }
    Ok(out)
}
