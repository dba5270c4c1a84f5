//! Independent checks of planner output.
//!
//! The geometric checker works on robot positions in the plane and never
//! touches cross-sections, so a bug in the coordination-space code cannot
//! hide a collision from it.

use thiserror::Error;

use crate::coordination::{
    ConflictTable, CrossSection, InducedPriorities, PairRelation, PriorityGraph, PriorityObserver, SectionShape,
};
use crate::geometry::{pair_collision, GeometryError, IntersectionLayout};
use crate::kinodynamics::SystemState;
use crate::planner::{check_initial, Decision, PlannerConfig, Trajectory};
use crate::RobotId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("robots {} and {} collide at t={time}", pair.0, pair.1)]
    Collision { time: f64, pair: (RobotId, RobotId) },
    #[error("robot {robot} left its path at t={time}: {source}")]
    OffPath { time: f64, robot: RobotId, source: GeometryError },
    #[error("step {step} has {decisions} decisions for {robots} robots")]
    Malformed { step: usize, decisions: usize, robots: usize },
}

/// Samples the executed motion of one step every `fine_dt` and tests every
/// pair of robots geometrically. `t0` is the time of `state`.
pub fn step_collision_free(
    state: &SystemState,
    decisions: &[Decision],
    layout: &IntersectionLayout,
    radius: f64,
    dt: f64,
    fine_dt: f64,
    t0: f64,
) -> Result<(), Violation> {
    let robots = state.robots();
    if robots.len() != decisions.len() {
        return Err(Violation::Malformed { step: 0, decisions: decisions.len(), robots: robots.len() });
    }
    let samples = (dt / fine_dt).ceil() as usize;
    // Two robots farther apart than this at the start of the step cannot
    // meet within it.
    let reach = 2.0 * radius + 2.0 * dt * robots.iter().map(|r| r.model.v_max()).fold(0.0, f64::max);
    let mut nearby = Vec::new();
    let start: Vec<_> = robots
        .iter()
        .map(|r| {
            layout.lanes()[r.lane].path.point_at(r.state.x).map_err(|source| Violation::OffPath {
                time: t0,
                robot: r.id,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    for a in 0..robots.len() {
        for b in a + 1..robots.len() {
            if start[a].distance(start[b]) < reach {
                nearby.push((a, b));
            }
        }
    }
    if nearby.is_empty() {
        return Ok(());
    }
    for k in 0..=samples {
        let t = (k as f64 * fine_dt).min(dt);
        let xs: Vec<f64> = robots.iter().zip(decisions).map(|(r, d)| d.apply(r, t).x).collect();
        for &(a, b) in &nearby {
            let (ra, rb) = (&robots[a], &robots[b]);
            let hit = pair_collision(
                &layout.lanes()[ra.lane].path,
                xs[a],
                radius,
                &layout.lanes()[rb.lane].path,
                xs[b],
                radius,
            );
            match hit {
                Ok(false) => {}
                Ok(true) => return Err(Violation::Collision { time: t0 + t, pair: (ra.id, rb.id) }),
                Err(source) => {
                    let robot = if layout.lanes()[ra.lane].path.point_at(xs[a]).is_err() { ra.id } else { rb.id };
                    return Err(Violation::OffPath { time: t0 + t, robot, source });
                }
            }
        }
    }
    Ok(())
}

/// Re-integrates every step of `traj` at `fine_dt` and reports the first
/// geometric collision. `fine_dt` should be at most a quarter of the
/// planner's sampling step.
pub fn trajectory_collision_free(
    traj: &Trajectory,
    layout: &IntersectionLayout,
    radius: f64,
    fine_dt: f64,
) -> Result<(), Violation> {
    for (step, (state, decisions)) in traj.states.iter().zip(&traj.decisions).enumerate() {
        step_collision_free(state, decisions, layout, radius, traj.dt, fine_dt, step as f64 * traj.dt).map_err(
            |e| match e {
                Violation::Malformed { decisions, robots, .. } => Violation::Malformed { step, decisions, robots },
                e => e,
            },
        )?;
    }
    Ok(())
}

/// The inductive safety invariant: the all-brake trajectory from `s`
/// respects every priority of `g`.
pub fn braking_invariant_holds(s: &SystemState, g: &PriorityGraph, table: &ConflictTable, cfg: &PlannerConfig) -> bool {
    check_initial(s, g, table, cfg).is_ok()
}

/// Searches shifts `a, b ≥ 0` on a grid of step `step` for a point
/// `(x_high + a, x_low − b)` of `section`, whose first axis is the robot with
/// priority. Strips need a finite `window` `(hi_max, lo_min)` bounding the
/// search.
pub fn brute_force_shifted_membership(
    x_high: f64,
    x_low: f64,
    section: &CrossSection,
    step: f64,
    window: Option<(f64, f64)>,
) -> bool {
    let (hi_max, lo_min) = match (&section.shape, window) {
        (SectionShape::Empty, _) => return false,
        (SectionShape::Strip(_), None) => panic!("strip sections need a search window"),
        (SectionShape::Strip(_), Some(w)) => w,
        (_, w) => {
            let b = section.bounds().expect("nonempty section");
            w.unwrap_or((b.i.1, b.j.0))
        }
    };
    let na = ((hi_max - x_high) / step).ceil().max(0.0) as usize;
    let nb = ((x_low - lo_min) / step).ceil().max(0.0) as usize;
    for ka in 0..=na {
        let u = x_high + ka as f64 * step;
        for kb in 0..=nb {
            if section.contains(u, x_low - kb as f64 * step) {
                return true;
            }
        }
    }
    false
}

/// Priority mismatches: pairs whose observed orientation contradicts `g`.
/// Pairs left unconstrained are not mismatches.
pub fn priority_mismatches(induced: &InducedPriorities, g: &PriorityGraph) -> Vec<(RobotId, RobotId)> {
    induced.graph.edges().filter(|&(hi, lo)| !g.has_edge(hi, lo)).collect()
}

/// Whether one observed pair relation agrees with `g`.
pub fn relation_respects(relation: PairRelation, g: &PriorityGraph) -> bool {
    match relation {
        PairRelation::Ordered(hi, lo) => g.has_edge(hi, lo),
        PairRelation::Unconstrained => true,
        PairRelation::Inconsistent => false,
    }
}

/// Replays a sequence of states through a [`PriorityObserver`].
pub fn observe_all(states: &[SystemState], table: &ConflictTable) -> PriorityObserver {
    let mut obs = PriorityObserver::new();
    for s in states {
        obs.observe(s, table);
    }
    obs
}

/// Positions of the left-greedy trajectory: robots start and stop
/// instantly. Every step each robot moves `v_max·dt` unless, with everyone
/// else holding still, the move sampled every `sub_dt` enters a region
/// guarded by one of its incoming edges. Stops after `max_steps` steps or
/// once every robot reached its threshold in `goal`.
pub fn left_greedy_oracle(
    s_init: &SystemState,
    g: &PriorityGraph,
    table: &ConflictTable,
    dt: f64,
    sub_dt: f64,
    goal: &crate::coordination::GoalRegion,
    max_steps: usize,
) -> Vec<Vec<f64>> {
    let robots = s_init.robots();
    let mut x: Vec<f64> = robots.iter().map(|r| r.state.x).collect();
    let mut out = vec![x.clone()];
    let samples = (dt / sub_dt).round() as usize;
    let done = |x: &[f64]| robots.iter().zip(x).all(|(r, &xi)| goal.threshold(r.id).map_or(true, |t| xi >= t));
    while out.len() <= max_steps && !done(&x) {
        let next: Vec<f64> = (0..robots.len())
            .map(|i| {
                let me = &robots[i];
                let speed = me.model.v_max();
                let blocked = g.incoming(me.id).any(|hi| {
                    let Some(j) = s_init.index_of(hi) else { return false };
                    let Some(bound) = table.guard(robots[j].lane, me.lane) else { return false };
                    (0..=samples).any(|k| bound.contains(x[j], x[i] + speed * k as f64 * sub_dt))
                });
                if blocked {
                    x[i]
                } else {
                    x[i] + speed * dt
                }
            })
            .collect();
        x = next;
        out.push(x.clone());
    }
    out
}
