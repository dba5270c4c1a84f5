//! Maximally aggressive trajectory planning with assigned priorities.
//!
//! Every step, each robot tests a virtual path: it accelerates for one step
//! while every other robot brakes, then everyone brakes to rest. If that path
//! stays out of every region guarded by an incoming priority edge, the robot
//! accelerates, otherwise it brakes. All decisions of a step read the same
//! pre-step state and are applied together. Provided the all-brake trajectory
//! from the initial state is clear, the all-brake trajectory from every later
//! state stays clear too, so the system always keeps a failsafe maneuver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::{in_goal, Configuration, ConflictTable, GoalRegion, PriorityGraph, ShiftBound};
use crate::kinodynamics::{braking_state, max_state, Robot, RobotState, SystemState};
use crate::RobotId;

/// Equality tolerance used to declare two consecutive states identical.
pub const DEADLOCK_TOLERANCE: f64 = 1e-12;

/// Decisions treat a configuration as guarded if it is guarded after moving
/// the low-priority robot this much forward and the high-priority one this
/// much back. Braking tracks recomputed from the next state differ from the
/// ones the decision saw by rounding only, so decisions stay valid under the
/// exact check. Quantized positions often land right on region boundaries,
/// where the bound can have unbounded slope.
pub const DECISION_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    BadConfig(String),
    #[error("initial state unsafe: {0}")]
    InitialStateUnsafe(UnsafeEdge),
    #[error("deadlock detected at step {step}")]
    DeadlockDetected { step: usize, state: SystemState },
    #[error("goal not reached within {steps} steps")]
    StepLimitExceeded { steps: usize },
}

/// A priority edge whose guarded region the all-brake trajectory enters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsafeEdge {
    pub high: RobotId,
    pub low: RobotId,
    /// Time along the braking trajectory of the first offending sample.
    pub time: f64,
}

impl std::fmt::Display for UnsafeEdge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "braking trajectory violates {} ≻ {} at t={}", self.high, self.low, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Planning time step.
    pub dt: f64,
    /// Sampling step of virtual paths; divides `dt`.
    pub sub_dt: f64,
    /// Margin added to the footprint sum when building guarded regions.
    pub inflation: f64,
    pub max_steps: usize,
}

impl PlannerConfig {
    /// Inflation defaults to `2·v_max·sub_dt`, which covers the largest
    /// per-coordinate excursion between two samples.
    pub fn new(dt: f64, sub_dt: f64, v_max: f64) -> Result<Self, PlanError> {
        Self::with_inflation(dt, sub_dt, 2.0 * v_max * sub_dt)
    }

    pub fn with_inflation(dt: f64, sub_dt: f64, inflation: f64) -> Result<Self, PlanError> {
        let cfg = Self { dt, sub_dt, inflation, max_steps: 1_000_000 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// One step at full speed covers one robot radius; four samples per step.
    pub fn for_robots(radius: f64, v_max: f64) -> Result<Self, PlanError> {
        let dt = radius / v_max;
        Self::new(dt, dt / 4.0, v_max)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.dt > 0.0 && self.sub_dt > 0.0 && self.sub_dt <= self.dt) {
            return Err(PlanError::BadConfig(format!("need 0 < sub_dt ({}) <= dt ({})", self.sub_dt, self.dt)));
        }
        let ratio = self.dt / self.sub_dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(PlanError::BadConfig(format!("dt {} is not a multiple of sub_dt {}", self.dt, self.sub_dt)));
        }
        if !(self.inflation >= 0.0 && self.inflation.is_finite()) {
            return Err(PlanError::BadConfig(format!("bad inflation {}", self.inflation)));
        }
        Ok(())
    }

    pub fn substeps(&self) -> usize {
        (self.dt / self.sub_dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Brake,
    Accelerate,
}

impl Decision {
    pub fn apply(self, robot: &Robot, dt: f64) -> RobotState {
        match self {
            Decision::Brake => robot.braking(dt),
            Decision::Accelerate => robot.maximal(dt),
        }
    }
}

/// States at successive planning steps. `decisions[k]` lists, in the robot
/// order of `states[k]`, what each robot did between step `k` and `k + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<SystemState>,
    pub decisions: Vec<Vec<Decision>>,
}

impl Trajectory {
    /// Number of executed steps.
    pub fn steps(&self) -> usize {
        self.decisions.len()
    }

    pub fn positions(&self) -> Vec<Configuration> {
        self.states.iter().map(SystemState::positions).collect()
    }
}

/// Positions of one robot sampled every `sub_dt`: `lead` for the first `dt`
/// (braking or accelerating), then braking to rest. The last sample is the
/// rest point.
fn track(robot: &Robot, accelerate: bool, cfg: &PlannerConfig, out: &mut Vec<f64>) {
    out.clear();
    let k = cfg.substeps();
    let m = &robot.model;
    let s = robot.state;
    for step in 0..=k {
        let t = step as f64 * cfg.sub_dt;
        let x = if accelerate { max_state(s, m, t).x } else { braking_state(s, m, t).x };
        out.push(x);
    }
    let lead_end = if accelerate { max_state(s, m, cfg.dt) } else { braking_state(s, m, cfg.dt) };
    if accelerate {
        push_braking_tail(lead_end, robot, cfg, out);
    } else {
        // braking all along: keep sampling the same closed form
        let t_stop = s.v / -m.a_min();
        let mut step = k + 1;
        while ((step - 1) as f64) * cfg.sub_dt < t_stop {
            out.push(braking_state(s, m, step as f64 * cfg.sub_dt).x);
            step += 1;
        }
    }
}

fn push_braking_tail(from: RobotState, robot: &Robot, cfg: &PlannerConfig, out: &mut Vec<f64>) {
    let m = &robot.model;
    let t_stop = from.v / -m.a_min();
    let mut step = 1usize;
    while ((step - 1) as f64) * cfg.sub_dt < t_stop {
        out.push(braking_state(from, m, step as f64 * cfg.sub_dt).x);
        step += 1;
    }
}

#[inline]
fn sample(track: &[f64], k: usize) -> f64 {
    track[k.min(track.len() - 1)]
}

/// Index of the first sample where `(high, low)` positions, shifted by
/// `margin` towards the region, enter the region guarded by `bound`.
#[inline]
fn first_violation(high: &[f64], low: &[f64], bound: &ShiftBound, margin: f64) -> Option<usize> {
    let len = high.len().max(low.len());
    (0..len).find(|&k| bound.contains(sample(high, k) - margin, sample(low, k) + margin))
}

/// Virtual path of robot `i` (index into `s`): it accelerates for one step
/// while all others brake, then everyone brakes until the whole system rests.
pub fn virtual_path(s: &SystemState, i: usize, cfg: &PlannerConfig) -> Vec<Configuration> {
    let tracks: Vec<Vec<f64>> = s
        .robots()
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mut t = Vec::new();
            track(r, k == i, cfg, &mut t);
            t
        })
        .collect();
    let len = tracks.iter().map(Vec::len).max().unwrap_or(0);
    (0..len).map(|k| tracks.iter().map(|t| sample(t, k)).collect::<Vec<_>>().into()).collect()
}

/// Braking and accelerate-then-brake tracks of every robot for one step.
struct StepTracks {
    brake: Vec<Vec<f64>>,
    accel: Vec<Vec<f64>>,
}

impl StepTracks {
    fn new(s: &SystemState, g: &PriorityGraph, cfg: &PlannerConfig) -> Self {
        let robots = s.robots();
        let mut brake = Vec::with_capacity(robots.len());
        let mut accel = Vec::with_capacity(robots.len());
        for r in robots {
            let mut b = Vec::new();
            track(r, false, cfg, &mut b);
            brake.push(b);
            let mut a = Vec::new();
            if g.incoming(r.id).next().is_some() {
                track(r, true, cfg, &mut a);
            }
            accel.push(a);
        }
        Self { brake, accel }
    }
}

fn decide_with(s: &SystemState, i: usize, g: &PriorityGraph, table: &ConflictTable, tracks: &StepTracks) -> Decision {
    let me = &s.robots()[i];
    for hi in g.incoming(me.id) {
        let Some(j) = s.index_of(hi) else { continue };
        let other = &s.robots()[j];
        let Some(bound) = table.guard(other.lane, me.lane) else { continue };
        if first_violation(&tracks.brake[j], &tracks.accel[i], bound, DECISION_MARGIN).is_some() {
            return Decision::Brake;
        }
    }
    Decision::Accelerate
}

/// Decision of robot `i` (index into `s`).
pub fn decide(s: &SystemState, i: usize, g: &PriorityGraph, table: &ConflictTable, cfg: &PlannerConfig) -> Decision {
    let me = &s.robots()[i];
    if g.incoming(me.id).next().is_none() {
        return Decision::Accelerate;
    }
    let mut accel = Vec::new();
    track(me, true, cfg, &mut accel);
    let mut brake = Vec::new();
    for hi in g.incoming(me.id) {
        let Some(j) = s.index_of(hi) else { continue };
        let other = &s.robots()[j];
        let Some(bound) = table.guard(other.lane, me.lane) else { continue };
        track(other, false, cfg, &mut brake);
        if first_violation(&brake, &accel, bound, DECISION_MARGIN).is_some() {
            return Decision::Brake;
        }
    }
    Decision::Accelerate
}

/// Decisions for all robots of `s`, in robot order.
pub fn decisions(s: &SystemState, g: &PriorityGraph, table: &ConflictTable, cfg: &PlannerConfig) -> Vec<Decision> {
    let tracks = StepTracks::new(s, g, cfg);
    (0..s.len()).map(|i| decide_with(s, i, g, table, &tracks)).collect()
}

/// Advances every robot one step according to its decision.
pub fn apply(s: &SystemState, decisions: &[Decision], dt: f64) -> SystemState {
    s.with_states(s.robots().iter().zip(decisions).map(|(r, d)| d.apply(r, dt)))
}

pub fn step(
    s: &SystemState,
    g: &PriorityGraph,
    table: &ConflictTable,
    cfg: &PlannerConfig,
) -> (SystemState, Vec<Decision>) {
    let d = decisions(s, g, table, cfg);
    (apply(s, &d, cfg.dt), d)
}

/// Checks that the all-brake trajectory from `s` avoids every region guarded
/// by an edge of `g` between robots of `s`.
pub fn check_initial(
    s: &SystemState,
    g: &PriorityGraph,
    table: &ConflictTable,
    cfg: &PlannerConfig,
) -> Result<(), UnsafeEdge> {
    let robots = s.robots();
    let tracks: Vec<Vec<f64>> = robots
        .iter()
        .map(|r| {
            let mut t = Vec::new();
            track(r, false, cfg, &mut t);
            t
        })
        .collect();
    check_edges(s, table, cfg, &tracks, g.edges(), 0.0)
}

/// Like [`check_initial`], restricted to the edges touching `id` and with
/// the decision margin, so a state accepted here passes the exact check
/// after any number of planner steps.
pub fn check_robot(
    s: &SystemState,
    id: RobotId,
    g: &PriorityGraph,
    table: &ConflictTable,
    cfg: &PlannerConfig,
) -> Result<(), UnsafeEdge> {
    let robots = s.robots();
    let tracks: Vec<Vec<f64>> = robots
        .iter()
        .map(|r| {
            let mut t = Vec::new();
            track(r, false, cfg, &mut t);
            t
        })
        .collect();
    let edges = g.incoming(id).map(|h| (h, id)).chain(g.outgoing(id).map(|l| (id, l)));
    check_edges(s, table, cfg, &tracks, edges, DECISION_MARGIN)
}

fn check_edges(
    s: &SystemState,
    table: &ConflictTable,
    cfg: &PlannerConfig,
    tracks: &[Vec<f64>],
    edges: impl Iterator<Item = (RobotId, RobotId)>,
    margin: f64,
) -> Result<(), UnsafeEdge> {
    let robots = s.robots();
    for (high, low) in edges {
        let (Some(h), Some(l)) = (s.index_of(high), s.index_of(low)) else { continue };
        let Some(bound) = table.guard(robots[h].lane, robots[l].lane) else { continue };
        if let Some(k) = first_violation(&tracks[h], &tracks[l], bound, margin) {
            return Err(UnsafeEdge { high, low, time: k as f64 * cfg.sub_dt });
        }
    }
    Ok(())
}

/// True iff the goal is not reached and `current` repeats `previous`. The
/// step map is deterministic, so a repeated state repeats forever.
pub fn detect_deadlock(previous: &SystemState, current: &SystemState, in_goal: bool) -> bool {
    if in_goal || previous.len() != current.len() {
        return false;
    }
    previous.robots().iter().zip(current.robots()).all(|(a, b)| {
        a.id == b.id
            && (a.state.x - b.state.x).abs() <= DEADLOCK_TOLERANCE
            && (a.state.v - b.state.v).abs() <= DEADLOCK_TOLERANCE
    })
}

/// Runs the planner from `s_init` until the goal region is reached.
pub fn plan(
    s_init: &SystemState,
    g: &PriorityGraph,
    table: &ConflictTable,
    goal: &GoalRegion,
    cfg: &PlannerConfig,
) -> Result<Trajectory, PlanError> {
    cfg.validate()?;
    check_initial(s_init, g, table, cfg).map_err(PlanError::InitialStateUnsafe)?;
    let mut traj = Trajectory { dt: cfg.dt, states: vec![s_init.clone()], decisions: Vec::new() };
    loop {
        let current = traj.states.last().expect("non-empty");
        if in_goal(current, goal) {
            return Ok(traj);
        }
        if traj.steps() >= cfg.max_steps {
            return Err(PlanError::StepLimitExceeded { steps: traj.steps() });
        }
        let (next, d) = step(current, g, table, cfg);
        let stuck = detect_deadlock(current, &next, in_goal(&next, goal));
        traj.decisions.push(d);
        traj.states.push(next);
        if stuck {
            return Err(PlanError::DeadlockDetected {
                step: traj.steps(),
                state: traj.states.last().cloned().expect("non-empty"),
            });
        }
    }
}
