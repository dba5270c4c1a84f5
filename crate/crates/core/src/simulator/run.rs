use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::{PairRelation, PriorityGraph, PriorityObserver};
use crate::kinodynamics::{braking_arrival_time, max_arrival_time, Robot, RobotState, SystemState};
use crate::planner::{self, check_initial, check_robot, detect_deadlock, Decision, Trajectory};
use crate::verify::{relation_respects, step_collision_free};
use crate::RobotId;

use super::config::Setup;

/// Bernoulli spawn probability per lane and step. At 100% density robots
/// arrive every `2R` of headway at full speed.
pub fn spawn_probability(density: f64, v_max: f64, dt: f64, radius: f64) -> f64 {
    ((density / 100.0) * v_max * dt / (2.0 * radius)).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpawnOutcome {
    Spawned {
        robot: Robot,
        graph: PriorityGraph,
    },
    /// A robot is due but its braking trajectory would break a priority.
    Deferred,
}

/// Tries to place a new robot at the spawn point of `lane`, moving at full
/// speed. The robot is only accepted if its all-brake trajectory respects the
/// priorities the setup's policy gives it.
pub fn try_spawn(id: RobotId, lane: usize, state: &SystemState, g: &PriorityGraph, setup: &Setup) -> SpawnOutcome {
    let spawn = setup.layout.lanes()[lane].spawn;
    let robot = Robot::new(id, lane, RobotState::new(spawn, setup.model.v_max()), setup.model);
    let mut next = state.clone();
    if next.insert(robot).is_err() {
        return SpawnOutcome::Deferred;
    }
    let graph = setup.policy.extend(g, id, &next, &setup.table);
    match check_robot(&next, id, &graph, &setup.table, &setup.planner) {
        Ok(()) => SpawnOutcome::Spawned { robot, graph },
        Err(_) => SpawnOutcome::Deferred,
    }
}

/// One Bernoulli trial on `lane`; a success joins the lane's queue of due
/// robots, then the head of the queue is offered to [`try_spawn`].
#[allow(clippy::too_many_arguments)]
pub fn spawn_process(
    p: f64,
    lane: usize,
    queue: &mut usize,
    rng: &mut impl Rng,
    id: RobotId,
    state: &SystemState,
    g: &PriorityGraph,
    setup: &Setup,
) -> Option<SpawnOutcome> {
    if rng.random::<f64>() < p {
        *queue += 1;
    }
    if *queue == 0 {
        return None;
    }
    let out = try_spawn(id, lane, state, g, setup);
    if matches!(out, SpawnOutcome::Spawned { .. }) {
        *queue -= 1;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Run the geometric checker and the invariant assertions every step.
    pub verify: bool,
    pub record_trace: bool,
}

/// What happened to one robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub id: RobotId,
    pub lane: usize,
    pub spawn_step: usize,
    /// Time the robot crossed its exit coordinate.
    pub exit_time: Option<f64>,
    /// Unobstructed travel time from spawn to exit.
    pub ideal_time: f64,
}

impl RobotRecord {
    pub fn travel_time(&self, dt: f64) -> Option<f64> {
        self.exit_time.map(|t| t - self.spawn_step as f64 * dt)
    }

    /// Delay due to coordination, in percent of the unobstructed time.
    pub fn increase_percent(&self, dt: f64) -> Option<f64> {
        self.travel_time(dt).map(|t| 100.0 * (t - self.ideal_time) / self.ideal_time)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub density: f64,
    pub seed: u64,
    pub steps: usize,
    pub spawned: usize,
    pub completed: usize,
    /// Spawns in percent of continuous flow over the spawning period.
    pub achieved_density: f64,
    pub mean_increase: f64,
    pub max_increase: f64,
    pub deferred_spawns: usize,
    pub max_concurrent: usize,
    pub deadlock_step: Option<usize>,
    pub collisions: usize,
    pub invariant_failures: usize,
    pub priority_mismatches: usize,
    pub constrained_pairs: usize,
    /// Whether the run hit its step horizon with robots still on the lanes.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub robots: Vec<RobotRecord>,
    /// Every edge ever assigned.
    pub priorities: Vec<(RobotId, RobotId)>,
    /// State before each step and the decisions taken from it; spawned
    /// robots appear in the state of the step they spawn at.
    pub trace: Option<Trajectory>,
    /// First violation messages, for reports.
    pub violations: Vec<String>,
}

const MAX_REPORTED: usize = 20;

/// Seed of the random stream of one (density, seed) cell.
pub fn cell_seed(seed: u64, density: f64) -> u64 {
    // splitmix64 finalizer over both inputs
    let mut z = seed ^ density.to_bits().rotate_left(17) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulates traffic at one density until `target` robots have spawned and
/// left, a deadlock is detected or `horizon` steps have run.
pub fn run_cell(setup: &Setup, density: f64, seed: u64, target: usize, horizon: usize, opts: RunOptions) -> RunResult {
    let dt = setup.planner.dt;
    let lanes = setup.layout.len();
    let p = spawn_probability(density, setup.model.v_max(), dt, setup.radius);
    let fine_dt = setup.planner.sub_dt / 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, density));

    let mut state = SystemState::default();
    let mut g = PriorityGraph::new();
    let mut observer = PriorityObserver::new();
    let mut queues = vec![0usize; lanes];
    let mut records: BTreeMap<RobotId, RobotRecord> = BTreeMap::new();
    let mut priorities = Vec::new();
    let mut trace = opts.record_trace.then(|| Trajectory { dt, ..Trajectory::default() });
    let mut violations = Vec::new();
    let mut m = RunMetrics {
        density,
        seed,
        steps: 0,
        spawned: 0,
        completed: 0,
        achieved_density: 0.0,
        mean_increase: 0.0,
        max_increase: 0.0,
        deferred_spawns: 0,
        max_concurrent: 0,
        deadlock_step: None,
        collisions: 0,
        invariant_failures: 0,
        priority_mismatches: 0,
        constrained_pairs: 0,
        truncated: false,
    };
    let mut spawn_steps = 0usize;
    let mut next_id = 1u32;

    let mut step = 0usize;
    while step < horizon && (m.spawned < target || !state.is_empty()) {
        let t0 = step as f64 * dt;
        let mut spawned_now = false;
        if m.spawned < target {
            spawn_steps += 1;
            for (lane, queue) in queues.iter_mut().enumerate() {
                if m.spawned >= target {
                    break;
                }
                let id = RobotId(next_id);
                match spawn_process(p, lane, queue, &mut rng, id, &state, &g, setup) {
                    None => {}
                    Some(SpawnOutcome::Deferred) => m.deferred_spawns += 1,
                    Some(SpawnOutcome::Spawned { robot, graph }) => {
                        state.insert(robot).expect("fresh id");
                        priorities.extend(graph.incoming(id).map(|h| (h, id)));
                        priorities.extend(graph.outgoing(id).map(|l| (id, l)));
                        g = graph;
                        records.insert(
                            id,
                            RobotRecord {
                                id,
                                lane,
                                spawn_step: step,
                                exit_time: None,
                                ideal_time: max_arrival_time(
                                    robot.state,
                                    &robot.model,
                                    setup.layout.lanes()[lane].exit,
                                ),
                            },
                        );
                        next_id += 1;
                        m.spawned += 1;
                        spawned_now = true;
                    }
                }
            }
        }
        m.max_concurrent = m.max_concurrent.max(state.len());
        if step == 0 || spawned_now {
            observer.observe(&state, &setup.table);
        }

        let decisions = planner::decisions(&state, &g, &setup.table, &setup.planner);
        if opts.verify {
            if let Err(v) = step_collision_free(&state, &decisions, &setup.layout, setup.radius, dt, fine_dt, t0) {
                m.collisions += 1;
                if violations.len() < MAX_REPORTED {
                    violations.push(format!("step {step}: {v}"));
                }
            }
        }
        let next = planner::apply(&state, &decisions, dt);
        if opts.verify {
            if let Err(e) = check_initial(&next, &g, &setup.table, &setup.planner) {
                m.invariant_failures += 1;
                if violations.len() < MAX_REPORTED {
                    violations.push(format!("step {}: {e}", step + 1));
                }
            }
        }
        observer.observe(&next, &setup.table);
        let stuck = !spawned_now && detect_deadlock(&state, &next, state.is_empty());

        // retire robots past their exit
        let mut after = next.clone();
        for (r, d) in state.robots().iter().zip(&decisions) {
            let exit = setup.layout.lanes()[r.lane].exit;
            let now = next.get(r.id).expect("same robots");
            if now.state.x < exit {
                continue;
            }
            let tau = match d {
                Decision::Accelerate => max_arrival_time(r.state, &r.model, exit),
                Decision::Brake => braking_arrival_time(r.state, &r.model, exit).unwrap_or(dt),
            };
            records.get_mut(&r.id).expect("spawned").exit_time = Some(t0 + tau.min(dt));
            for (_, rel) in observer.take_robot(r.id) {
                if !matches!(rel, PairRelation::Unconstrained) {
                    m.constrained_pairs += 1;
                }
                if !relation_respects(rel, &g) {
                    m.priority_mismatches += 1;
                    if violations.len() < MAX_REPORTED {
                        violations.push(format!(
                            "step {}: robot {} pair relation {rel:?} not assigned",
                            step + 1,
                            r.id
                        ));
                    }
                }
            }
            g.remove_vertex(r.id);
            after.remove(r.id);
            m.completed += 1;
        }

        if let Some(tr) = trace.as_mut() {
            tr.states.push(state.clone());
            tr.decisions.push(decisions);
        }
        state = after;
        step += 1;
        if stuck {
            m.deadlock_step = Some(step);
            break;
        }
    }
    if let Some(tr) = trace.as_mut() {
        tr.states.push(state.clone());
    }
    m.steps = step;
    m.truncated = m.deadlock_step.is_none() && (!state.is_empty() || m.spawned < target);
    let flow =
        lanes as f64 * spawn_steps.max(1) as f64 * spawn_probability(100.0, setup.model.v_max(), dt, setup.radius);
    m.achieved_density = 100.0 * m.spawned as f64 / flow;
    let increases: Vec<f64> = records.values().filter_map(|r| r.increase_percent(dt)).collect();
    if !increases.is_empty() {
        m.mean_increase = increases.iter().sum::<f64>() / increases.len() as f64;
        m.max_increase = increases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    RunResult { metrics: m, robots: records.into_values().collect(), priorities, trace, violations }
}
