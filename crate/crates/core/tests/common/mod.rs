//! Reference implementations shared by the integration tests and the
//! acceptance harness. Nothing here calls the closed forms it is compared
//! against.

#![allow(dead_code)]

use priocoord::coordination::{CrossSection, SectionShape, ShiftBound};
use priocoord::geometry::{IntersectionLayout, Lane};
use priocoord::{
    ConflictTable, KinodynamicModel, PathGeometry, PlannerConfig, Point, PriorityGraph, Robot, RobotId, RobotState,
    SystemState,
};
use rand::Rng;

pub fn model() -> KinodynamicModel {
    KinodynamicModel::new(1.0, 0.05, -0.05).unwrap()
}

pub fn robot(id: u32, lane: usize, x: f64, v: f64) -> Robot {
    Robot::new(RobotId(id), lane, RobotState::new(x, v), model())
}

pub fn line(id: usize, anchor: Point, angle_deg: f64) -> PathGeometry {
    let a = angle_deg.to_radians();
    PathGeometry::straight_through(id, anchor, Point::new(a.cos(), a.sin()), -60.0, 60.0).unwrap()
}

/// Two orthogonal lanes crossing at coordinate 0 of both.
pub fn cross_table(cfg: &PlannerConfig) -> ConflictTable {
    ConflictTable::build(&[line(0, Point::default(), 0.0), line(1, Point::default(), 90.0)], 1.0, cfg.inflation, 0.1)
}

/// Three lanes running around an equilateral triangle of side 20. Lane `k`
/// is at coordinate 0 where it meets lane `k+1` and at 20 where it meets
/// lane `k−1`, so G = {2≻1, 3≻2, 1≻3} makes every robot wait for the next.
pub fn triangle_layout() -> IntersectionLayout {
    let h = 20.0 * 3f64.sqrt() / 2.0;
    let corners = [Point::new(0.0, 0.0), Point::new(10.0, h), Point::new(20.0, 0.0)];
    let lanes = (0..3)
        .map(|k| {
            let from = corners[k];
            let to = corners[(k + 2) % 3];
            let dir = to - from;
            let path = PathGeometry::straight_through(k, from, dir, -60.0, 60.0).unwrap();
            Lane { path, spawn: -40.0, exit: 40.0 }
        })
        .collect();
    IntersectionLayout::new(lanes).unwrap()
}

pub fn triangle_instance() -> (SystemState, PriorityGraph) {
    let s = SystemState::new(vec![robot(1, 0, -25.0, 1.0), robot(2, 1, -25.0, 1.0), robot(3, 2, -25.0, 1.0)]).unwrap();
    let g = PriorityGraph::from_edges([(RobotId(2), RobotId(1)), (RobotId(3), RobotId(2)), (RobotId(1), RobotId(3))])
        .unwrap();
    (s, g)
}

/// Clamped double integrator under a constant acceleration command,
/// integrated with classical RK4. Steps that would carry the velocity past
/// 0 or `v_max` are cut at the crossing, located by bisection on the step
/// length, and integration continues in the saturated regime.
pub fn rk4_clamped(state: RobotState, m: &KinodynamicModel, accel: f64, duration: f64, h: f64) -> RobotState {
    let (mut x, mut v) = (state.x, state.v);
    let mut t = 0.0;
    while t < duration {
        let dt = h.min(duration - t);
        let saturated = (accel < 0.0 && v <= 0.0) || (accel > 0.0 && v >= m.v_max());
        let a = if saturated { 0.0 } else { accel };
        let (nx, nv) = rk4_step(x, v, a, dt);
        let limit = if accel < 0.0 { 0.0 } else { m.v_max() };
        let crosses = !saturated && ((accel < 0.0 && nv < 0.0) || (accel > 0.0 && nv > m.v_max()));
        if crosses {
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let (_, mv) = rk4_step(x, v, a, mid);
                if (mv - limit) * (v - limit) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (cx, _) = rk4_step(x, v, a, hi);
            x = cx;
            v = limit;
            t += hi;
        } else {
            x = nx;
            v = if saturated { v } else { nv };
            t += dt;
        }
    }
    RobotState::new(x, v)
}

fn rk4_step(x: f64, v: f64, a: f64, h: f64) -> (f64, f64) {
    // y = (x, v), y' = (v, a)
    let f = |_x: f64, v: f64| (v, a);
    let k1 = f(x, v);
    let k2 = f(x + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
    let k3 = f(x + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
    let k4 = f(x + h * k3.0, v + h * k3.1);
    (x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
}

/// Integrates a piecewise-constant acceleration profile, one command per
/// `segment` seconds, clamped like the model.
pub fn integrate_profile(
    state: RobotState,
    m: &KinodynamicModel,
    commands: &[f64],
    segment: f64,
    h: f64,
) -> Vec<RobotState> {
    let mut out = vec![state];
    let mut s = state;
    for &a in commands {
        s = rk4_clamped(s, m, a, segment, h);
        out.push(s);
    }
    out
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Sections used by the membership checks, first axis = robot with priority.
pub struct MembershipCase {
    pub name: &'static str,
    pub section: CrossSection,
    /// Window for random configurations, `((i_lo, i_hi), (j_lo, j_hi))`.
    pub window: ((f64, f64), (f64, f64)),
    /// Search window for strips.
    pub search: Option<(f64, f64)>,
}

pub fn membership_cases() -> Vec<MembershipCase> {
    let disc = ConflictTable::build(&[line(0, Point::default(), 0.0), line(1, Point::default(), 90.0)], 1.0, 0.0, 0.1);
    let ellipse =
        ConflictTable::build(&[line(0, Point::default(), 0.0), line(1, Point::default(), 30.0)], 1.0, 0.0, 0.1);
    let strip = ConflictTable::build(&[line(0, Point::default(), 0.0)], 1.0, 0.0, 0.1);
    vec![
        MembershipCase {
            name: "disc",
            section: disc.section(0, 1).clone(),
            window: ((-4.0, 4.0), (-4.0, 4.0)),
            search: None,
        },
        MembershipCase {
            name: "ellipse at 30 degrees",
            section: ellipse.section(0, 1).clone(),
            window: ((-9.0, 9.0), (-9.0, 9.0)),
            search: None,
        },
        MembershipCase {
            name: "truncated strip",
            section: strip.section(0, 0).clone(),
            window: ((-10.0, 10.0), (-10.0, 10.0)),
            search: Some((10.0 + 2.0, -10.0 - 2.0)),
        },
    ]
}

/// Rasterized version of a straight-pair section with the same geometry.
pub fn grid_twin(name: &str, cell: f64) -> CrossSection {
    use priocoord::coordination::build_grid_section;
    match name {
        "disc" => build_grid_section(&line(0, Point::default(), 0.0), &line(1, Point::default(), 90.0), 2.0, cell),
        "ellipse at 30 degrees" => {
            build_grid_section(&line(0, Point::default(), 0.0), &line(1, Point::default(), 30.0), 2.0, cell)
        }
        _ => panic!("no grid twin for {name}"),
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Agreement {
    pub samples: usize,
    pub exact_disagreements: usize,
    /// Disagreements with no boundary within `tolerance` of the sample.
    pub far_disagreements: usize,
}

/// Compares `bound` against the brute-force shift search on `n` random
/// configurations. A disagreement is "near" when moving the sample by
/// `tolerance` towards and away from the region flips `bound`'s answer.
pub fn compare_membership(
    case: &MembershipCase,
    bound: &ShiftBound,
    n: usize,
    search_step: f64,
    tolerance: f64,
    rng: &mut impl Rng,
) -> Agreement {
    let ((i0, i1), (j0, j1)) = case.window;
    let mut out = Agreement { samples: n, ..Default::default() };
    for _ in 0..n {
        let xi = rng.random_range(i0..i1);
        let xj = rng.random_range(j0..j1);
        let fast = bound.contains(xi, xj);
        let slow = priocoord::verify::brute_force_shifted_membership(xi, xj, &case.section, search_step, case.search);
        if fast != slow {
            out.exact_disagreements += 1;
            let inside = bound.contains(xi - tolerance, xj + tolerance);
            let outside = bound.contains(xi + tolerance, xj - tolerance);
            if inside == outside {
                out.far_disagreements += 1;
            }
        }
    }
    out
}

/// The grid cell of a section, if rasterized.
pub fn cell_of(section: &CrossSection) -> Option<f64> {
    match &section.shape {
        SectionShape::Grid(g) => Some(g.cell),
        _ => None,
    }
}

/// Random instance for the left-greedy comparison: 2–4 robots on distinct
/// lanes of the default crossroads, an acyclic random priority order and
/// positions before every conflict.
pub fn greedy_instance(rng: &mut impl Rng, m: KinodynamicModel) -> (SystemState, PriorityGraph) {
    let n = rng.random_range(2..=4usize);
    let mut lanes: Vec<usize> = (0..4).collect();
    for k in (1..lanes.len()).rev() {
        lanes.swap(k, rng.random_range(0..=k));
    }
    let robots: Vec<Robot> = (0..n)
        .map(|k| {
            let x = rng.random_range(-20.0..-6.0);
            let v = if rng.random::<bool>() { 0.0 } else { m.v_max() };
            Robot::new(RobotId(k as u32 + 1), lanes[k], RobotState::new(x, v), m)
        })
        .collect();
    let s = SystemState::new(robots).unwrap();
    // priority order = a random permutation of the robots
    let mut order: Vec<RobotId> = s.robots().iter().map(|r| r.id).collect();
    for k in (1..order.len()).rev() {
        order.swap(k, rng.random_range(0..=k));
    }
    let mut g = PriorityGraph::new();
    for r in s.robots() {
        g.add_vertex(r.id);
    }
    let four_way = four_way_table();
    for (a, &hi) in order.iter().enumerate() {
        for &lo in &order[a + 1..] {
            let (la, lb) = (s.get(hi).unwrap().lane, s.get(lo).unwrap().lane);
            if four_way.conflicts(la, lb) {
                g.add_edge(hi, lo).unwrap();
            }
        }
    }
    (s, g)
}

pub fn four_way_layout() -> IntersectionLayout {
    IntersectionLayout::four_way(1.0, 3.0, 30.0, 40.0).unwrap()
}

pub fn four_way_table() -> ConflictTable {
    ConflictTable::for_layout(&four_way_layout(), 1.0, 0.5, 0.1)
}

/// `n` robots spread over the four lanes of the default crossroads, 3.5
/// apart, with first-come priorities.
pub fn crowded_state(n: usize) -> (SystemState, PriorityGraph, ConflictTable) {
    let table = four_way_table();
    let robots = (0..n)
        .map(|k| {
            let lane = k % 4;
            let rank = (k / 4) as f64;
            Robot::new(RobotId(k as u32 + 1), lane, RobotState::new(-4.5 - 3.5 * rank, 0.6), model())
        })
        .collect();
    let s = SystemState::new(robots).unwrap();
    let g = priocoord::policy::assign_priorities(&s, &table);
    (s, g, table)
}

/// Layout of the two lanes behind [`cross_table`].
pub fn cross_layout() -> IntersectionLayout {
    let lane = |id, angle| Lane { path: line(id, Point::default(), angle), spawn: -50.0, exit: 50.0 };
    IntersectionLayout::new(vec![lane(0, 0.0), lane(1, 90.0)]).unwrap()
}

/// Random state on the default crossroads: up to `n` robots, at most three
/// per lane, spaced at least 2.5 apart.
pub fn random_state(rng: &mut impl Rng, n: usize, m: KinodynamicModel) -> SystemState {
    let mut robots = Vec::new();
    let mut id = 1;
    for lane in 0..4 {
        let mut x = rng.random_range(-20.0..5.0);
        for _ in 0..rng.random_range(0..=3usize) {
            if robots.len() == n {
                break;
            }
            let v = rng.random_range(0.0..=m.v_max());
            robots.push(Robot::new(RobotId(id), lane, RobotState::new(x, v), m));
            id += 1;
            x -= rng.random_range(2.6..6.0);
        }
    }
    SystemState::new(robots).unwrap()
}
