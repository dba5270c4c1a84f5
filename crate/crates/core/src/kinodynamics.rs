//! Double-integrator robots with box constraints on velocity and
//! acceleration, and the closed-form extreme trajectories of that model.
//!
//! The braking (minimal) trajectory decelerates at `a_min` until it stops and
//! then holds position. The maximal trajectory accelerates at `a_max` up to
//! `v_max` and then cruises. Every admissible trajectory from the same state
//! stays between the two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::Configuration;
use crate::RobotId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinodynamicsError {
    #[error("invalid model: v_max={v_max}, a_max={a_max}, a_min={a_min} (need v_max>0, a_max>0, a_min<0)")]
    BadModel { v_max: f64, a_max: f64, a_min: f64 },
    #[error("robot {id}: velocity {v} outside [0, {v_max}]")]
    VelocityOutOfBounds { id: RobotId, v: f64, v_max: f64 },
    #[error("robot {0}: non-finite position")]
    NonFinite(RobotId),
    #[error("robot {0} appears twice")]
    DuplicateRobot(RobotId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinodynamicModel {
    v_max: f64,
    a_max: f64,
    a_min: f64,
}

impl KinodynamicModel {
    pub fn new(v_max: f64, a_max: f64, a_min: f64) -> Result<Self, KinodynamicsError> {
        let ok =
            v_max > 0.0 && a_max > 0.0 && a_min < 0.0 && v_max.is_finite() && a_max.is_finite() && a_min.is_finite();
        if ok {
            Ok(Self { v_max, a_max, a_min })
        } else {
            Err(KinodynamicsError::BadModel { v_max, a_max, a_min })
        }
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// Maximum deceleration, negative.
    pub fn a_min(&self) -> f64 {
        self.a_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub v: f64,
}

impl RobotState {
    pub const fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }
}

/// Position and velocity after braking for `t` from `state`.
pub fn braking_state(state: RobotState, model: &KinodynamicModel, t: f64) -> RobotState {
    let decel = -model.a_min;
    let t_stop = state.v / decel;
    if t >= t_stop {
        RobotState::new(state.x + state.v * state.v / (2.0 * decel), 0.0)
    } else {
        let x = state.x + t * (state.v - 0.5 * decel * t);
        let rest = state.x + state.v * state.v / (2.0 * decel);
        RobotState::new(x.min(rest), (state.v - decel * t).max(0.0))
    }
}

/// Position and velocity after accelerating for `t` from `state`.
pub fn max_state(state: RobotState, model: &KinodynamicModel, t: f64) -> RobotState {
    let t_acc = (model.v_max - state.v) / model.a_max;
    if t >= t_acc {
        let x_acc = state.x + t_acc * (state.v + 0.5 * model.a_max * t_acc);
        RobotState::new(x_acc + model.v_max * (t - t_acc), model.v_max)
    } else {
        RobotState::new(state.x + t * (state.v + 0.5 * model.a_max * t), (state.v + model.a_max * t).min(model.v_max))
    }
}

pub fn stopping_distance(state: RobotState, model: &KinodynamicModel) -> f64 {
    state.v * state.v / (-2.0 * model.a_min)
}

/// Time for the braking trajectory to come to rest.
pub fn stopping_time(state: RobotState, model: &KinodynamicModel) -> f64 {
    state.v / -model.a_min
}

/// Earliest time at which the maximal trajectory from `state` reaches
/// `target`; zero when already there.
pub fn max_arrival_time(state: RobotState, model: &KinodynamicModel, target: f64) -> f64 {
    let d = target - state.x;
    if d <= 0.0 {
        return 0.0;
    }
    let a = model.a_max;
    let d_acc = (model.v_max * model.v_max - state.v * state.v) / (2.0 * a);
    if d <= d_acc {
        (-state.v + (state.v * state.v + 2.0 * a * d).sqrt()) / a
    } else {
        (model.v_max - state.v) / a + (d - d_acc) / model.v_max
    }
}

/// Time at which the braking trajectory from `state` reaches `target`, or
/// `None` if it stops short of it.
pub fn braking_arrival_time(state: RobotState, model: &KinodynamicModel, target: f64) -> Option<f64> {
    let d = target - state.x;
    if d <= 0.0 {
        return Some(0.0);
    }
    let decel = -model.a_min;
    let disc = state.v * state.v - 2.0 * decel * d;
    if disc < 0.0 {
        return None;
    }
    Some((state.v - disc.sqrt()) / decel)
}

/// A robot of the system: identity, assigned lane, state and constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: RobotId,
    pub lane: usize,
    pub state: RobotState,
    pub model: KinodynamicModel,
}

impl Robot {
    pub fn new(id: RobotId, lane: usize, state: RobotState, model: KinodynamicModel) -> Self {
        Self { id, lane, state, model }
    }

    pub fn braking(&self, t: f64) -> RobotState {
        braking_state(self.state, &self.model, t)
    }

    pub fn maximal(&self, t: f64) -> RobotState {
        max_state(self.state, &self.model, t)
    }
}

/// States of all robots, kept sorted by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemState {
    robots: Vec<Robot>,
}

impl SystemState {
    pub fn new(mut robots: Vec<Robot>) -> Result<Self, KinodynamicsError> {
        robots.sort_by_key(|r| r.id);
        for w in robots.windows(2) {
            if w[0].id == w[1].id {
                return Err(KinodynamicsError::DuplicateRobot(w[0].id));
            }
        }
        for r in &robots {
            Self::check(r)?;
        }
        Ok(Self { robots })
    }

    fn check(r: &Robot) -> Result<(), KinodynamicsError> {
        if !r.state.x.is_finite() {
            return Err(KinodynamicsError::NonFinite(r.id));
        }
        if !(r.state.v >= 0.0 && r.state.v <= r.model.v_max()) {
            return Err(KinodynamicsError::VelocityOutOfBounds { id: r.id, v: r.state.v, v_max: r.model.v_max() });
        }
        Ok(())
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn index_of(&self, id: RobotId) -> Option<usize> {
        self.robots.binary_search_by_key(&id, |r| r.id).ok()
    }

    pub fn get(&self, id: RobotId) -> Option<&Robot> {
        self.index_of(id).map(|k| &self.robots[k])
    }

    pub fn insert(&mut self, robot: Robot) -> Result<(), KinodynamicsError> {
        Self::check(&robot)?;
        match self.robots.binary_search_by_key(&robot.id, |r| r.id) {
            Ok(_) => Err(KinodynamicsError::DuplicateRobot(robot.id)),
            Err(pos) => {
                self.robots.insert(pos, robot);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, id: RobotId) -> Option<Robot> {
        self.index_of(id).map(|k| self.robots.remove(k))
    }

    /// Replaces robot states in id order; the iterator must yield one state
    /// per robot.
    pub(crate) fn with_states(&self, states: impl IntoIterator<Item = RobotState>) -> SystemState {
        let robots = self.robots.iter().zip(states).map(|(r, state)| Robot { state, ..*r }).collect();
        SystemState { robots }
    }

    /// All robots braking for `t`.
    pub fn braking(&self, t: f64) -> SystemState {
        self.with_states(self.robots.iter().map(|r| r.braking(t)))
    }

    pub fn all_stopped(&self) -> bool {
        self.robots.iter().all(|r| r.state.v == 0.0)
    }

    pub fn positions(&self) -> Configuration {
        position_vector(self)
    }
}

/// Projection of a system state onto robot positions, in id order.
pub fn position_vector(s: &SystemState) -> Configuration {
    s.robots.iter().map(|r| r.state.x).collect::<Vec<_>>().into()
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn model() -> impl Strategy<Value = KinodynamicModel> {
        (0.1f64..5.0, 0.01f64..2.0, 0.01f64..2.0).prop_map(|(v, a, b)| KinodynamicModel::new(v, a, -b).unwrap())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn semigroup(m in model(), x in -50.0f64..50.0, frac in 0.0f64..=1.0, t1 in 0.0f64..100.0, t2 in 0.0f64..100.0) {
            let s = RobotState::new(x, frac * m.v_max());
            let a = braking_state(braking_state(s, &m, t1), &m, t2);
            let b = braking_state(s, &m, t1 + t2);
            prop_assert!(close(a.x, b.x) && close(a.v, b.v), "{a:?} vs {b:?}");
            let a = max_state(max_state(s, &m, t1), &m, t2);
            let b = max_state(s, &m, t1 + t2);
            prop_assert!(close(a.x, b.x) && close(a.v, b.v), "{a:?} vs {b:?}");
        }

        #[test]
        fn monotone_in_time(m in model(), frac in 0.0f64..=1.0, t1 in 0.0f64..100.0, dt in 0.0f64..10.0) {
            let s = RobotState::new(0.0, frac * m.v_max());
            prop_assert!(braking_state(s, &m, t1 + dt).x >= braking_state(s, &m, t1).x);
            prop_assert!(max_state(s, &m, t1 + dt).x >= max_state(s, &m, t1).x);
            prop_assert!(max_state(s, &m, t1).x >= braking_state(s, &m, t1).x);
        }

        #[test]
        fn arrival_inverts_max(m in model(), frac in 0.0f64..=1.0, d in 0.0f64..100.0) {
            let s = RobotState::new(0.0, frac * m.v_max());
            let t = max_arrival_time(s, &m, d);
            prop_assert!((max_state(s, &m, t).x - d).abs() <= 1e-9 * d.max(1.0));
        }
    }
}
