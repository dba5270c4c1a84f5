//! Trace and priority files.
//!
//! A trace is a CSV file with one row per robot per step:
//! `step,id,lane,x,v,decision`. The state after the last step has an empty
//! decision. Header comment lines carry the scenario fingerprint and the
//! time step.

use std::fmt::Write as _;

use priocoord::planner::{Decision, Trajectory};
use priocoord::simulator::ScenarioConfig;
use priocoord::{KinodynamicModel, Robot, RobotId, RobotState, SystemState};
use sha2::{Digest, Sha256};
use thiserror::Error;

const MAGIC: &str = "# priocoord trace v1";
const HEADER: &str = "step,id,lane,x,v,decision";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("trace was written for scenario {found}, not {expected}")]
    Scenario { expected: String, found: String },
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Fingerprint of everything in a scenario that shapes a trajectory except
/// the sweep settings, so a trace can be checked against any density or
/// seed of the same scenario.
pub fn scenario_fingerprint(cfg: &ScenarioConfig) -> String {
    let geometry = ScenarioConfig { sweep: Default::default(), ..cfg.clone() };
    sha256_hex(geometry.to_toml().as_bytes())
}

/// `digits` significant digits; 17 round-trips every `f64`.
fn number(x: f64, digits: usize) -> String {
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    // shortest form when it reads back to the same value
    let short = format!("{x:?}");
    if short.parse::<f64>().ok() == s.parse::<f64>().ok() {
        short
    } else {
        s
    }
}

fn decision_name(d: Decision) -> &'static str {
    match d {
        Decision::Brake => "brake",
        Decision::Accelerate => "accelerate",
    }
}

pub fn write_trace(traj: &Trajectory, fingerprint: &str, digits: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "# scenario-sha256 {fingerprint}");
    let _ = writeln!(out, "# dt {}", traj.dt);
    let _ = writeln!(out, "# steps {}", traj.states.len());
    let _ = writeln!(out, "{HEADER}");
    for (k, state) in traj.states.iter().enumerate() {
        let decisions = traj.decisions.get(k);
        for (i, r) in state.robots().iter().enumerate() {
            let d = decisions.map_or("", |d| decision_name(d[i]));
            let _ = writeln!(
                out,
                "{k},{},{},{},{},{d}",
                r.id,
                r.lane,
                number(r.state.x, digits),
                number(r.state.v, digits)
            );
        }
    }
    out
}

/// Parses a trace, giving every robot `model`. Steps without robots are
/// kept as empty states.
pub fn read_trace(text: &str, fingerprint: &str, model: KinodynamicModel) -> Result<Trajectory, TraceError> {
    let err = |line: usize, msg: &str| TraceError::Parse { line: line + 1, msg: msg.to_string() };
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(MAGIC) {
        return Err(err(0, "not a priocoord trace"));
    }
    let mut dt = None;
    let mut declared = None;
    let mut rows: Vec<(usize, Robot, Option<Decision>)> = Vec::new();
    for (n, line) in lines {
        if let Some(rest) = line.strip_prefix("# scenario-sha256 ") {
            if rest != fingerprint {
                return Err(TraceError::Scenario { expected: fingerprint.into(), found: rest.into() });
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("# dt ") {
            dt = Some(rest.parse::<f64>().map_err(|e| err(n, &e.to_string()))?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# steps ") {
            declared = Some(rest.parse::<usize>().map_err(|e| err(n, &e.to_string()))?);
            continue;
        }
        if line.starts_with('#') || line == HEADER || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let [step, id, lane, x, v, d] = f[..] else { return Err(err(n, "expected 6 fields")) };
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(n, &e.to_string()));
        let decision = match d {
            "brake" => Some(Decision::Brake),
            "accelerate" => Some(Decision::Accelerate),
            "" => None,
            other => return Err(err(n, &format!("unknown decision {other:?}"))),
        };
        let robot = Robot::new(
            RobotId(id.parse().map_err(|_| err(n, "bad robot id"))?),
            lane.parse().map_err(|_| err(n, "bad lane"))?,
            RobotState::new(num(x)?, num(v)?),
            model,
        );
        rows.push((step.parse().map_err(|_| err(n, "bad step"))?, robot, decision));
    }
    let Some(dt) = dt else { return Err(err(0, "missing dt header")) };
    let seen = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let steps = declared.unwrap_or(seen);
    if seen > steps {
        return Err(err(0, &format!("row for step {} beyond the {steps} declared", seen - 1)));
    }
    let mut robots: Vec<Vec<Robot>> = vec![Vec::new(); steps];
    let mut decisions: Vec<Vec<Option<Decision>>> = vec![Vec::new(); steps];
    for (k, r, d) in rows {
        robots[k].push(r);
        decisions[k].push(d);
    }
    let mut traj = Trajectory { dt, states: Vec::with_capacity(steps), decisions: Vec::new() };
    for (k, (rs, ds)) in robots.into_iter().zip(decisions).enumerate() {
        let ids: Vec<RobotId> = rs.iter().map(|r| r.id).collect();
        let state = SystemState::new(rs).map_err(|e| err(0, &format!("step {k}: {e}")))?;
        // `SystemState` sorts by id; keep decisions aligned with it
        let mut ds: Vec<(RobotId, Option<Decision>)> = ids.into_iter().zip(ds).collect();
        ds.sort_by_key(|p| p.0);
        if k + 1 < steps {
            let ds: Option<Vec<Decision>> = ds.into_iter().map(|p| p.1).collect();
            traj.decisions.push(ds.ok_or_else(|| err(0, &format!("step {k} misses decisions")))?);
        }
        traj.states.push(state);
    }
    Ok(traj)
}

pub fn write_priorities(edges: &[(RobotId, RobotId)]) -> String {
    let mut out = String::from("high,low\n");
    for (h, l) in edges {
        let _ = writeln!(out, "{h},{l}");
    }
    out
}

pub fn read_priorities(text: &str) -> Result<Vec<(RobotId, RobotId)>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && *l != "high,low")
        .map(|(n, l)| {
            let (h, lo) =
                l.split_once(',').ok_or(TraceError::Parse { line: n + 1, msg: "expected high,low".into() })?;
            let id = |s: &str| {
                s.parse().map(RobotId).map_err(|_| TraceError::Parse { line: n + 1, msg: format!("bad id {s:?}") })
            };
            Ok((id(h)?, id(lo)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> KinodynamicModel {
        KinodynamicModel::new(1.0, 0.05, -0.05).unwrap()
    }

    fn sample() -> Trajectory {
        let r = |id, lane, x, v| Robot::new(RobotId(id), lane, RobotState::new(x, v), model());
        let s0 = SystemState::new(vec![r(2, 1, -0.1, 1.0 / 3.0), r(1, 0, 1e-300, 0.95)]).unwrap();
        let s1 = SystemState::new(vec![r(2, 1, std::f64::consts::PI, 0.0)]).unwrap();
        Trajectory { dt: 1.0, states: vec![s0, s1], decisions: vec![vec![Decision::Accelerate, Decision::Brake]] }
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        let text = write_trace(&t, "abc", 17);
        let back = read_trace(&text, "abc", model()).unwrap();
        assert_eq!(back, t);
        assert_eq!(write_trace(&back, "abc", 17), text);
    }

    #[test]
    fn low_precision_loses_bits() {
        let text = write_trace(&sample(), "abc", 4);
        assert!(text.contains("3.142e0"));
        assert_ne!(read_trace(&text, "abc", model()).unwrap(), sample());
    }

    #[test]
    fn rejects_other_scenarios_and_garbage() {
        let text = write_trace(&sample(), "abc", 17);
        assert!(matches!(read_trace(&text, "def", model()), Err(TraceError::Scenario { .. })));
        assert!(read_trace("step,id\n", "abc", model()).is_err());
        let broken = text.replace("accelerate", "jump");
        assert!(matches!(read_trace(&broken, "abc", model()), Err(TraceError::Parse { .. })));
    }

    #[test]
    fn priorities_round_trip() {
        let e = vec![(RobotId(3), RobotId(1)), (RobotId(1), RobotId(7))];
        assert_eq!(read_priorities(&write_priorities(&e)).unwrap(), e);
        assert!(read_priorities("1;2\n").is_err());
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
