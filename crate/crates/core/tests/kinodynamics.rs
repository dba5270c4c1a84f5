mod common;

use common::{integrate_profile, model, relative_error, rk4_clamped};
use priocoord::kinodynamics::{braking_state, max_state, stopping_distance};
use priocoord::{KinodynamicModel, RobotState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 0.25;

#[test]
fn braking_examples_against_integrator() {
    let m = model();
    for (t, want) in [(10.0, RobotState::new(7.5, 0.5)), (30.0, RobotState::new(10.0, 0.0))] {
        let oracle = rk4_clamped(RobotState::new(0.0, 1.0), &m, m.a_min(), t, H);
        assert!((oracle.x - want.x).abs() < 1e-12 && (oracle.v - want.v).abs() < 1e-12, "{oracle:?}");
        let got = braking_state(RobotState::new(0.0, 1.0), &m, t);
        assert!((got.x - want.x).abs() < 1e-12 && (got.v - want.v).abs() < 1e-12, "{got:?}");
    }
}

#[test]
fn max_example_against_integrator() {
    let m = model();
    let s = RobotState::new(0.0, 0.5);
    let oracle = rk4_clamped(s, &m, m.a_max(), 10.0, H);
    let got = max_state(s, &m, 10.0);
    assert!((oracle.x - 7.5).abs() < 1e-12 && (oracle.v - 1.0).abs() < 1e-12);
    assert!((got.x - 7.5).abs() < 1e-12 && (got.v - 1.0).abs() < 1e-12);
}

#[test]
fn stopping_distances() {
    let m = model();
    assert!((stopping_distance(RobotState::new(0.0, 1.0), &m) - 10.0).abs() < 1e-12);
    assert!((stopping_distance(RobotState::new(0.0, 0.5), &m) - 2.5).abs() < 1e-12);
    let rest = rk4_clamped(RobotState::new(0.0, 0.5), &m, m.a_min(), 1e3, H);
    assert!((rest.x - 2.5).abs() < 1e-12);
}

#[test]
fn closed_forms_match_integrator_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let v_max = rng.random_range(0.5..3.0);
        let a_max = rng.random_range(0.01..1.0);
        let a_min = -rng.random_range(0.01..1.0);
        let m = KinodynamicModel::new(v_max, a_max, a_min).unwrap();
        let s = RobotState::new(rng.random_range(-50.0..50.0), rng.random_range(0.0..=v_max));
        let t = rng.random_range(0.0..100.0);
        for (accel, got) in [(a_min, braking_state(s, &m, t)), (a_max, max_state(s, &m, t))] {
            let want = rk4_clamped(s, &m, accel, t, H);
            worst = worst.max(relative_error(got.x, want.x)).max(relative_error(got.v, want.v));
        }
    }
    assert!(worst < 1e-9, "worst relative error {worst:e}");
}

#[test]
fn reachable_positions_lie_between_braking_and_maximal() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let s = RobotState::new(rng.random_range(-20.0..0.0), rng.random_range(0.0..=1.0));
        let commands: Vec<f64> = (0..60).map(|_| rng.random_range(m.a_min()..=m.a_max())).collect();
        let path = integrate_profile(s, &m, &commands, 1.0, 0.1);
        for (k, y) in path.iter().enumerate() {
            let t = k as f64;
            let lo = braking_state(s, &m, t).x;
            let hi = max_state(s, &m, t).x;
            assert!(lo - 1e-9 <= y.x && y.x <= hi + 1e-9, "t={t}: {lo} <= {} <= {hi}", y.x);
            assert!((0.0..=m.v_max() + 1e-12).contains(&y.v));
        }
    }
}

fn arb_state() -> impl Strategy<Value = RobotState> {
    (-100.0..100.0f64, 0.0..=1.0f64).prop_map(|(x, v)| RobotState::new(x, v))
}

proptest! {
    #[test]
    fn braking_is_a_semigroup(s in arb_state(), t1 in 0.0..40.0f64, t2 in 0.0..40.0f64) {
        let m = model();
        let a = braking_state(braking_state(s, &m, t1), &m, t2);
        let b = braking_state(s, &m, t1 + t2);
        prop_assert!((a.x - b.x).abs() <= 1e-12 * b.x.abs().max(1.0));
        prop_assert!((a.v - b.v).abs() <= 1e-12);
    }

    #[test]
    fn maximal_is_a_semigroup(s in arb_state(), t1 in 0.0..40.0f64, t2 in 0.0..40.0f64) {
        let m = model();
        let a = max_state(max_state(s, &m, t1), &m, t2);
        let b = max_state(s, &m, t1 + t2);
        prop_assert!((a.x - b.x).abs() <= 1e-12 * b.x.abs().max(1.0));
        prop_assert!((a.v - b.v).abs() <= 1e-12);
    }

    #[test]
    fn trajectories_are_monotone_and_continuous(s in arb_state(), t in 0.0..60.0f64, dt in 0.0..1.0f64) {
        let m = model();
        for f in [braking_state, max_state] {
            let a = f(s, &m, t);
            let b = f(s, &m, t + dt);
            prop_assert!(b.x >= a.x);
            // speed is bounded by v_max
            prop_assert!(b.x - a.x <= m.v_max() * dt + 1e-12);
        }
    }
}
