mod common;

use common::{cell_of, compare_membership, grid_twin, line, membership_cases};
use priocoord::coordination::{build_cross_section, SectionShape};
use priocoord::geometry::pair_collision;
use priocoord::verify::brute_force_shifted_membership;
use priocoord::{ConflictTable, Point, ShiftBound};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEARCH_STEP: f64 = 0.01;

#[test]
fn analytic_bounds_agree_with_shift_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in membership_cases() {
        let bound = case.section.shift_bound().unwrap();
        let a = compare_membership(&case, &bound, 3000, SEARCH_STEP, SEARCH_STEP, &mut rng);
        assert_eq!(a.far_disagreements, 0, "{}: {a:?}", case.name);
    }
}

/// The grid marks a cell when its centre pair is within `R_sum + cell`, so
/// its shifted region sits between the analytic ones for `R_sum` and
/// `R_sum + 2·cell`.
#[test]
fn grid_bounds_sandwiched_by_analytic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cell = 0.1;
    for angle in [90.0, 30.0] {
        let (pi, pj) = (line(0, Point::default(), 0.0), line(1, Point::default(), angle));
        let lo = build_cross_section(&pi, &pj, 2.0, cell).shift_bound().unwrap();
        let hi = build_cross_section(&pi, &pj, 2.0 + 2.0 * cell, cell).shift_bound().unwrap();
        let grid = priocoord::coordination::build_grid_section(&pi, &pj, 2.0, cell);
        assert_eq!(cell_of(&grid), Some(cell));
        let grid = grid.shift_bound().unwrap();
        for _ in 0..5000 {
            let (xi, xj) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            if lo.contains(xi, xj) {
                assert!(grid.contains(xi, xj), "{angle}: ({xi}, {xj}) missed by the grid");
            }
            if grid.contains(xi, xj) {
                assert!(hi.contains(xi, xj), "{angle}: ({xi}, {xj}) beyond the grid margin");
            }
        }
    }
}

#[test]
fn grid_sections_cover_every_collision() {
    let pi = line(0, Point::default(), 0.0);
    let pj = line(1, Point::new(0.0, 1.0), 55.0);
    let grid = priocoord::coordination::build_grid_section(&pi, &pj, 2.0, 0.1);
    assert!(matches!(grid.shape, SectionShape::Grid(_)));
    let mut k = 0;
    for a in -400..=400 {
        for b in -400..=400 {
            let (x, y) = (a as f64 * 0.05, b as f64 * 0.05);
            if pair_collision(&pi, x, 1.0, &pj, y, 1.0).unwrap() {
                assert!(grid.contains(x, y), "({x}, {y}) collides but is not marked");
                k += 1;
            }
        }
    }
    assert!(k > 1000);
}

#[test]
fn shift_examples_reproduce_by_search() {
    let table = ConflictTable::build(&[line(0, Point::default(), 0.0), line(1, Point::default(), 90.0)], 1.0, 0.0, 0.1);
    let s = table.section(0, 1);
    for ((xi, xj), want) in [((0.0, -1.0), true), ((3.0, 5.0), false), ((0.0, -2.5), false), ((0.1, 0.1), true)] {
        assert_eq!(brute_force_shifted_membership(xi, xj, s, SEARCH_STEP, None), want, "({xi}, {xj})");
        assert_eq!(table.raw_bound(0, 1).unwrap().contains(xi, xj), want, "({xi}, {xj})");
    }
    let empty = build_cross_section(&line(0, Point::default(), 0.0), &line(1, Point::new(0.0, 3.0), 0.0), 2.0, 0.1);
    assert!(!brute_force_shifted_membership(0.0, 0.0, &empty, SEARCH_STEP, None));
}

fn bounds() -> Vec<ShiftBound> {
    let mut out = Vec::new();
    for case in membership_cases() {
        out.push(case.section.shift_bound().unwrap());
        out.push(case.section.transposed().shift_bound().unwrap());
    }
    out.push(grid_twin("ellipse at 30 degrees", 0.1).shift_bound().unwrap());
    out
}

proptest! {
    #[test]
    fn shift_bound_is_nondecreasing(a in -12.0..12.0f64, d in 0.0..6.0f64) {
        for b in bounds() {
            match (b.bound(a), b.bound(a + d)) {
                (Some(w0), Some(w1)) => prop_assert!(w1 >= w0),
                (Some(_), None) => prop_assert!(false, "bound vanished as x_j grew"),
                _ => {}
            }
        }
    }

    /// Leaving the region is permanent once the robot with priority moves
    /// ahead and the other falls back.
    #[test]
    fn free_set_is_closed_under_priority_moves(
        xi in -12.0..12.0f64, xj in -12.0..12.0f64, di in 0.0..5.0f64, dj in 0.0..5.0f64,
    ) {
        for b in bounds() {
            if !b.contains(xi, xj) {
                prop_assert!(!b.contains(xi + di, xj - dj));
            }
        }
    }
}
