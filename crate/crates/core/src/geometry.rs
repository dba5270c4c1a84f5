//! Planar paths, disc footprints and the pairwise collision predicate.
//!
//! A path is a fixed track parameterized by arc length. Its curvilinear
//! coordinate does not have to start at zero: `start` is the coordinate of
//! the first vertex, which lets scenarios put the origin at a crossing point
//! and use negative coordinates on the approach.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on coordinate range checks, absorbs accumulated rounding in
/// cumulative segment lengths.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate {s} outside path {path} range [{min}, {max}]")]
    OutOfRange { path: usize, s: f64, min: f64, max: f64 },
    #[error("path {0} needs at least two points")]
    TooFewPoints(usize),
    #[error("path {path} has repeated consecutive point at index {index}")]
    DegenerateSegment { path: usize, index: usize },
    #[error("footprint radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("lane {lane}: spawn {spawn} must be below exit {exit}")]
    SpawnAfterExit { lane: usize, spawn: f64, exit: f64 },
    #[error("lane {lane}: spawn/exit [{spawn}, {exit}] outside path range [{min}, {max}]")]
    LaneOutsidePath { lane: usize, spawn: f64, exit: f64, min: f64, max: f64 },
    #[error("lane {lane}: conflict zone [{lo}, {hi}] not strictly inside (spawn {spawn}, exit {exit})")]
    ConflictOutsideLane { lane: usize, lo: f64, hi: f64, spawn: f64, exit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl std::ops::Add for Point {
    type Output = Point;

    fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    StraightSegment,
    Polyline,
}

/// A planar track with arc-length parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    id: usize,
    points: Vec<Point>,
    /// Cumulative arc length at each vertex, `cumulative[0] == 0`.
    cumulative: Vec<f64>,
    start: f64,
}

impl PathGeometry {
    pub fn polyline(id: usize, points: Vec<Point>) -> Result<Self, GeometryError> {
        Self::polyline_from(id, points, 0.0)
    }

    /// Polyline whose first vertex sits at curvilinear coordinate `start`.
    pub fn polyline_from(id: usize, points: Vec<Point>, start: f64) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(id));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for (index, w) in points.windows(2).enumerate() {
            let len = w[0].distance(w[1]);
            if len <= 0.0 {
                return Err(GeometryError::DegenerateSegment { path: id, index: index + 1 });
            }
            cumulative.push(cumulative[index] + len);
        }
        Ok(Self { id, points, cumulative, start })
    }

    pub fn straight(id: usize, from: Point, to: Point) -> Result<Self, GeometryError> {
        Self::polyline(id, vec![from, to])
    }

    /// Straight segment through `anchor` (coordinate 0) with heading
    /// `direction`, covering coordinates `[s_min, s_max]`.
    pub fn straight_through(
        id: usize,
        anchor: Point,
        direction: Point,
        s_min: f64,
        s_max: f64,
    ) -> Result<Self, GeometryError> {
        let n = direction.norm();
        let d = direction.scale(1.0 / n);
        let from = anchor + d.scale(s_min);
        let to = anchor + d.scale(s_max);
        Self::polyline_from(id, vec![from, to], s_min)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn kind(&self) -> PathKind {
        if self.points.len() == 2 {
            PathKind::StraightSegment
        } else {
            PathKind::Polyline
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("at least two points")
    }

    /// Curvilinear coordinate of the first vertex.
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Curvilinear coordinate of the last vertex.
    pub fn end(&self) -> f64 {
        self.start + self.length()
    }

    /// Unit heading and the (extrapolated) point at coordinate zero, for
    /// straight segments only.
    pub fn line(&self) -> Option<(Point, Point)> {
        if self.kind() != PathKind::StraightSegment {
            return None;
        }
        let d = (self.points[1] - self.points[0]).scale(1.0 / self.length());
        let origin = self.points[0] - d.scale(self.start);
        Some((origin, d))
    }

    pub fn point_at(&self, s: f64) -> Result<Point, GeometryError> {
        let local = s - self.start;
        let len = self.length();
        if !(local >= -RANGE_SLACK && local <= len + RANGE_SLACK) {
            return Err(GeometryError::OutOfRange { path: self.id, s, min: self.start, max: self.end() });
        }
        let local = local.clamp(0.0, len);
        // index of the segment containing `local`
        let seg = match self.cumulative.partition_point(|&c| c <= local) {
            0 => 0,
            k if k >= self.points.len() => self.points.len() - 2,
            k => k - 1,
        };
        let a = self.points[seg];
        let b = self.points[seg + 1];
        let seg_len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = (local - self.cumulative[seg]) / seg_len;
        Ok(Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t))
    }
}

/// Free-function form of [`PathGeometry::point_at`].
pub fn point_at(path: &PathGeometry, s: f64) -> Result<Point, GeometryError> {
    path.point_at(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotFootprint {
    radius: f64,
}

impl RobotFootprint {
    pub fn new(radius: f64) -> Result<Self, GeometryError> {
        if radius > 0.0 && radius.is_finite() {
            Ok(Self { radius })
        } else {
            Err(GeometryError::BadRadius(radius))
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// True iff two disc robots overlap. The obstacle region is open, so
/// touching discs do not collide.
pub fn pair_collision(
    path_i: &PathGeometry,
    x_i: f64,
    r_i: f64,
    path_j: &PathGeometry,
    x_j: f64,
    r_j: f64,
) -> Result<bool, GeometryError> {
    let p = path_i.point_at(x_i)?;
    let q = path_j.point_at(x_j)?;
    Ok(p.distance(q) < r_i + r_j)
}

/// One path of an intersection together with the coordinates where robots
/// enter and leave the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub path: PathGeometry,
    pub spawn: f64,
    pub exit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionLayout {
    lanes: Vec<Lane>,
}

impl IntersectionLayout {
    /// Builds a layout, checking the per-lane ordering constraints. The
    /// conflict-zone constraint needs cross-sections and is checked by
    /// [`crate::coordination::ConflictTable::validate_layout`].
    pub fn new(lanes: Vec<Lane>) -> Result<Self, GeometryError> {
        for (idx, lane) in lanes.iter().enumerate() {
            if lane.spawn >= lane.exit {
                return Err(GeometryError::SpawnAfterExit { lane: idx, spawn: lane.spawn, exit: lane.exit });
            }
            let (min, max) = (lane.path.start(), lane.path.end());
            if lane.spawn < min - RANGE_SLACK || lane.exit > max + RANGE_SLACK {
                return Err(GeometryError::LaneOutsidePath { lane: idx, spawn: lane.spawn, exit: lane.exit, min, max });
            }
        }
        Ok(Self { lanes })
    }

    /// Two-way crossroads: two horizontal lanes in opposite directions and
    /// two vertical ones, each pair separated laterally by `lateral`. Lane
    /// coordinates are zero at the center of the crossroads.
    ///
    /// Spawn sits `spawn_margin` before the first conflict of the lane and
    /// exit `exit_margin` after the last one, where a conflict with a
    /// crossing lane spans `half_lateral ± 2R`. Paths run on past the exit
    /// by another `exit_margin` so overshooting robots stay on the track.
    pub fn four_way(radius: f64, lateral: f64, spawn_margin: f64, exit_margin: f64) -> Result<Self, GeometryError> {
        RobotFootprint::new(radius)?;
        let half = 0.5 * lateral;
        let conflict = half + 2.0 * radius;
        let spawn = -(conflict + spawn_margin);
        let exit = conflict + exit_margin;
        let end = exit + exit_margin;
        let specs = [
            // eastbound, right-hand side
            (Point::new(0.0, -half), Point::new(1.0, 0.0)),
            // westbound
            (Point::new(0.0, half), Point::new(-1.0, 0.0)),
            // northbound
            (Point::new(half, 0.0), Point::new(0.0, 1.0)),
            // southbound
            (Point::new(-half, 0.0), Point::new(0.0, -1.0)),
        ];
        let lanes = specs
            .iter()
            .enumerate()
            .map(|(id, &(anchor, dir))| {
                Ok(Lane { path: PathGeometry::straight_through(id, anchor, dir, spawn, end)?, spawn, exit })
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Self::new(lanes)
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane(&self, idx: usize) -> Option<&Lane> {
        self.lanes.get(idx)
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn polyline() -> impl Strategy<Value = PathGeometry> {
        prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 2..6).prop_filter_map("degenerate", |pts| {
            PathGeometry::polyline(0, pts.into_iter().map(|(x, y)| Point::new(x, y)).collect()).ok()
        })
    }

    proptest! {
        #[test]
        fn arc_length_is_one_lipschitz(path in polyline(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s1 = lo * path.length();
            let s2 = hi * path.length();
            let d = path.point_at(s1).unwrap().distance(path.point_at(s2).unwrap());
            prop_assert!(d <= s2 - s1 + 1e-9);
            if path.kind() == PathKind::StraightSegment {
                prop_assert!((d - (s2 - s1)).abs() <= 1e-9);
            }
        }

        #[test]
        fn collision_is_symmetric(p in polyline(), q in polyline(), a in 0.0f64..1.0, b in 0.0f64..1.0, r in 0.1f64..5.0) {
            let q = PathGeometry::polyline(1, q.points().to_vec()).unwrap();
            let xa = a * p.length();
            let xb = b * q.length();
            prop_assert_eq!(
                pair_collision(&p, xa, r, &q, xb, r).unwrap(),
                pair_collision(&q, xb, r, &p, xa, r).unwrap()
            );
        }
    }
}
