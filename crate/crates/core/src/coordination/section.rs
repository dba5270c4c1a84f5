use crate::geometry::{PathGeometry, PathKind};

use super::shift::ShiftBound;
use super::CoordinationError;

/// Paths closer to parallel than this are treated as parallel.
const PARALLEL_EPS: f64 = 1e-9;

/// Extent of a cross-section along both of its axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionBounds {
    pub i: (f64, f64),
    pub j: (f64, f64),
}

/// Collision set of two straight lines crossing at `(center_i, center_j)`:
/// `u² + v² − 2·cos·u·v < radius²` with `u = x_i − center_i`,
/// `v = x_j − center_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center_i: f64,
    pub center_j: f64,
    pub cos: f64,
    pub radius: f64,
}

impl Ellipse {
    /// Half extent along either axis, `r / sin θ`.
    pub fn extent(&self) -> f64 {
        self.radius / (1.0 - self.cos * self.cos).sqrt()
    }

    pub fn contains(&self, x_i: f64, x_j: f64) -> bool {
        let u = x_i - self.center_i;
        let v = x_j - self.center_j;
        u * u + v * v - 2.0 * self.cos * u * v < self.radius * self.radius
    }
}

/// Collision set of two robots on parallel tracks heading the same way:
/// `|x_i − x_j − offset| < half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub offset: f64,
    pub half_width: f64,
}

impl Strip {
    pub fn contains(&self, x_i: f64, x_j: f64) -> bool {
        (x_i - x_j - self.offset).abs() < self.half_width
    }
}

/// Conservative rasterization of a cross-section. Cell `(col, row)` covers
/// `[origin_i + col·cell, origin_i + (col+1)·cell) × [origin_j + row·cell, …)`
/// and is marked when any configuration inside it may collide.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub origin_i: f64,
    pub origin_j: f64,
    pub cell: f64,
    pub cols: usize,
    pub rows: usize,
    marked: Vec<bool>,
}

impl GridSection {
    fn build(path_i: &PathGeometry, path_j: &PathGeometry, radius_sum: f64, cell: f64) -> Self {
        let cols = (path_i.length() / cell).ceil().max(1.0) as usize;
        let rows = (path_j.length() / cell).ceil().max(1.0) as usize;
        let centers = |path: &PathGeometry, n: usize| -> Vec<_> {
            (0..n)
                .map(|k| {
                    let s = (path.start() + (k as f64 + 0.5) * cell).min(path.end());
                    path.point_at(s).expect("cell center within path")
                })
                .collect()
        };
        let ci = centers(path_i, cols);
        let cj = centers(path_j, rows);
        // A point in a cell is within cell/2 of its center along each path,
        // hence within `cell` of the center pair in distance.
        let reach = radius_sum + cell;
        let mut marked = vec![false; cols * rows];
        for (row, q) in cj.iter().enumerate() {
            for (col, p) in ci.iter().enumerate() {
                if p.distance(*q) < reach {
                    marked[row * cols + col] = true;
                }
            }
        }
        Self { origin_i: path_i.start(), origin_j: path_j.start(), cell, cols, rows, marked }
    }

    pub fn is_marked(&self, col: usize, row: usize) -> bool {
        self.marked[row * self.cols + col]
    }

    fn any(&self) -> bool {
        self.marked.iter().any(|&m| m)
    }

    fn index(origin: f64, cell: f64, n: usize, x: f64) -> Option<usize> {
        let k = (x - origin) / cell;
        // the far edge belongs to the last cell so a path's end is covered
        if k >= 0.0 && k <= n as f64 {
            Some((k.floor() as usize).min(n - 1))
        } else {
            None
        }
    }

    pub fn contains(&self, x_i: f64, x_j: f64) -> bool {
        match (
            Self::index(self.origin_i, self.cell, self.cols, x_i),
            Self::index(self.origin_j, self.cell, self.rows, x_j),
        ) {
            (Some(c), Some(r)) => self.is_marked(c, r),
            _ => false,
        }
    }

    fn bounds(&self) -> Option<SectionBounds> {
        let (mut c0, mut c1, mut r0, mut r1) = (usize::MAX, 0, usize::MAX, 0);
        for row in 0..self.rows {
            for col in 0..self.cols {
                if self.is_marked(col, row) {
                    c0 = c0.min(col);
                    c1 = c1.max(col);
                    r0 = r0.min(row);
                    r1 = r1.max(row);
                }
            }
        }
        (c0 != usize::MAX).then(|| SectionBounds {
            i: (self.origin_i + c0 as f64 * self.cell, self.origin_i + (c1 + 1) as f64 * self.cell),
            j: (self.origin_j + r0 as f64 * self.cell, self.origin_j + (r1 + 1) as f64 * self.cell),
        })
    }

    fn transposed(&self) -> Self {
        let mut marked = vec![false; self.cols * self.rows];
        for row in 0..self.rows {
            for col in 0..self.cols {
                // new grid has cols = old rows
                marked[col * self.rows + row] = self.is_marked(col, row);
            }
        }
        Self {
            origin_i: self.origin_j,
            origin_j: self.origin_i,
            cell: self.cell,
            cols: self.rows,
            rows: self.cols,
            marked,
        }
    }

    /// Running maximum, over rows `0..=k`, of the upper i-edge of marked cells.
    pub(crate) fn running_max(&self) -> Vec<Option<f64>> {
        let mut best: Option<f64> = None;
        (0..self.rows)
            .map(|row| {
                if let Some(col) = (0..self.cols).rev().find(|&c| self.is_marked(c, row)) {
                    let top = self.origin_i + (col + 1) as f64 * self.cell;
                    best = Some(best.map_or(top, |b: f64| b.max(top)));
                }
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionShape {
    Empty,
    Ellipse(Ellipse),
    Strip(Strip),
    Grid(GridSection),
}

/// Footprint of the obstacle cylinder of a pair of paths in the plane of
/// their two coordinates. Axis `i` is the first path, axis `j` the second.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub pair: (usize, usize),
    pub shape: SectionShape,
}

impl CrossSection {
    pub fn is_empty(&self) -> bool {
        matches!(self.shape, SectionShape::Empty)
    }

    /// Bounded sections are the ones the goal region accounts for.
    pub fn is_bounded(&self) -> bool {
        matches!(self.shape, SectionShape::Ellipse(_) | SectionShape::Grid(_))
    }

    pub fn contains(&self, x_i: f64, x_j: f64) -> bool {
        match &self.shape {
            SectionShape::Empty => false,
            SectionShape::Ellipse(e) => e.contains(x_i, x_j),
            SectionShape::Strip(s) => s.contains(x_i, x_j),
            SectionShape::Grid(g) => g.contains(x_i, x_j),
        }
    }

    /// Infimum and supremum per axis; strips are unbounded both ways.
    pub fn bounds(&self) -> Option<SectionBounds> {
        match &self.shape {
            SectionShape::Empty => None,
            SectionShape::Ellipse(e) => {
                let k = e.extent();
                Some(SectionBounds { i: (e.center_i - k, e.center_i + k), j: (e.center_j - k, e.center_j + k) })
            }
            SectionShape::Strip(_) => {
                Some(SectionBounds { i: (f64::NEG_INFINITY, f64::INFINITY), j: (f64::NEG_INFINITY, f64::INFINITY) })
            }
            SectionShape::Grid(g) => g.bounds(),
        }
    }

    /// The same set with the two axes swapped.
    pub fn transposed(&self) -> CrossSection {
        let shape = match &self.shape {
            SectionShape::Empty => SectionShape::Empty,
            SectionShape::Ellipse(e) => SectionShape::Ellipse(Ellipse {
                center_i: e.center_j,
                center_j: e.center_i,
                cos: e.cos,
                radius: e.radius,
            }),
            SectionShape::Strip(s) => SectionShape::Strip(Strip { offset: -s.offset, half_width: s.half_width }),
            SectionShape::Grid(g) => SectionShape::Grid(g.transposed()),
        };
        CrossSection { pair: (self.pair.1, self.pair.0), shape }
    }

    /// Bound describing the region to avoid when the first axis has priority.
    pub fn shift_bound(&self) -> Result<ShiftBound, CoordinationError> {
        ShiftBound::new(self)
    }
}

/// Builds the cross-section of two paths for robots whose radii add up to
/// `radius_sum`.
///
/// Crossing straight segments give an analytic ellipse when the ellipse lies
/// within both segments. Parallel segments heading the same way give a strip
/// (or nothing when they are too far apart laterally). Everything else is
/// rasterized with cells of size `resolution`.
pub fn build_cross_section(
    path_i: &PathGeometry,
    path_j: &PathGeometry,
    radius_sum: f64,
    resolution: f64,
) -> CrossSection {
    let pair = (path_i.id(), path_j.id());
    if let (Some((oi, di)), Some((oj, dj))) = (path_i.line(), path_j.line()) {
        let sin = di.cross(dj);
        let cos = di.dot(dj);
        let w = oj - oi;
        if sin.abs() > PARALLEL_EPS {
            // oi + ti·di = oj + tj·dj
            let ti = w.cross(dj) / sin;
            let tj = w.cross(di) / sin;
            let e = Ellipse { center_i: ti, center_j: tj, cos, radius: radius_sum };
            let k = e.extent();
            let inside = ti - k >= path_i.start()
                && ti + k <= path_i.end()
                && tj - k >= path_j.start()
                && tj + k <= path_j.end();
            if inside {
                return CrossSection { pair, shape: SectionShape::Ellipse(e) };
            }
        } else {
            let lateral = w.cross(di).abs();
            if lateral >= radius_sum {
                return CrossSection { pair, shape: SectionShape::Empty };
            }
            if cos > 0.0 {
                let half_width = (radius_sum * radius_sum - lateral * lateral).sqrt();
                return CrossSection { pair, shape: SectionShape::Strip(Strip { offset: w.dot(di), half_width }) };
            }
        }
    }
    build_grid_section(path_i, path_j, radius_sum, resolution)
}

/// Rasterized cross-section regardless of path kind.
pub fn build_grid_section(
    path_i: &PathGeometry,
    path_j: &PathGeometry,
    radius_sum: f64,
    resolution: f64,
) -> CrossSection {
    let pair = (path_i.id(), path_j.id());
    let grid = GridSection::build(path_i, path_j, radius_sum, resolution);
    let shape = if grid.any() { SectionShape::Grid(grid) } else { SectionShape::Empty };
    CrossSection { pair, shape }
}

/// True when both paths are straight, otherwise analytic forms do not apply.
pub fn is_straight_pair(path_i: &PathGeometry, path_j: &PathGeometry) -> bool {
    path_i.kind() == PathKind::StraightSegment && path_j.kind() == PathKind::StraightSegment
}
