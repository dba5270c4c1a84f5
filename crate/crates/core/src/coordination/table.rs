use crate::geometry::{GeometryError, IntersectionLayout, PathGeometry};

use super::section::{build_cross_section, CrossSection};
use super::shift::ShiftBound;

#[derive(Debug, Clone)]
struct PairEntry {
    raw: CrossSection,
    inflated: CrossSection,
    raw_bound: Option<ShiftBound>,
    guard: Option<ShiftBound>,
}

/// Cross-sections and shift bounds for every ordered pair of lanes.
///
/// Entry `(a, b)` has lane `a` on its first axis, so its bounds describe the
/// region guarded by "robot on `a` ≻ robot on `b`". Robots on the same lane
/// share the `(a, a)` strip. Guards are built from sections inflated by the
/// planner's sampling margin; raw bounds are kept for checking.
#[derive(Debug, Clone)]
pub struct ConflictTable {
    lanes: usize,
    radius_sum: f64,
    inflation: f64,
    entries: Vec<PairEntry>,
}

impl ConflictTable {
    /// `radius` is the common robot radius; `resolution` the grid cell used
    /// for pairs without an analytic section.
    pub fn build(paths: &[PathGeometry], radius: f64, inflation: f64, resolution: f64) -> Self {
        let n = paths.len();
        let radius_sum = 2.0 * radius;
        let mut upper: Vec<Option<(CrossSection, CrossSection)>> = vec![None; n * n];
        for a in 0..n {
            for b in a..n {
                let raw = build_cross_section(&paths[a], &paths[b], radius_sum, resolution);
                let inflated = build_cross_section(&paths[a], &paths[b], radius_sum + inflation, resolution);
                upper[a * n + b] = Some((raw, inflated));
            }
        }
        let mut entries = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let (raw, inflated) = if a <= b {
                    upper[a * n + b].clone().expect("filled above")
                } else {
                    let (r, i) = upper[b * n + a].as_ref().expect("filled above");
                    (r.transposed(), i.transposed())
                };
                let raw_bound = raw.shift_bound().ok();
                let guard = inflated.shift_bound().ok();
                entries.push(PairEntry { raw, inflated, raw_bound, guard });
            }
        }
        Self { lanes: n, radius_sum, inflation, entries }
    }

    pub fn for_layout(layout: &IntersectionLayout, radius: f64, inflation: f64, resolution: f64) -> Self {
        let paths: Vec<_> = layout.lanes().iter().map(|l| l.path.clone()).collect();
        Self::build(&paths, radius, inflation, resolution)
    }

    fn entry(&self, a: usize, b: usize) -> &PairEntry {
        &self.entries[a * self.lanes + b]
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn radius_sum(&self) -> f64 {
        self.radius_sum
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn section(&self, a: usize, b: usize) -> &CrossSection {
        &self.entry(a, b).raw
    }

    pub fn inflated_section(&self, a: usize, b: usize) -> &CrossSection {
        &self.entry(a, b).inflated
    }

    /// Whether robots on lanes `a` and `b` can collide at all.
    pub fn conflicts(&self, a: usize, b: usize) -> bool {
        !self.entry(a, b).raw.is_empty()
    }

    /// Uninflated bound for "robot on `high` ≻ robot on `low`".
    #[inline]
    pub fn raw_bound(&self, high: usize, low: usize) -> Option<&ShiftBound> {
        self.entry(high, low).raw_bound.as_ref()
    }

    /// Inflated bound the planner guards for "robot on `high` ≻ robot on `low`".
    #[inline]
    pub fn guard(&self, high: usize, low: usize) -> Option<&ShiftBound> {
        self.entry(high, low).guard.as_ref()
    }

    /// Span of lane `a` covered by bounded sections with any lane, raw or
    /// inflated.
    pub fn conflict_extent(&self, a: usize, inflated: bool) -> Option<(f64, f64)> {
        (0..self.lanes)
            .filter_map(|b| {
                let e = self.entry(a, b);
                let s = if inflated { &e.inflated } else { &e.raw };
                s.is_bounded().then(|| s.bounds()).flatten().map(|bd| bd.i)
            })
            .reduce(|x, y| (x.0.min(y.0), x.1.max(y.1)))
    }

    /// Checks that every lane's conflict zone lies strictly between its spawn
    /// and exit coordinates.
    pub fn validate_layout(&self, layout: &IntersectionLayout) -> Result<(), GeometryError> {
        for (idx, lane) in layout.lanes().iter().enumerate() {
            if let Some((lo, hi)) = self.conflict_extent(idx, true) {
                if !(lo > lane.spawn && hi < lane.exit) {
                    return Err(GeometryError::ConflictOutsideLane {
                        lane: idx,
                        lo,
                        hi,
                        spawn: lane.spawn,
                        exit: lane.exit,
                    });
                }
            }
        }
        Ok(())
    }
}
