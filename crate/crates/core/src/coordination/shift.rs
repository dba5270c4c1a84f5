//! Priority-shifted obstacle regions.
//!
//! For a section `S` and priority `i ≻ j`, the region a trajectory must
//! avoid is `S − ℝ₊eᵢ + ℝ₊eⱼ`. A configuration `y` lies in it iff some
//! `(u, v) ∈ S` has `u ≥ yᵢ` and `v ≤ yⱼ`, i.e. iff `yᵢ < W(yⱼ)` with
//! `W(t) = sup{u : (u, v) ∈ S, v ≤ t}`. `W` is nondecreasing, so one scalar
//! lookup answers membership.

use super::section::{CrossSection, SectionShape};
use super::{Configuration, CoordinationError};

/// Monotone bound `W` for one priority direction. The first axis of the
/// section it was built from is the robot with priority.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftBound {
    Ellipse { center_i: f64, center_j: f64, cos: f64, radius: f64, extent: f64 },
    Strip { offset: f64, half_width: f64 },
    Grid { origin_j: f64, cell: f64, table: Vec<Option<f64>> },
}

impl ShiftBound {
    pub fn new(section: &CrossSection) -> Result<Self, CoordinationError> {
        Ok(match &section.shape {
            SectionShape::Empty => return Err(CoordinationError::EmptySection(section.pair)),
            SectionShape::Ellipse(e) => ShiftBound::Ellipse {
                center_i: e.center_i,
                center_j: e.center_j,
                cos: e.cos,
                radius: e.radius,
                extent: e.extent(),
            },
            SectionShape::Strip(s) => ShiftBound::Strip { offset: s.offset, half_width: s.half_width },
            SectionShape::Grid(g) => ShiftBound::Grid { origin_j: g.origin_j, cell: g.cell, table: g.running_max() },
        })
    }

    /// `W(x_j)`; `None` when no point of the section has `v ≤ x_j`.
    #[inline]
    pub fn bound(&self, x_j: f64) -> Option<f64> {
        match *self {
            ShiftBound::Ellipse { center_i, center_j, cos, radius, extent } => {
                let v = x_j - center_j;
                if v <= -extent {
                    None
                } else if v >= cos * extent {
                    Some(center_i + extent)
                } else {
                    let disc = radius * radius - (1.0 - cos * cos) * v * v;
                    Some(center_i + cos * v + disc.max(0.0).sqrt())
                }
            }
            ShiftBound::Strip { offset, half_width } => Some(x_j + offset + half_width),
            ShiftBound::Grid { origin_j, cell, ref table } => {
                let k = ((x_j - origin_j) / cell).floor();
                if k < 0.0 || table.is_empty() {
                    None
                } else {
                    table[(k as usize).min(table.len() - 1)]
                }
            }
        }
    }

    #[inline]
    pub fn contains(&self, x_i: f64, x_j: f64) -> bool {
        matches!(self.bound(x_j), Some(w) if x_i < w)
    }
}

/// Whether configuration `x` lies in the region guarded by `high ≻ low`.
pub fn in_shifted_obstacle(x: &Configuration, high: usize, low: usize, bound: &ShiftBound) -> bool {
    bound.contains(x[high], x[low])
}

/// Slack allowed on the monotonicity contract, absorbs rounding in closed
/// form trajectory evaluations.
const MONOTONE_SLACK: f64 = 1e-9;

/// Whether any sample of a monotone curve lies in the region guarded by
/// `high ≻ low`. The bound should come from a section inflated by at least
/// `v_max·δ` for the test to cover the continuous curve between samples.
pub fn curve_intersects_shifted(
    samples: &[Configuration],
    high: usize,
    low: usize,
    bound: &ShiftBound,
) -> Result<bool, CoordinationError> {
    for (k, w) in samples.windows(2).enumerate() {
        if w[0].len() != w[1].len() {
            return Err(CoordinationError::NonMonotone { sample: k + 1 });
        }
        if w[0].iter().zip(w[1].iter()).any(|(a, b)| b + MONOTONE_SLACK < *a) {
            return Err(CoordinationError::NonMonotone { sample: k + 1 });
        }
    }
    Ok(samples.iter().any(|x| in_shifted_obstacle(x, high, low, bound)))
}
