use serde::{Deserialize, Serialize};

use crate::coordination::ConflictTable;
use crate::geometry::{IntersectionLayout, Lane, PathGeometry, Point};
use crate::kinodynamics::KinodynamicModel;
use crate::planner::PlannerConfig;
use crate::policy::PriorityPolicy;

use super::SimError;

/// Everything a simulation run needs. Every field has a default, so a
/// scenario file only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub policy: PriorityPolicy,
    pub layout: LayoutConfig,
    pub robots: RobotConfig,
    pub planner: PlannerSettings,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayoutConfig {
    /// Two-way crossroads. Distances are in robot radii.
    FourWay {
        #[serde(default = "default_lateral")]
        lateral: f64,
        #[serde(default = "default_spawn_margin")]
        spawn_margin: f64,
        #[serde(default = "default_exit_margin")]
        exit_margin: f64,
    },
    /// Explicit lanes in absolute units.
    Custom { lanes: Vec<LaneConfig> },
}

fn default_lateral() -> f64 {
    3.0
}

fn default_spawn_margin() -> f64 {
    30.0
}

fn default_exit_margin() -> f64 {
    10.0
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig::FourWay {
            lateral: default_lateral(),
            spawn_margin: default_spawn_margin(),
            exit_margin: default_exit_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneConfig {
    pub points: Vec<[f64; 2]>,
    /// Coordinate of the first point.
    #[serde(default)]
    pub start: f64,
    pub spawn: f64,
    pub exit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub radius: f64,
    pub v_max: f64,
    /// Defaults to reaching `v_max` from rest in 20 planning steps.
    pub a_max: Option<f64>,
    /// Defaults to `-a_max`.
    pub a_min: Option<f64>,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self { radius: 1.0, v_max: 1.0, a_max: None, a_min: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    /// Defaults to `radius / v_max`.
    pub dt: Option<f64>,
    /// Defaults to `dt / 4`.
    pub sub_dt: Option<f64>,
    /// Grid cell for rasterized sections, in robot radii.
    pub grid_resolution: f64,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self { dt: None, sub_dt: None, grid_resolution: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Traffic densities in percent of continuous flow.
    pub densities: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Robots spawned per run.
    pub robots: usize,
    /// Hard cap on simulated steps per run.
    pub horizon: usize,
    /// Run the geometric checker and the safety invariant every step.
    pub verify: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            densities: vec![1.0, 2.0, 5.0, 10.0],
            seeds: vec![1, 2, 3],
            robots: 500,
            horizon: 1_000_000,
            verify: true,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let r = &self.robots;
        if !(r.radius > 0.0 && r.v_max > 0.0) {
            return Err(SimError::Config(format!(
                "radius and v_max must be positive, got {} and {}",
                r.radius, r.v_max
            )));
        }
        for &d in &self.sweep.densities {
            if !(d > 0.0 && d <= 100.0) {
                return Err(SimError::Config(format!("density {d} outside (0, 100]")));
            }
        }
        if self.sweep.horizon == 0 {
            return Err(SimError::Config("horizon must be positive".into()));
        }
        if self.planner.grid_resolution.is_nan() || self.planner.grid_resolution <= 0.0 {
            return Err(SimError::Config("grid_resolution must be positive".into()));
        }
        self.model()?;
        self.planner_config()?;
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.planner.dt.unwrap_or(self.robots.radius / self.robots.v_max)
    }

    pub fn model(&self) -> Result<KinodynamicModel, SimError> {
        let r = &self.robots;
        let a_max = r.a_max.unwrap_or(r.v_max / (20.0 * self.dt()));
        let a_min = r.a_min.unwrap_or(-a_max);
        KinodynamicModel::new(r.v_max, a_max, a_min).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn planner_config(&self) -> Result<PlannerConfig, SimError> {
        let dt = self.dt();
        let sub_dt = self.planner.sub_dt.unwrap_or(dt / 4.0);
        PlannerConfig::new(dt, sub_dt, self.robots.v_max).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn layout(&self) -> Result<IntersectionLayout, SimError> {
        let radius = self.robots.radius;
        let layout = match &self.layout {
            LayoutConfig::FourWay { lateral, spawn_margin, exit_margin } => {
                IntersectionLayout::four_way(radius, lateral * radius, spawn_margin * radius, exit_margin * radius)
            }
            LayoutConfig::Custom { lanes } => lanes
                .iter()
                .enumerate()
                .map(|(id, l)| {
                    let pts = l.points.iter().map(|p| Point::new(p[0], p[1])).collect();
                    Ok(Lane { path: PathGeometry::polyline_from(id, pts, l.start)?, spawn: l.spawn, exit: l.exit })
                })
                .collect::<Result<Vec<_>, _>>()
                .and_then(IntersectionLayout::new),
        };
        layout.map_err(|e| SimError::Config(e.to_string()))
    }

    /// Layout, conflict table and planner settings, checked for consistency.
    pub fn build(&self) -> Result<Setup, SimError> {
        self.validate()?;
        let layout = self.layout()?;
        let planner = self.planner_config()?;
        let radius = self.robots.radius;
        let table =
            ConflictTable::for_layout(&layout, radius, planner.inflation, self.planner.grid_resolution * radius);
        table.validate_layout(&layout).map_err(|e| SimError::Config(e.to_string()))?;
        Ok(Setup { layout, table, planner, model: self.model()?, radius, policy: self.policy })
    }
}

/// Immutable data shared by every run of a scenario.
#[derive(Debug, Clone)]
pub struct Setup {
    pub layout: IntersectionLayout,
    pub table: ConflictTable,
    pub planner: PlannerConfig,
    pub model: KinodynamicModel,
    pub radius: f64,
    pub policy: PriorityPolicy,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ScenarioConfig::default();
        let m = cfg.model().unwrap();
        assert_eq!((m.v_max(), m.a_max(), m.a_min()), (1.0, 0.05, -0.05));
        let p = cfg.planner_config().unwrap();
        assert_eq!((p.dt, p.sub_dt, p.inflation), (1.0, 0.25, 0.5));
        let setup = cfg.build().unwrap();
        assert_eq!(setup.layout.len(), 4);
        let lane = &setup.layout.lanes()[0];
        assert_eq!((lane.spawn, lane.exit), (-33.5, 13.5));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            policy = "first_come"

            [robots]
            radius = 0.5
            v_max = 2.0

            [sweep]
            densities = [5.0]
            seeds = [7]
            robots = 10
        "#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.dt(), 0.25);
        assert_eq!(cfg.sweep.seeds, vec![7]);
        assert_eq!(cfg.policy, PriorityPolicy::FirstCome);
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn custom_layout() {
        let text = r#"
            [layout]
            kind = "custom"
            [[layout.lanes]]
            points = [[-50.0, 0.0], [50.0, 0.0]]
            start = -50.0
            spawn = -40.0
            exit = 40.0
        "#;
        let setup = ScenarioConfig::from_toml(text).unwrap().build().unwrap();
        assert_eq!(setup.layout.len(), 1);
        assert_eq!(setup.layout.lanes()[0].path.start(), -50.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioConfig::from_toml("[sweep]\ndensities = [0.0]").is_err());
        assert!(ScenarioConfig::from_toml("[sweep]\ndensities = [120.0]").is_err());
        assert!(ScenarioConfig::from_toml("[sweep]\nhorizon = 0").is_err());
        assert!(ScenarioConfig::from_toml("[robots]\nradius = -1.0").is_err());
        assert!(ScenarioConfig::from_toml("[planner]\nsub_dt = 0.3").is_err());
        assert!(ScenarioConfig::from_toml("[robots]\nwheels = 4").is_err());
    }
}
