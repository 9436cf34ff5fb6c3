use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::gp::Hyperparams;
use crate::grid::Point;
use crate::navigator::NavigatorParams;
use crate::planner::{Mode, PlannerConfig};

/// Disk of cells assumed safe before the first measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartRegion {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl StartRegion {
    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    pub top_n: usize,
    /// Forced goal-free when set; otherwise inferred from `goal`.
    pub mode: Option<Mode>,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        PlannerSettings { top_n: 10, mode: None }
    }
}

fn default_bootstrap() -> usize {
    5
}

fn default_snapshot_every() -> usize {
    10
}

fn default_reselect() -> usize {
    3
}

/// Everything needed to run one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub terrain: PathBuf,
    pub seed: u64,
    pub max_iterations: usize,
    pub beta: f64,
    pub lipschitz: f64,
    pub threshold: f64,
    /// Standard deviation of the simulated sensor noise. Defaults to the
    /// square root of the GP's noise variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_samples: usize,
    /// Snapshot every this many iterations plus the final one; 0 disables.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Subgoal attempts per iteration before giving up on the round.
    #[serde(default = "default_reselect")]
    pub max_reselect: usize,
    pub gp: Hyperparams,
    pub start: StartRegion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalPoint>,
    #[serde(default)]
    pub planner: PlannerSettings,
    #[serde(default)]
    pub geometry: GeometryParams,
    #[serde(default)]
    pub navigator: NavigatorParams,
}

impl RunConfig {
    pub fn noise_sd(&self) -> f64 {
        self.noise_sd.unwrap_or_else(|| self.gp.noise_variance.sqrt())
    }

    pub fn goal_point(&self) -> Option<Point> {
        self.goal.map(|g| Point::new(g.x, g.y))
    }

    pub fn mode(&self) -> Mode {
        match (self.planner.mode, self.goal) {
            (Some(m), _) => m,
            (None, Some(_)) => Mode::GoalDirected,
            (None, None) => Mode::GoalFree,
        }
    }

    pub fn planner_config(&self) -> Result<PlannerConfig> {
        let cfg = match self.mode() {
            Mode::GoalDirected => {
                let goal = self
                    .goal_point()
                    .ok_or_else(|| Error::Config("planner.mode = goal-directed needs a goal".into()))?;
                PlannerConfig::goal_directed(goal, self.planner.top_n)?
            }
            Mode::GoalFree => PlannerConfig::goal_free(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        for (key, v) in [
            ("beta", self.beta),
            ("lipschitz", self.lipschitz),
            ("threshold", self.threshold),
            ("start.x", self.start.x),
            ("start.y", self.start.y),
            ("start.radius", self.start.radius),
        ] {
            if !v.is_finite() {
                return bad(key, "must be finite");
            }
        }
        if self.beta < 0.0 {
            return bad("beta", "must be non-negative");
        }
        if self.lipschitz < 0.0 {
            return bad("lipschitz", "must be non-negative");
        }
        if self.start.radius < 0.0 {
            return bad("start.radius", "must be non-negative");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations", "must be at least 1");
        }
        if self.bootstrap_samples < 1 {
            return bad("bootstrap_samples", "must be at least 1");
        }
        if self.max_reselect < 1 {
            return bad("max_reselect", "must be at least 1");
        }
        if let Some(sd) = self.noise_sd {
            if !(sd.is_finite() && sd >= 0.0) {
                return bad("noise_sd", "must be finite and non-negative");
            }
        }
        if let Some(g) = self.goal {
            if !(g.x.is_finite() && g.y.is_finite()) {
                return bad("goal", "must be finite");
            }
        }
        self.gp.validate().map_err(|e| Error::Config(format!("gp: {e}")))?;
        self.planner_config().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("planner: {other}")),
        })?;
        let n = &self.navigator;
        for (key, v) in [
            ("navigator.max_step", n.max_step),
            ("navigator.sensing_radius", n.sensing_radius),
            ("navigator.arrival_tolerance", n.arrival_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(key, "must be positive");
            }
        }
        if !(n.clearance.is_finite() && n.clearance >= 0.0) {
            return bad("navigator.clearance", "must be non-negative");
        }
        if n.disk_sides < 3 {
            return bad("navigator.disk_sides", "must be at least 3");
        }
        let g = &self.geometry;
        for (key, v) in [
            ("geometry.cluster_radius", g.cluster_radius),
            ("geometry.hull_edge", g.hull_edge),
            ("geometry.concavity", g.concavity),
        ] {
            if v.is_nan() || v <= 0.0 {
                return bad(key, "must be positive");
            }
        }
        if !(g.margin.is_finite() && g.margin > 0.0) {
            return bad("geometry.margin", "must be positive");
        }
        Ok(())
    }
}
