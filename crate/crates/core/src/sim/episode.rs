//! The exploration loop: measure, update the GP, grow the safe set, pick a
//! subgoal, drive there, repeat.

use std::collections::BTreeMap;

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{FreeSpaceModel, Polygon, Rect, Region};
use crate::gp::{GridPosterior, TraversabilityGp};
use crate::grid::{CellSet, Grid, Point};
use crate::navigator::{drive, local_free_space, DriveOutcome, RobotState};
use crate::planner::{check_termination, select, PlannerConfig, Reason, Status};
use crate::regions::{init_confidence, update_confidence, ConfidenceField, RegionState};

use super::config::RunConfig;
use super::route::waypoints;
use super::terrain::{load_terrain, TerrainGrid};

/// Noisy point reading of the terrain at `x`.
pub fn measure(terrain: &TerrainGrid, x: Point, noise_sd: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let f = terrain.interpolate(x)?;
    if noise_sd == 0.0 {
        return Ok(f);
    }
    let normal = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(format!("noise_sd {noise_sd}: {e}")))?;
    Ok(f + normal.sample(rng))
}

/// Uniform sample from the disk, by inverse-CDF radius.
pub fn sample_in_disk(center: Point, radius: f64, rng: &mut ChaCha8Rng) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Cells of the starting disk; the start cell alone when the disk holds no
/// cell center.
pub fn start_cells(config: &RunConfig, grid: &Grid) -> Result<CellSet> {
    let c = config.start.center();
    let r = config.start.radius;
    let (lo, hi) = grid.extent();
    if c.x - r < lo.x || c.x + r > hi.x || c.y - r < lo.y || c.y + r > hi.y {
        return Err(Error::Config(format!(
            "start disk at ({}, {}) radius {} is not inside the terrain",
            c.x, c.y, r
        )));
    }
    let mut cells = grid.disk(c, r);
    if cells.is_empty() {
        cells.push(grid.cell_at(c).expect("center is inside the extent"));
    }
    Ok(CellSet::from_indices(grid.len(), cells))
}

pub struct Bootstrap {
    pub gp: TraversabilityGp,
    pub safe: CellSet,
    pub confidence: ConfidenceField,
    pub samples: Vec<(Point, f64)>,
}

pub fn bootstrap(config: &RunConfig, terrain: &TerrainGrid, rng: &mut ChaCha8Rng) -> Result<Bootstrap> {
    if config.bootstrap_samples < 1 {
        return Err(Error::Config("bootstrap_samples: must be at least 1".into()));
    }
    let grid = &terrain.grid;
    let safe = start_cells(config, grid)?;
    let mut gp = TraversabilityGp::new(config.gp)?;
    let mut samples = Vec::with_capacity(config.bootstrap_samples);
    for _ in 0..config.bootstrap_samples {
        let x = sample_in_disk(config.start.center(), config.start.radius, rng);
        let y = measure(terrain, x, config.noise_sd(), rng)?;
        gp.add_observation(x, y)?;
        samples.push((x, y));
    }
    let confidence = init_confidence(grid, &safe, config.threshold)?;
    Ok(Bootstrap { gp, safe, confidence, samples })
}

/// One row of the metrics log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// Robot position at the end of the iteration.
    pub robot: Point,
    pub subgoal: Option<Point>,
    pub reason: Reason,
    pub candidates: usize,
    /// Subgoals tried this iteration (more than one after stalls).
    pub attempts: usize,
    pub measurement: Option<f64>,
    pub safe_cells: usize,
    pub frontier_cells: usize,
    pub mean_width: f64,
    pub ticks: usize,
    /// Safe-set update produced nothing and the previous set was kept.
    pub expansion_stalled: bool,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMetrics {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub iterations: usize,
    pub iterations_to_goal: Option<usize>,
    /// Trajectory points on cells whose true value is below the threshold.
    pub safety_violations: usize,
    /// Control ticks that failed the point-in-free-space check.
    pub containment_violations: usize,
    /// Measurements taken outside the safe set of their iteration.
    pub measurement_violations: usize,
    /// Cells whose new interval missed the previous one (kept unchanged).
    pub inconsistencies: usize,
    pub safe_fraction: f64,
    pub total_ticks: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub tick: usize,
    pub position: Point,
    /// Running count of subgoals issued; `None` before the first.
    pub subgoal_id: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    pub status: Status,
    pub robot: Point,
    pub subgoal: Option<Point>,
    pub goal: Option<Point>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub safe: CellSet,
    pub frontier: CellSet,
    pub hulls: Vec<Polygon>,
    pub workspace: Rect,
    pub obstacles: Vec<Region>,
    pub local: Option<Polygon>,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutput {
    pub grid: Grid,
    pub metrics: EpisodeMetrics,
    pub trajectory: Vec<TrajectoryPoint>,
    pub snapshots: Vec<Snapshot>,
    /// One planner decision line per subgoal attempt.
    pub decisions: Vec<String>,
}

/// Episode state, advanced one iteration at a time by [`Simulation::step`].
pub struct Simulation {
    config: RunConfig,
    terrain: TerrainGrid,
    planner: PlannerConfig,
    rng: ChaCha8Rng,
    gp: TraversabilityGp,
    posterior: GridPosterior,
    confidence: ConfidenceField,
    safe: CellSet,
    frontier: CellSet,
    model: FreeSpaceModel,
    robot: RobotState,
    t: usize,
    status: Status,
    last_subgoal: Option<Point>,
    /// Cells that stalled last round; skipped for one round.
    blocked: Vec<usize>,
    /// Cells whose own measurement changed neither their interval nor the
    /// safe set, with the interval at that time. Skipped until it changes.
    saturated: BTreeMap<usize, (f64, f64)>,
    /// Cell measured last iteration, its interval and the safe-set size.
    pending: Option<(usize, f64, f64, usize)>,
    subgoals_issued: usize,
    tick: usize,
    records: Vec<IterationRecord>,
    trajectory: Vec<TrajectoryPoint>,
    snapshots: Vec<Snapshot>,
    decisions: Vec<String>,
    safety_violations: usize,
    containment_violations: usize,
    measurement_violations: usize,
}

impl Simulation {
    pub fn new(config: RunConfig, terrain: TerrainGrid) -> Result<Self> {
        config.validate()?;
        let planner = config.planner_config()?;
        if let Some(goal) = planner.goal {
            if !terrain.grid.contains(goal) {
                return Err(Error::Config(format!("goal ({}, {}) is outside the terrain", goal.x, goal.y)));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let boot = bootstrap(&config, &terrain, &mut rng)?;
        let grid = terrain.grid;
        let mut posterior = GridPosterior::new(grid.centers())?;
        posterior.refresh(&boot.gp);
        let res = grid.resolution;
        let model = FreeSpaceModel::build(&boot.safe, &grid, &config.geometry)?;
        let robot = RobotState { position: config.start.center(), max_step: config.navigator.max_step * res };
        let mut sim = Simulation {
            frontier: CellSet::empty(grid.len()),
            planner,
            rng,
            gp: boot.gp,
            posterior,
            confidence: boot.confidence,
            safe: boot.safe,
            model,
            robot,
            t: 0,
            status: Status::Running,
            last_subgoal: None,
            blocked: Vec::new(),
            saturated: BTreeMap::new(),
            pending: None,
            subgoals_issued: 0,
            tick: 0,
            records: Vec::new(),
            trajectory: Vec::new(),
            snapshots: Vec::new(),
            decisions: Vec::new(),
            safety_violations: 0,
            containment_violations: 0,
            measurement_violations: 0,
            config,
            terrain,
        };
        let inside = sim.model.contains(robot.position);
        sim.log_position(robot.position, inside);
        Ok(sim)
    }

    pub fn grid(&self) -> &Grid {
        &self.terrain.grid
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn terrain(&self) -> &TerrainGrid {
        &self.terrain
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn confidence(&self) -> &ConfidenceField {
        &self.confidence
    }

    pub fn safe(&self) -> &CellSet {
        &self.safe
    }

    pub fn frontier(&self) -> &CellSet {
        &self.frontier
    }

    pub fn model(&self) -> &FreeSpaceModel {
        &self.model
    }

    pub fn gp(&self) -> &TraversabilityGp {
        &self.gp
    }

    pub fn robot(&self) -> Point {
        self.robot.position
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    fn log_position(&mut self, p: Point, contained: bool) {
        let sub = (self.subgoals_issued > 0).then_some(self.subgoals_issued);
        self.trajectory.push(TrajectoryPoint { tick: self.tick, position: p, subgoal_id: sub });
        self.tick += 1;
        if let Some(cell) = self.terrain.grid.cell_at(p) {
            if self.terrain.value(cell) < self.config.threshold {
                self.safety_violations += 1;
            }
        } else {
            self.safety_violations += 1;
        }
        if !contained {
            self.containment_violations += 1;
        }
    }

    /// Runs one iteration and returns the resulting status. Calling it after
    /// termination is an error.
    pub fn step(&mut self) -> Result<Status> {
        if self.status != Status::Running {
            return Err(Error::invalid(format!("episode already finished: {}", self.status)));
        }
        self.t += 1;
        let t = self.t;
        let cfg = self.config.clone();
        let grid = self.terrain.grid;

        self.confidence = update_confidence(&self.confidence, self.posterior.field(), cfg.beta)?;
        let region = RegionState::advance(&self.safe, &self.confidence, cfg.lipschitz, cfg.threshold, &grid);
        let grew = region.safe.len() != self.safe.len();
        self.safe = region.safe;
        self.frontier = region.frontier;
        if grew {
            self.model = FreeSpaceModel::build(&self.safe, &grid, &cfg.geometry)?;
        }
        self.update_saturation();
        if !self.model.contains(self.robot.position) {
            return Err(Error::ContainmentViolation { x: self.robot.position.x, y: self.robot.position.y });
        }

        let ticks_before = self.tick;
        let mut blocked_now: Vec<usize> = Vec::new();
        let mut attempts = 0;
        let mut measurement = None;
        let mut last = None;
        let mut status = Status::Running;
        while attempts < cfg.max_reselect {
            let mut skip = self.blocked.clone();
            skip.extend_from_slice(&blocked_now);
            skip.extend(self.saturated.keys());
            let decision = select(&self.frontier, &self.confidence, &self.planner, &self.safe, &grid, &skip)?;
            self.decisions.push(decision.log_line(t, self.planner.mode, self.planner.goal));
            debug!("{}", self.decisions.last().expect("just pushed"));
            last = Some(decision);
            let (Some(target), Some(cell)) = (decision.target, decision.cell) else {
                if decision.reason == Reason::ExplorationComplete {
                    status = Status::FrontierExhausted;
                }
                break;
            };
            attempts += 1;
            self.subgoals_issued += 1;
            self.last_subgoal = Some(target);
            let route = waypoints(&grid, &self.safe, self.robot.position, target);
            let mut ticks = Vec::new();
            let outcome = drive(&mut self.robot, &route, &self.model, &cfg.navigator, grid.resolution, |tick| {
                ticks.push(tick)
            })?;
            for tick in ticks {
                self.log_position(tick.position, tick.contained);
            }
            if outcome == DriveOutcome::Arrived {
                let x = self.robot.position;
                if !grid.cell_at(x).is_some_and(|c| self.safe.contains(c)) {
                    self.measurement_violations += 1;
                    warn!("iteration {t}: measuring outside the safe set at ({}, {})", x.x, x.y);
                }
                let y = measure(&self.terrain, x, cfg.noise_sd(), &mut self.rng)?;
                self.gp.add_observation(x, y)?;
                self.posterior.refresh(&self.gp);
                measurement = Some(y);
                self.pending = Some((cell, self.confidence.lower[cell], self.confidence.upper[cell], self.safe.len()));
                break;
            }
            debug!("iteration {t}: {outcome:?} on the way to cell {cell}, reselecting");
            blocked_now.push(cell);
        }
        self.blocked = blocked_now;

        if status == Status::Running {
            status = check_termination(
                self.robot.position,
                &self.planner,
                &self.safe,
                &self.frontier,
                t,
                cfg.max_iterations,
                &grid,
            );
        }
        let decision = last.expect("select ran at least once");
        self.records.push(IterationRecord {
            t,
            robot: self.robot.position,
            subgoal: decision.target,
            reason: decision.reason,
            candidates: decision.candidate_count,
            attempts,
            measurement,
            safe_cells: self.safe.len(),
            frontier_cells: self.frontier.len(),
            mean_width: self.confidence.mean_width(),
            ticks: self.tick - ticks_before,
            expansion_stalled: region.stalled,
            status,
        });
        self.status = status;
        let every = cfg.snapshot_every;
        if every > 0 && (t.is_multiple_of(every) || status != Status::Running) {
            self.snapshots.push(self.snapshot()?);
        }
        if status != Status::Running {
            info!("episode finished after {t} iterations: {status}");
        }
        Ok(status)
    }

    fn update_saturation(&mut self) {
        let conf = &self.confidence;
        self.saturated.retain(|&c, &mut (lo, up)| conf.lower[c] == lo && conf.upper[c] == up);
        if let Some((c, lo, up, n)) = self.pending.take() {
            if conf.lower[c] == lo && conf.upper[c] == up && self.safe.len() == n {
                debug!("iteration {}: cell {c} saturated", self.t);
                self.saturated.insert(c, (lo, up));
            }
        }
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        let res = self.terrain.grid.resolution;
        let nav = &self.config.navigator;
        let local = local_free_space(
            &self.robot,
            &self.model,
            nav.sensing_radius * res,
            nav.clearance * res,
            nav.disk_sides,
        )
        .ok()
        .map(|l| l.region);
        Ok(Snapshot {
            t: self.t,
            status: self.status,
            robot: self.robot.position,
            subgoal: self.last_subgoal,
            goal: self.planner.goal,
            lower: self.confidence.lower.clone(),
            upper: self.confidence.upper.clone(),
            safe: self.safe.clone(),
            frontier: self.frontier.clone(),
            hulls: self.model.hulls.clone(),
            workspace: self.model.workspace,
            obstacles: self.model.obstacles.clone(),
            local,
        })
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        EpisodeMetrics {
            records: self.records.clone(),
            status: self.status,
            iterations: self.t,
            iterations_to_goal: (self.status == Status::GoalReached).then_some(self.t),
            safety_violations: self.safety_violations,
            containment_violations: self.containment_violations,
            measurement_violations: self.measurement_violations,
            inconsistencies: self.confidence.inconsistencies,
            safe_fraction: self.safe.len() as f64 / self.terrain.grid.len() as f64,
            total_ticks: self.tick,
        }
    }

    /// Steps until a terminal status.
    pub fn run(mut self) -> Result<EpisodeOutput> {
        while self.status == Status::Running {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> EpisodeOutput {
        let metrics = self.metrics();
        EpisodeOutput {
            grid: self.terrain.grid,
            metrics,
            trajectory: self.trajectory,
            snapshots: self.snapshots,
            decisions: self.decisions,
        }
    }
}

/// Runs an episode on an already loaded terrain.
pub fn run_episode_on(config: &RunConfig, terrain: &TerrainGrid) -> Result<EpisodeOutput> {
    Simulation::new(config.clone(), terrain.clone())?.run()
}

/// Loads the configured terrain and runs an episode on it.
pub fn run_episode(config: &RunConfig) -> Result<EpisodeOutput> {
    let terrain = load_terrain(&config.terrain)?;
    run_episode_on(config, &terrain)
}
