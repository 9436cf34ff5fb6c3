//! Subgoal selection over the frontier and episode termination.
//!
//! Goal-directed selection keeps the `top_n` frontier cells nearest to the
//! goal and takes the one with the widest confidence interval. Goal-free
//! selection takes the widest interval over the whole frontier. Ties are
//! broken by ascending row-major cell index.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellSet, Grid, Point};
use crate::regions::ConfidenceField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    GoalDirected,
    GoalFree,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::GoalDirected => "goal-directed",
            Mode::GoalFree => "goal-free",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerConfig {
    pub goal: Option<Point>,
    pub top_n: usize,
    pub mode: Mode,
}

impl PlannerConfig {
    pub fn goal_directed(goal: Point, top_n: usize) -> Result<Self> {
        let cfg = PlannerConfig { goal: Some(goal), top_n, mode: Mode::GoalDirected };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn goal_free() -> Self {
        PlannerConfig { goal: None, top_n: 1, mode: Mode::GoalFree }
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::invalid("top_n must be at least 1"));
        }
        match (self.mode, self.goal) {
            (Mode::GoalDirected, Some(g)) if g.is_finite() => Ok(()),
            (Mode::GoalDirected, _) => Err(Error::invalid("goal-directed mode needs a finite goal")),
            (Mode::GoalFree, None) => Ok(()),
            (Mode::GoalFree, Some(_)) => Err(Error::invalid("goal-free mode must not have a goal")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    FrontierSelected,
    GoalReachableDirectly,
    ExplorationComplete,
    /// Frontier exists but every cell in it is currently blocked.
    Stalled,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::FrontierSelected => "frontier-selected",
            Reason::GoalReachableDirectly => "goal-reachable-directly",
            Reason::ExplorationComplete => "exploration-complete",
            Reason::Stalled => "stalled",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubgoalDecision {
    /// Where to go next; `None` when there is nowhere to go.
    pub target: Option<Point>,
    /// Cell of `target`.
    pub cell: Option<usize>,
    pub reason: Reason,
    /// Frontier cells that competed in the final argmax.
    pub candidate_count: usize,
    /// Confidence width of the chosen cell.
    pub width: f64,
}

impl SubgoalDecision {
    fn nothing(reason: Reason) -> Self {
        SubgoalDecision { target: None, cell: None, reason, candidate_count: 0, width: f64::NAN }
    }

    /// One decision-log line: iteration, mode, candidates, chosen cell,
    /// distance to goal and interval width.
    pub fn log_line(&self, iter: usize, mode: Mode, goal: Option<Point>) -> String {
        let cell = self.cell.map_or_else(|| "-".to_string(), |c| c.to_string());
        let dist = match (self.target, goal) {
            (Some(t), Some(g)) => t.dist(g).to_string(),
            _ => "-".to_string(),
        };
        format!(
            "iter={iter} mode={mode} reason={} candidates={} cell={cell} goal_dist={dist} width={}",
            self.reason, self.candidate_count, self.width
        )
    }
}

fn argmax_width(cells: impl IntoIterator<Item = usize>, conf: &ConfidenceField) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for c in cells {
        let w = conf.width(c);
        match best {
            None => best = Some((c, w)),
            Some((bc, bw)) => {
                if w > bw || (w == bw && c < bc) {
                    best = Some((c, w));
                }
            }
        }
    }
    best
}

/// Frontier cells sorted by distance to `goal`, ascending, ties by index.
pub fn rank_by_goal_distance(frontier: impl IntoIterator<Item = usize>, goal: Point, grid: &Grid) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> = frontier.into_iter().map(|c| (grid.cell_center(c).dist(goal), c)).collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, c)| c).collect()
}

/// Goal-biased selection. Cells listed in `blocked` are skipped.
pub fn select_subgoal(
    frontier: &CellSet,
    conf: &ConfidenceField,
    cfg: &PlannerConfig,
    safe: &CellSet,
    grid: &Grid,
    blocked: &[usize],
) -> Result<SubgoalDecision> {
    let goal = match (cfg.mode, cfg.goal) {
        (Mode::GoalDirected, Some(g)) => g,
        _ => return Err(Error::invalid("select_subgoal needs goal-directed mode")),
    };
    if let Some(gc) = grid.cell_at(goal) {
        if safe.contains(gc) && !blocked.contains(&gc) {
            return Ok(SubgoalDecision {
                target: Some(goal),
                cell: Some(gc),
                reason: Reason::GoalReachableDirectly,
                candidate_count: 1,
                width: conf.width(gc),
            });
        }
    }
    let open: Vec<usize> = frontier.iter().filter(|c| !blocked.contains(c)).collect();
    if open.is_empty() {
        let reason = if frontier.is_empty() { Reason::ExplorationComplete } else { Reason::Stalled };
        return Ok(SubgoalDecision::nothing(reason));
    }
    let window: Vec<usize> = rank_by_goal_distance(open, goal, grid).into_iter().take(cfg.top_n).collect();
    let (cell, width) = argmax_width(window.iter().copied(), conf).expect("window is non-empty");
    Ok(SubgoalDecision {
        target: Some(grid.cell_center(cell)),
        cell: Some(cell),
        reason: Reason::FrontierSelected,
        candidate_count: window.len(),
        width,
    })
}

/// Goal-free selection: widest interval over the whole frontier.
pub fn select_explore_target(
    frontier: &CellSet,
    conf: &ConfidenceField,
    grid: &Grid,
    blocked: &[usize],
) -> SubgoalDecision {
    let open: Vec<usize> = frontier.iter().filter(|c| !blocked.contains(c)).collect();
    match argmax_width(open.iter().copied(), conf) {
        Some((cell, width)) => SubgoalDecision {
            target: Some(grid.cell_center(cell)),
            cell: Some(cell),
            reason: Reason::FrontierSelected,
            candidate_count: open.len(),
            width,
        },
        None if frontier.is_empty() => SubgoalDecision::nothing(Reason::ExplorationComplete),
        None => SubgoalDecision::nothing(Reason::Stalled),
    }
}

/// Dispatches on `cfg.mode`.
pub fn select(
    frontier: &CellSet,
    conf: &ConfidenceField,
    cfg: &PlannerConfig,
    safe: &CellSet,
    grid: &Grid,
    blocked: &[usize],
) -> Result<SubgoalDecision> {
    match cfg.mode {
        Mode::GoalDirected => select_subgoal(frontier, conf, cfg, safe, grid, blocked),
        Mode::GoalFree => Ok(select_explore_target(frontier, conf, grid, blocked)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Running,
    GoalReached,
    FrontierExhausted,
    MaxIterations,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Running => "running",
            Status::GoalReached => "goal-reached",
            Status::FrontierExhausted => "frontier-exhausted",
            Status::MaxIterations => "max-iterations",
        })
    }
}

pub fn check_termination(
    robot: Point,
    cfg: &PlannerConfig,
    safe: &CellSet,
    frontier: &CellSet,
    iter: usize,
    max_iter: usize,
    grid: &Grid,
) -> Status {
    if let (Mode::GoalDirected, Some(goal)) = (cfg.mode, cfg.goal) {
        if robot.dist(goal) <= grid.resolution {
            return Status::GoalReached;
        }
    }
    if frontier.is_empty() {
        let goal_open = cfg.goal.and_then(|g| grid.cell_at(g)).is_some_and(|gc| safe.contains(gc));
        if !goal_open {
            return Status::FrontierExhausted;
        }
    }
    if iter >= max_iter {
        return Status::MaxIterations;
    }
    Status::Running
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::POS_INF_SENTINEL;

    fn grid() -> Grid {
        Grid::new(10, 10, 1.0, Point::default()).unwrap()
    }

    fn conf_with(widths: &[(usize, f64)], len: usize) -> ConfidenceField {
        let mut c = ConfidenceField { lower: vec![0.0; len], upper: vec![0.0; len], inconsistencies: 0 };
        for &(i, w) in widths {
            c.upper[i] = w;
        }
        c
    }

    #[test]
    fn singleton_frontier() {
        let g = grid();
        let f = CellSet::from_indices(g.len(), [42]);
        let cfg = PlannerConfig::goal_directed(Point::new(9.5, 9.5), 10).unwrap();
        let d = select_subgoal(&f, &conf_with(&[(42, 3.0)], g.len()), &cfg, &f, &g, &[]).unwrap();
        assert_eq!(d.cell, Some(42));
        assert_eq!(d.reason, Reason::FrontierSelected);
    }

    #[test]
    fn window_then_widest() {
        // Goal at the center of cell 0; a, b, c at distances 2, 5, 3.
        let g = grid();
        let goal = g.cell_center(0);
        let (a, b, c) = (g.index(2, 0), g.index(5, 0), g.index(0, 3));
        let f = CellSet::from_indices(g.len(), [a, b, c]);
        let conf = conf_with(&[(a, 1.0), (b, 9.0), (c, 2.0)], g.len());
        let cfg = PlannerConfig::goal_directed(goal, 2).unwrap();
        let d = select_subgoal(&f, &conf, &cfg, &f, &g, &[]).unwrap();
        assert_eq!(d.cell, Some(c));
        assert_eq!(d.candidate_count, 2);
    }

    #[test]
    fn safe_goal_short_circuits() {
        let g = grid();
        let goal = Point::new(7.2, 3.4);
        let safe = CellSet::from_indices(g.len(), [g.cell_at(goal).unwrap(), 11]);
        let f = CellSet::from_indices(g.len(), [11]);
        let cfg = PlannerConfig::goal_directed(goal, 3).unwrap();
        let d = select_subgoal(&f, &conf_with(&[], g.len()), &cfg, &safe, &g, &[]).unwrap();
        assert_eq!(d.reason, Reason::GoalReachableDirectly);
        assert_eq!(d.target, Some(goal));
    }

    #[test]
    fn empty_frontier_is_exploration_complete() {
        let g = grid();
        let cfg = PlannerConfig::goal_directed(Point::new(9.5, 9.5), 3).unwrap();
        let empty = CellSet::empty(g.len());
        let d = select_subgoal(&empty, &conf_with(&[], g.len()), &cfg, &empty, &g, &[]).unwrap();
        assert_eq!(d.reason, Reason::ExplorationComplete);
        assert!(d.target.is_none());
        assert!(select_subgoal(&empty, &conf_with(&[], g.len()), &PlannerConfig::goal_free(), &empty, &g, &[]).is_err());
    }

    #[test]
    fn blocked_cells_are_skipped() {
        let g = grid();
        let f = CellSet::from_indices(g.len(), [3, 4]);
        let conf = conf_with(&[(3, 5.0), (4, 1.0)], g.len());
        let d = select_explore_target(&f, &conf, &g, &[3]);
        assert_eq!(d.cell, Some(4));
        let d = select_explore_target(&f, &conf, &g, &[3, 4]);
        assert_eq!(d.reason, Reason::Stalled);
    }

    #[test]
    fn explore_takes_widest_then_lowest_index() {
        let g = grid();
        let f = CellSet::from_indices(g.len(), [17, 5, 60]);
        let d = select_explore_target(&f, &conf_with(&[(17, 0.5), (5, 0.9), (60, 0.2)], g.len()), &g, &[]);
        assert_eq!(d.cell, Some(5));
        let d = select_explore_target(&f, &conf_with(&[(17, 1.0), (5, 1.0), (60, 1.0)], g.len()), &g, &[]);
        assert_eq!(d.cell, Some(5));
        let d = select_explore_target(&CellSet::empty(g.len()), &conf_with(&[], g.len()), &g, &[]);
        assert_eq!(d.reason, Reason::ExplorationComplete);
    }

    #[test]
    fn sentinel_widths_are_infinite() {
        let g = grid();
        let mut conf = conf_with(&[(1, 3.0)], g.len());
        conf.upper[2] = POS_INF_SENTINEL;
        let f = CellSet::from_indices(g.len(), [1, 2]);
        assert_eq!(select_explore_target(&f, &conf, &g, &[]).cell, Some(2));
    }

    #[test]
    fn termination_statuses() {
        let g = grid();
        let goal = Point::new(5.5, 5.5);
        let cfg = PlannerConfig::goal_directed(goal, 3).unwrap();
        let some = CellSet::from_indices(g.len(), [0]);
        assert_eq!(check_termination(goal, &cfg, &some, &some, 3, 10, &g), Status::GoalReached);
        assert_eq!(check_termination(Point::new(0.5, 0.5), &cfg, &some, &some, 10, 10, &g), Status::MaxIterations);
        assert_eq!(check_termination(Point::new(0.5, 0.5), &cfg, &some, &some, 3, 10, &g), Status::Running);
        let free = PlannerConfig::goal_free();
        let empty = CellSet::empty(g.len());
        assert_eq!(check_termination(Point::new(0.5, 0.5), &free, &some, &empty, 3, 10, &g), Status::FrontierExhausted);
    }

    #[test]
    fn config_validation() {
        assert!(PlannerConfig::goal_directed(Point::new(1.0, 1.0), 0).is_err());
        let bad = PlannerConfig { goal: None, top_n: 3, mode: Mode::GoalDirected };
        assert!(bad.validate().is_err());
        let bad = PlannerConfig { goal: Some(Point::default()), top_n: 3, mode: Mode::GoalFree };
        assert!(bad.validate().is_err());
    }
}
