//! Text artifacts of an episode.
//!
//! * `metrics.csv` with header [`METRICS_HEADER`]; empty fields mean "none".
//! * `trajectory.csv` with header [`TRAJECTORY_HEADER`].
//! * `snapshots/t_NNNNN/`: `lower.grid`, `upper.grid`, `safe.grid` and
//!   `frontier.grid` in the terrain grid format (masks as 0/1), plus
//!   `geometry.txt` and `meta.txt`.
//!
//! `geometry.txt` holds one polygon record per line, `<tag> <n> x1 y1 ... xn
//! yn`. Tags are `workspace`, `hull`, `obstacle`, `hole` (belongs to the
//! latest `obstacle`), `local`, and the single points `robot`, `subgoal`,
//! `goal`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{Polygon, Rect, Region};
use crate::grid::{CellSet, Grid, Point};
use crate::planner::Status;

use super::episode::{EpisodeMetrics, EpisodeOutput, Snapshot, TrajectoryPoint};
use super::terrain::{fmt_f64, format_grid, parse_grid};

pub const METRICS_HEADER: &str = "t,robot_x,robot_y,subgoal_x,subgoal_y,reason,candidates,attempts,measurement,\
safe_cells,frontier_cells,mean_width,ticks,expansion_stalled,status";

pub const TRAJECTORY_HEADER: &str = "tick,x,y,subgoal_id";

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn metrics_csv(metrics: &EpisodeMetrics) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in &metrics.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            fmt_f64(r.robot.x),
            fmt_f64(r.robot.y),
            opt(r.subgoal.map(|p| p.x)),
            opt(r.subgoal.map(|p| p.y)),
            r.reason,
            r.candidates,
            r.attempts,
            opt(r.measurement),
            r.safe_cells,
            r.frontier_cells,
            fmt_f64(r.mean_width),
            r.ticks,
            u8::from(r.expansion_stalled),
            r.status,
        );
    }
    out
}

pub fn trajectory_csv(trajectory: &[TrajectoryPoint]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for p in trajectory {
        let id = p.subgoal_id.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", p.tick, fmt_f64(p.position.x), fmt_f64(p.position.y), id);
    }
    out
}

/// `key = value` lines summarising the episode.
pub fn summary_text(metrics: &EpisodeMetrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status = {}", metrics.status);
    let _ = writeln!(out, "iterations = {}", metrics.iterations);
    match metrics.iterations_to_goal {
        Some(n) => {
            let _ = writeln!(out, "iterations_to_goal = {n}");
        }
        None => {
            let _ = writeln!(out, "iterations_to_goal = none");
        }
    }
    let _ = writeln!(out, "safety_violations = {}", metrics.safety_violations);
    let _ = writeln!(out, "containment_violations = {}", metrics.containment_violations);
    let _ = writeln!(out, "measurement_violations = {}", metrics.measurement_violations);
    let _ = writeln!(out, "inconsistencies = {}", metrics.inconsistencies);
    let _ = writeln!(out, "safe_fraction = {}", fmt_f64(metrics.safe_fraction));
    let _ = writeln!(out, "total_ticks = {}", metrics.total_ticks);
    out
}

pub fn snapshot_dir_name(t: usize) -> String {
    format!("t_{t:05}")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn mask_values(set: &CellSet) -> Vec<f64> {
    set.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

fn ring_record(out: &mut String, tag: &str, pts: &[Point]) {
    let _ = write!(out, "{tag} {}", pts.len());
    for p in pts {
        let _ = write!(out, " {} {}", fmt_f64(p.x), fmt_f64(p.y));
    }
    out.push('\n');
}

pub fn geometry_text(snap: &Snapshot) -> String {
    let mut out = String::new();
    ring_record(&mut out, "workspace", &snap.workspace.to_polygon().vertices);
    for h in &snap.hulls {
        ring_record(&mut out, "hull", &h.vertices);
    }
    for o in &snap.obstacles {
        ring_record(&mut out, "obstacle", &o.exterior.vertices);
        for hole in &o.holes {
            ring_record(&mut out, "hole", &hole.vertices);
        }
    }
    if let Some(l) = &snap.local {
        ring_record(&mut out, "local", &l.vertices);
    }
    ring_record(&mut out, "robot", &[snap.robot]);
    if let Some(s) = snap.subgoal {
        ring_record(&mut out, "subgoal", &[s]);
    }
    if let Some(g) = snap.goal {
        ring_record(&mut out, "goal", &[g]);
    }
    out
}

pub fn write_snapshot(dir: &Path, grid: &Grid, snap: &Snapshot) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("lower.grid"), &format_grid(grid, &snap.lower))?;
    write_file(&dir.join("upper.grid"), &format_grid(grid, &snap.upper))?;
    write_file(&dir.join("safe.grid"), &format_grid(grid, &mask_values(&snap.safe)))?;
    write_file(&dir.join("frontier.grid"), &format_grid(grid, &mask_values(&snap.frontier)))?;
    write_file(&dir.join("geometry.txt"), &geometry_text(snap))?;
    write_file(&dir.join("meta.txt"), &format!("t = {}\nstatus = {}\n", snap.t, snap.status))
}

/// Writes metrics, trajectory, summary, decisions and snapshots into `dir`.
pub fn write_episode(dir: &Path, out: &EpisodeOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&out.metrics))?;
    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&out.trajectory))?;
    write_file(&dir.join("summary.txt"), &summary_text(&out.metrics))?;
    let mut log = out.decisions.join("\n");
    log.push('\n');
    write_file(&dir.join("decisions.log"), &log)?;
    let snaps = dir.join("snapshots");
    for s in &out.snapshots {
        write_snapshot(&snaps.join(snapshot_dir_name(s.t)), &out.grid, s)?;
    }
    Ok(())
}

/// Snapshot directories under `root`, sorted by name.
pub fn list_snapshots(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn read_grid(path: &Path) -> Result<(Grid, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text, &path.display().to_string())
}

fn read_mask(path: &Path, grid: &Grid) -> Result<CellSet> {
    let (g, vals) = read_grid(path)?;
    if g != *grid {
        return Err(Error::Parse { path: path.display().to_string(), line: 1, msg: "grid differs from lower.grid".into() });
    }
    Ok(CellSet::from_mask(vals.iter().map(|&v| v != 0.0).collect()))
}

fn parse_geometry(text: &str, name: &str, snap: &mut Snapshot) -> Result<()> {
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: name.to_string(), line: i + 1, msg };
        let mut toks = line.split_whitespace();
        let tag = toks.next().expect("line is not blank");
        let n: usize = toks
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("missing vertex count".into()))?;
        let nums: Vec<f64> = toks
            .map(|s| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`"))))
            .collect::<Result<_>>()?;
        if nums.len() != 2 * n {
            return Err(err(format!("expected {} coordinates, found {}", 2 * n, nums.len())));
        }
        let pts: Vec<Point> = nums.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
        let single = || pts.first().copied().ok_or_else(|| err(format!("`{tag}` needs one point")));
        match tag {
            "workspace" => {
                let poly = Polygon::new(pts.clone());
                snap.workspace = poly.bbox();
            }
            "hull" => snap.hulls.push(Polygon::new(pts)),
            "obstacle" => snap.obstacles.push(Region { exterior: Polygon::new(pts), holes: Vec::new() }),
            "hole" => snap
                .obstacles
                .last_mut()
                .ok_or_else(|| err("`hole` before any `obstacle`".into()))?
                .holes
                .push(Polygon::new(pts)),
            "local" => snap.local = Some(Polygon::new(pts)),
            "robot" => snap.robot = single()?,
            "subgoal" => snap.subgoal = Some(single()?),
            "goal" => snap.goal = Some(single()?),
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    Ok(())
}

fn parse_status(s: &str) -> Option<Status> {
    [Status::Running, Status::GoalReached, Status::FrontierExhausted, Status::MaxIterations]
        .into_iter()
        .find(|st| st.to_string() == s)
}

/// Reads a directory written by [`write_snapshot`].
pub fn read_snapshot(dir: &Path) -> Result<(Grid, Snapshot)> {
    let (grid, lower) = read_grid(&dir.join("lower.grid"))?;
    let (ug, upper) = read_grid(&dir.join("upper.grid"))?;
    if ug != grid {
        return Err(Error::Parse { path: dir.join("upper.grid").display().to_string(), line: 1, msg: "grid differs from lower.grid".into() });
    }
    let safe = read_mask(&dir.join("safe.grid"), &grid)?;
    let frontier = read_mask(&dir.join("frontier.grid"), &grid)?;
    let mut snap = Snapshot {
        t: 0,
        status: Status::Running,
        robot: Point::default(),
        subgoal: None,
        goal: None,
        lower,
        upper,
        safe,
        frontier,
        hulls: Vec::new(),
        workspace: Rect { min: grid.origin, max: grid.extent().1 },
        obstacles: Vec::new(),
        local: None,
    };
    let gpath = dir.join("geometry.txt");
    let text = fs::read_to_string(&gpath).map_err(|e| Error::io(&gpath, e))?;
    parse_geometry(&text, &gpath.display().to_string(), &mut snap)?;

    let mpath = dir.join("meta.txt");
    let meta = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    for (i, line) in meta.lines().enumerate() {
        let err = |msg: String| Error::Parse { path: mpath.display().to_string(), line: i + 1, msg };
        let Some((k, v)) = line.split_once('=') else { continue };
        match k.trim() {
            "t" => snap.t = v.trim().parse().map_err(|_| err(format!("bad t `{}`", v.trim())))?,
            "status" => snap.status = parse_status(v.trim()).ok_or_else(|| err(format!("bad status `{}`", v.trim())))?,
            _ => {}
        }
    }
    Ok((grid, snap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trips_through_files() {
        let grid = Grid::new(3, 2, 1.0, Point::new(0.0, 0.0)).unwrap();
        let sq = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(3.0, 2.0), Point::new(0.0, 2.0)]);
        let snap = Snapshot {
            t: 20,
            status: Status::GoalReached,
            robot: Point::new(1.5, 0.5),
            subgoal: Some(Point::new(2.5, 1.5)),
            goal: Some(Point::new(2.5, 1.5)),
            lower: vec![-f64::MAX, 1000.0, 1.0 / 3.0, 0.0, 1.0, 2.0],
            upper: vec![f64::MAX, 1200.0, 0.5, 1.0, 2.0, 3.0],
            safe: CellSet::from_indices(6, [1, 2]),
            frontier: CellSet::from_indices(6, [2]),
            hulls: vec![sq.clone()],
            workspace: Rect { min: Point::new(-2.0, -2.0), max: Point::new(5.0, 4.0) },
            obstacles: vec![Region { exterior: Rect { min: Point::new(-2.0, -2.0), max: Point::new(5.0, 4.0) }.to_polygon(), holes: vec![sq.reversed()] }],
            local: Some(sq),
        };
        let dir = std::env::temp_dir().join(format!("saegt-snap-{}", std::process::id()));
        write_snapshot(&dir, &grid, &snap).unwrap();
        let (g, back) = read_snapshot(&dir).unwrap();
        fs::remove_dir_all(&dir).ok();
        assert_eq!(g, grid);
        assert_eq!(back, snap);
    }

    #[test]
    fn sentinels_stay_short() {
        assert_eq!(fmt_f64(-f64::MAX), "-1.7976931348623157e308");
        assert_eq!(fmt_f64(1500.0), "1500");
        assert_eq!(fmt_f64(0.25), "0.25");
    }
}
