//! Reactive point-robot controller.
//!
//! Each control tick builds a convex local free space around the robot (a
//! polygonal disk clipped by one half-plane per nearby obstacle edge) and
//! moves toward the projection of the active target onto it. Every step stays
//! inside that convex region, so the robot can never cross an obstacle edge.
//!
//! This is a projection controller, not a diffeomorphic model-space
//! construction: it is safe by construction but only locally convergent. It
//! can stall in concave free space, which [`drive`] reports so the caller can
//! pick another target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{closest_point_on_segment, FreeSpaceModel, Polygon};
use crate::grid::Point;

/// Controller tunables. Lengths are multiples of the grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigatorParams {
    pub max_step: f64,
    pub sensing_radius: f64,
    /// Minimum standoff kept from obstacle edges once far enough away.
    pub clearance: f64,
    pub arrival_tolerance: f64,
    /// Ticks without progress before giving up on a target.
    pub stall_ticks: usize,
    /// Hard cap on ticks spent on one target.
    pub max_ticks: usize,
    /// Sides of the polygon approximating the sensing disk.
    pub disk_sides: usize,
}

impl Default for NavigatorParams {
    fn default() -> Self {
        NavigatorParams {
            max_step: 0.5,
            sensing_radius: 5.0,
            clearance: 0.25,
            arrival_tolerance: 0.5,
            stall_ticks: 50,
            max_ticks: 5000,
            disk_sides: 32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotState {
    pub position: Point,
    pub max_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalFreeSpace {
    /// Convex, counter-clockwise.
    pub region: Polygon,
}

fn disk(center: Point, radius: f64, sides: usize) -> Polygon {
    let sides = sides.max(3);
    Polygon::new(
        (0..sides)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / sides as f64;
                center + Point::new(a.cos(), a.sin()) * radius
            })
            .collect(),
    )
}

/// Keeps the part of convex `poly` where `normal · p ≤ offset`.
fn clip(poly: &Polygon, normal: Point, offset: f64) -> Polygon {
    let n = poly.vertices.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly.vertices[i];
        let b = poly.vertices[(i + 1) % n];
        let da = normal.dot(a) - offset;
        let db = normal.dot(b) - offset;
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
    Polygon::new(out)
}

/// Convex region around the robot that no obstacle edge enters.
///
/// For each obstacle edge closer than `sensing_radius`, the half-plane
/// through the closest edge point (pulled back toward the robot by
/// `min(clearance, d/2)`) is intersected with the sensing disk.
pub fn local_free_space(
    robot: &RobotState,
    model: &FreeSpaceModel,
    sensing_radius: f64,
    clearance: f64,
    disk_sides: usize,
) -> Result<LocalFreeSpace> {
    let x = robot.position;
    if !model.contains(x) {
        return Err(Error::ContainmentViolation { x: x.x, y: x.y });
    }
    let mut region = disk(x, sensing_radius, disk_sides);
    for (a, b) in model.obstacle_edges() {
        let c = closest_point_on_segment(x, a, b);
        let d = c.dist(x);
        if d >= sensing_radius + clearance {
            continue;
        }
        // Below this the direction c - x is rounding noise.
        let (normal, offset) = if d > 1e-9 * (1.0 + x.norm()) {
            let n = (c - x) * (1.0 / d);
            (n, n.dot(x) + d - clearance.min(d / 2.0))
        } else {
            // On the edge itself: obstacle rings keep the obstacle on their
            // left, so block the left side of the edge line.
            let dir = b - a;
            let len = dir.norm();
            if len == 0.0 {
                continue;
            }
            let n = Point::new(-dir.y, dir.x) * (1.0 / len);
            (n, n.dot(a))
        };
        region = clip(&region, normal, offset);
        if region.vertices.len() < 3 {
            return Err(Error::Geometry(format!("local free space around {x} collapsed")));
        }
    }
    Ok(LocalFreeSpace { region })
}

/// Closest point of a convex polygon to `p`.
pub fn project(region: &Polygon, p: Point) -> Point {
    if region.contains(p) {
        return p;
    }
    region
        .edges()
        .map(|(a, b)| closest_point_on_segment(p, a, b))
        .min_by(|u, v| u.dist_sq(p).total_cmp(&v.dist_sq(p)))
        .unwrap_or(p)
}

/// One control tick toward `subgoal`.
pub fn step(robot: &RobotState, subgoal: Point, lfs: &LocalFreeSpace) -> RobotState {
    let target = project(&lfs.region, subgoal);
    let delta = target - robot.position;
    let dist = delta.norm();
    let position = if dist <= robot.max_step {
        target
    } else {
        robot.position + delta * (robot.max_step / dist)
    };
    RobotState { position, ..*robot }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriveOutcome {
    Arrived,
    Stalled,
    TickLimit,
}

/// Per-tick report passed to the [`drive`] observer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tick {
    pub position: Point,
    /// Whether the position passed the point-in-free-space check.
    pub contained: bool,
}

/// Drives along `waypoints` (the last one is the destination) until arrival,
/// a stall, or the tick cap. Waypoints are visited in order; an intermediate
/// one counts as passed once the robot is within the arrival tolerance.
pub fn drive(
    robot: &mut RobotState,
    waypoints: &[Point],
    model: &FreeSpaceModel,
    params: &NavigatorParams,
    resolution: f64,
    mut on_tick: impl FnMut(Tick),
) -> Result<DriveOutcome> {
    let Some(&goal) = waypoints.last() else {
        return Ok(DriveOutcome::Arrived);
    };
    let arrival = params.arrival_tolerance * resolution;
    let sensing = params.sensing_radius * resolution;
    let clearance = params.clearance * resolution;
    let min_progress = 0.01 * robot.max_step;

    // Remaining route length from waypoint i to the end.
    let mut tail = vec![0.0; waypoints.len()];
    for i in (0..waypoints.len().saturating_sub(1)).rev() {
        tail[i] = tail[i + 1] + waypoints[i].dist(waypoints[i + 1]);
    }

    let mut next = 0;
    let mut best_remaining = f64::INFINITY;
    let mut since_progress = 0;
    for _ in 0..params.max_ticks {
        if robot.position.dist(goal) <= arrival {
            return Ok(DriveOutcome::Arrived);
        }
        while next + 1 < waypoints.len() && robot.position.dist(waypoints[next]) <= arrival {
            next += 1;
        }
        let carrot = next;
        let lfs = local_free_space(robot, model, sensing, clearance, params.disk_sides)?;
        *robot = step(robot, waypoints[carrot], &lfs);
        on_tick(Tick { position: robot.position, contained: model.contains(robot.position) });

        let remaining = robot.position.dist(waypoints[carrot]) + tail[carrot];
        if remaining < best_remaining - min_progress {
            best_remaining = remaining;
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress >= params.stall_ticks {
                return Ok(DriveOutcome::Stalled);
            }
        }
    }
    if robot.position.dist(goal) <= arrival {
        Ok(DriveOutcome::Arrived)
    } else {
        Ok(DriveOutcome::TickLimit)
    }
}
