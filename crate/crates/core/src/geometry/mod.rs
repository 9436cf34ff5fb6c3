//! Polygonal free space built from the safe cell set.
//!
//! Safe cells are grouped into spatial clusters, each cluster is wrapped in a
//! concave hull, a bounding rectangle is put around all hulls, and whatever
//! part of that rectangle no hull covers is treated as obstacle.

mod hull;
mod kdtree;
mod obstacles;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{CellSet, Grid, Point};

pub use hull::{concave_hull, convex_hull, HullParams};
pub use kdtree::KdTree;
pub use obstacles::{extract_obstacles, workspace_bbox};

/// Closed polygonal ring. Free-space hulls and obstacle exteriors run
/// counter-clockwise, holes clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let o = self.vertices[0];
        let mut acc = 0.0;
        for i in 1..n - 1 {
            acc += (self.vertices[i] - o).cross(self.vertices[i + 1] - o);
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn reversed(&self) -> Polygon {
        let mut v = self.vertices.clone();
        v.reverse();
        Polygon { vertices: v }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> Rect {
        let mut r = Rect { min: Point::new(f64::INFINITY, f64::INFINITY), max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY) };
        for &v in &self.vertices {
            r.min.x = r.min.x.min(v.x);
            r.min.y = r.min.y.min(v.y);
            r.max.x = r.max.x.max(v.x);
            r.max.y = r.max.y.max(v.y);
        }
        r
    }

    /// Closed membership: points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        self.boundary_distance(p) <= 1e-12 * (1.0 + p.norm()) || self.winding(p) != 0
    }

    /// Strict interior membership.
    pub fn contains_strict(&self, p: Point) -> bool {
        self.winding(p) != 0 && self.boundary_distance(p) > 1e-12 * (1.0 + p.norm())
    }

    fn winding(&self, p: Point) -> i32 {
        let mut w = 0;
        for (a, b) in self.edges() {
            if a.y <= p.y {
                if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                    w += 1;
                }
            } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
                w -= 1;
            }
        }
        w
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges().map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// True when no two non-adjacent edges meet and adjacent edges only
    /// share their common vertex.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<(Point, Point)> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // Adjacent edges may only overlap at the shared vertex.
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { d } else { c };
                    if point_segment_distance(other_j, a, b) == 0.0 && other_j != shared {
                        return false;
                    }
                    if point_segment_distance(other_i, c, d) == 0.0 && other_i != shared {
                        return false;
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

/// Polygon with optional holes.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub exterior: Polygon,
    pub holes: Vec<Polygon>,
}

impl Region {
    pub fn area(&self) -> f64 {
        self.exterior.area() - self.holes.iter().map(Polygon::area).sum::<f64>()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.exterior.contains(p) && !self.holes.iter().any(|h| h.contains_strict(p))
    }

    pub fn rings(&self) -> impl Iterator<Item = &Polygon> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon::new(vec![
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ])
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x && other.min.x <= self.max.x && self.min.y <= other.max.y && other.min.y <= self.max.y
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    p.dist(closest_point_on_segment(p, a, b))
}

pub fn closest_point_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Closed-segment intersection test, touching and collinear overlap included.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

/// Connected components of `points` under `‖p − q‖ ≤ radius`, as index
/// lists. Components are ordered by their smallest member and each list is
/// ascending, so the output does not depend on input order beyond indexing.
pub fn cluster_points(points: &[Point], radius: f64) -> Vec<Vec<usize>> {
    let tree = KdTree::new(points);
    let mut label = vec![usize::MAX; points.len()];
    let mut clusters = Vec::new();
    for seed in 0..points.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[seed] = id;
        let mut members = vec![seed];
        let mut stack = vec![seed];
        while let Some(i) = stack.pop() {
            for j in tree.within(points[i], radius) {
                if label[j] == usize::MAX {
                    label[j] = id;
                    members.push(j);
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

/// Safe cell centers grouped into clusters (cell indices, ascending).
pub fn cluster_safe_points(safe: &CellSet, grid: &Grid, radius: f64) -> Vec<Vec<usize>> {
    let cells: Vec<usize> = safe.iter().collect();
    let centers: Vec<Point> = cells.iter().map(|&c| grid.cell_center(c)).collect();
    cluster_points(&centers, radius).into_iter().map(|members| members.into_iter().map(|i| cells[i]).collect()).collect()
}

/// Tunables for turning a safe set into free space. Lengths are in
/// multiples of the grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    pub cluster_radius: f64,
    /// Hull edges at most this long are never dug into.
    pub hull_edge: f64,
    pub concavity: f64,
    pub margin: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams { cluster_radius: 1.5, hull_edge: 3.0, concavity: 2.0, margin: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeSpaceModel {
    /// Cell indices of each cluster, parallel to `hulls`.
    pub clusters: Vec<Vec<usize>>,
    pub hulls: Vec<Polygon>,
    pub workspace: Rect,
    pub obstacles: Vec<Region>,
}

impl FreeSpaceModel {
    pub fn build(safe: &CellSet, grid: &Grid, params: &GeometryParams) -> Result<Self> {
        let delta = grid.resolution;
        let hull_params = HullParams {
            length_threshold: params.hull_edge * delta,
            concavity: params.concavity,
            degenerate_buffer: delta / 2.0,
        };
        let mut clusters = cluster_safe_points(safe, grid, params.cluster_radius * delta);
        let mut hulls: Vec<Polygon> =
            clusters.iter().map(|c| concave_hull(&footprint_corners(c, grid), &hull_params)).collect::<Result<_>>()?;

        // Hulls of separate clusters can still overlap (a hull bridging over
        // a neighbouring cluster); merge such clusters and re-hull.
        while let Some((i, j)) = first_overlap(&hulls) {
            let merged: Vec<usize> =
                clusters[i].iter().chain(&clusters[j]).copied().collect::<BTreeSet<_>>().into_iter().collect();
            let hull = concave_hull(&footprint_corners(&merged, grid), &hull_params)?;
            clusters.remove(j);
            hulls.remove(j);
            clusters[i] = merged;
            hulls[i] = hull;
        }

        let workspace = workspace_bbox(&hulls, params.margin * delta)?;
        let obstacles = extract_obstacles(&workspace, &hulls, 1e-9 * delta)?;
        Ok(FreeSpaceModel { clusters, hulls, workspace, obstacles })
    }

    /// Closed membership in the union of hulls.
    pub fn contains(&self, p: Point) -> bool {
        self.hulls.iter().any(|h| h.bbox().contains(p) && h.contains(p))
    }

    /// All obstacle boundary segments (exteriors and holes).
    pub fn obstacle_edges(&self) -> Vec<(Point, Point)> {
        self.obstacles.iter().flat_map(|r| r.rings().flat_map(|ring| ring.edges().collect::<Vec<_>>())).collect()
    }
}

/// Corners of every cell in `cells`, deduplicated, in lattice order.
/// Lattice corners on the boundary of the cells' union. Corners shared by
/// four of the cells are interior and cannot shape the hull.
fn footprint_corners(cells: &[usize], grid: &Grid) -> Vec<Point> {
    let mut corners: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    for &c in cells {
        let (col, row) = grid.col_row(c);
        for (dc, dr) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            *corners.entry((row + dr, col + dc)).or_insert(0) += 1;
        }
    }
    corners
        .into_iter()
        .filter(|&(_, n)| n < 4)
        .map(|((r, c), _)| {
            Point::new(grid.origin.x + c as f64 * grid.resolution, grid.origin.y + r as f64 * grid.resolution)
        })
        .collect()
}

fn first_overlap(hulls: &[Polygon]) -> Option<(usize, usize)> {
    let boxes: Vec<Rect> = hulls.iter().map(Polygon::bbox).collect();
    for i in 0..hulls.len() {
        for j in i + 1..hulls.len() {
            if boxes[i].overlaps(&boxes[j]) && polygons_overlap(&hulls[i], &hulls[j]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    a.vertices.iter().any(|&v| b.contains(v))
        || b.vertices.iter().any(|&v| a.contains(v))
        || a.edges().any(|(p, q)| b.edges().any(|(r, s)| segments_intersect(p, q, r, s)))
}
