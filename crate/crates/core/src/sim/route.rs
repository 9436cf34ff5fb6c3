//! Shortest paths over safe cells, used to turn a subgoal into waypoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::grid::{CellSet, Grid, Point};

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-connected moves between cells of `allowed`. A diagonal move needs both
/// cells it skirts to be allowed, so the straight segment between the two
/// centers never leaves allowed cells.
fn neighbours(grid: &Grid, allowed: &CellSet, cell: usize, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let (c, r) = grid.col_row(cell);
    let (c, r) = (c as i64, r as i64);
    let ok = |dc: i64, dr: i64| -> Option<usize> {
        let (nc, nr) = (c + dc, r + dr);
        if nc < 0 || nr < 0 || nc >= grid.width as i64 || nr >= grid.height as i64 {
            return None;
        }
        let i = grid.index(nc as usize, nr as usize);
        allowed.contains(i).then_some(i)
    };
    let diag = grid.resolution * std::f64::consts::SQRT_2;
    for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
        if let Some(i) = ok(dc, dr) {
            out.push((i, grid.resolution));
        }
    }
    for (dc, dr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        if let (Some(i), Some(_), Some(_)) = (ok(dc, dr), ok(dc, 0), ok(0, dr)) {
            out.push((i, diag));
        }
    }
}

/// Cells from `from` to `to` inclusive through `allowed`, or `None` when
/// they are not connected.
pub fn shortest_path(grid: &Grid, allowed: &CellSet, from: usize, to: usize) -> Option<Vec<usize>> {
    if !allowed.contains(from) || !allowed.contains(to) {
        return None;
    }
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut prev = vec![usize::MAX; grid.len()];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Entry { cost: 0.0, cell: from });
    let mut nbrs = Vec::with_capacity(8);
    while let Some(Entry { cost, cell }) = heap.pop() {
        if cell == to {
            break;
        }
        if cost > dist[cell] {
            continue;
        }
        neighbours(grid, allowed, cell, &mut nbrs);
        for &(n, w) in &nbrs {
            let c = cost + w;
            if c < dist[n] {
                dist[n] = c;
                prev[n] = cell;
                heap.push(Entry { cost: c, cell: n });
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Waypoints from `position` to `target` through safe cells: the centers of
/// the path cells after the robot's own, ending exactly at `target`. Falls
/// back to the straight line when no safe path exists.
pub fn waypoints(grid: &Grid, safe: &CellSet, position: Point, target: Point) -> Vec<Point> {
    let from = grid.cell_at(position);
    let to = grid.cell_at(target);
    let path = match (from, to) {
        (Some(a), Some(b)) => shortest_path(grid, safe, a, b),
        _ => None,
    };
    match path {
        Some(cells) => {
            let mut pts: Vec<Point> = cells[1..].iter().map(|&c| grid.cell_center(c)).collect();
            match pts.last_mut() {
                Some(last) => *last = target,
                None => pts.push(target),
            }
            pts
        }
        None => vec![target],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_avoids_disallowed_cells_and_corners() {
        // 3x3 with the center missing: going from (0,0) to (2,2) must walk
        // the rim, never cutting the missing center's corners.
        let g = Grid::new(3, 3, 1.0, Point::default()).unwrap();
        let allowed = CellSet::from_indices(9, (0..9).filter(|&i| i != 4));
        let p = shortest_path(&g, &allowed, 0, 8).unwrap();
        assert_eq!(p.len(), 5);
        assert!(!p.contains(&4));
        for w in p.windows(2) {
            let (a, b) = (g.col_row(w[0]), g.col_row(w[1]));
            assert_eq!(a.0.abs_diff(b.0) + a.1.abs_diff(b.1), 1);
        }
    }

    #[test]
    fn disconnected_cells_fall_back_to_a_straight_line() {
        let g = Grid::new(3, 1, 1.0, Point::default()).unwrap();
        let allowed = CellSet::from_indices(3, [0, 2]);
        assert!(shortest_path(&g, &allowed, 0, 2).is_none());
        let t = Point::new(2.5, 0.5);
        assert_eq!(waypoints(&g, &allowed, Point::new(0.5, 0.5), t), vec![t]);
    }

    #[test]
    fn waypoints_end_at_the_target() {
        let g = Grid::new(4, 1, 1.0, Point::default()).unwrap();
        let all = CellSet::full(4);
        let t = Point::new(3.3, 0.6);
        let w = waypoints(&g, &all, Point::new(0.5, 0.5), t);
        assert_eq!(w, vec![Point::new(1.5, 0.5), Point::new(2.5, 0.5), t]);
        assert_eq!(waypoints(&g, &all, Point::new(3.5, 0.5), t), vec![t]);
    }
}
