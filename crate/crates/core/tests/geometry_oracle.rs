//! Clustering, hulls and the free-space partition against brute-force
//! references.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saegt::geometry::{cluster_points, concave_hull, convex_hull, FreeSpaceModel, GeometryParams, HullParams, Polygon};
use saegt::grid::{CellSet, Grid, Point};

fn union_find_clusters(pts: &[Point], r: f64) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[i].dist(pts[j]) <= r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..pts.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    canonical(groups.into_values().collect())
}

fn canonical(mut c: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for g in &mut c {
        g.sort_unstable();
    }
    c.sort();
    c
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, side: f64) -> Vec<Point> {
    (0..n).map(|_| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side))).collect()
}

#[test]
fn clustering_matches_union_find_and_ignores_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.random_range(1..300);
        let pts = random_points(&mut rng, n, 30.0);
        let r = rng.random_range(0.5..3.0);
        let ours = canonical(cluster_points(&pts, r));
        assert_eq!(ours, union_find_clusters(&pts, r));

        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<Point> = perm.iter().map(|&i| pts[i]).collect();
        let back = canonical(cluster_points(&shuffled, r).into_iter().map(|g| g.into_iter().map(|i| perm[i]).collect()).collect());
        assert_eq!(back, ours);
    }
}

/// Jarvis march, counter-clockwise, collinear points skipped.
fn gift_wrap(pts: &[Point]) -> Vec<Point> {
    let start = *pts.iter().min_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))).unwrap();
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut cand = if pts[0] == cur { pts[1] } else { pts[0] };
        for &p in pts {
            if p == cur {
                continue;
            }
            let o = (cand - cur).cross(p - cur);
            if o < 0.0 || (o == 0.0 && cur.dist(p) > cur.dist(cand)) {
                cand = p;
            }
        }
        if cand == start {
            break;
        }
        hull.push(cand);
        cur = cand;
    }
    hull
}

fn same_ring(a: &[Point], b: &[Point]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let Some(off) = b.iter().position(|p| *p == a[0]) else { return false };
    (0..a.len()).all(|i| a[i] == b[(i + off) % b.len()])
}

#[test]
fn convex_hull_matches_gift_wrapping() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.random_range(3..200);
        let pts = random_points(&mut rng, n, 10.0);
        let ours = convex_hull(&pts);
        let reference = gift_wrap(&pts);
        assert!(same_ring(&ours, &reference), "{ours:?} vs {reference:?}");
    }
}

fn c_shape() -> (Grid, CellSet) {
    // 12x12 block with a 4-wide slot open to the east.
    let grid = Grid::new(16, 16, 1.0, Point::default()).unwrap();
    let cells = (0..grid.len()).filter(|&i| {
        let (c, r) = grid.col_row(i);
        (2..14).contains(&c) && (2..14).contains(&r) && !((6..14).contains(&c) && (6..10).contains(&r))
    });
    let set = CellSet::from_indices(grid.len(), cells);
    (grid, set)
}

#[test]
fn c_shape_keeps_its_slot_out() {
    let (grid, safe) = c_shape();
    let m = FreeSpaceModel::build(&safe, &grid, &GeometryParams::default()).unwrap();
    assert_eq!(m.hulls.len(), 1);
    let hull = &m.hulls[0];
    assert!(hull.is_simple());
    // Every safe cell lies fully inside.
    for i in safe.iter() {
        let c = grid.cell_center(i);
        for (dx, dy) in [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5), (0.0, 0.0)] {
            assert!(hull.contains(Point::new(c.x + dx, c.y + dy)));
        }
    }
    let cells_area = safe.len() as f64;
    assert!(hull.area() >= cells_area - 1e-9);
    assert!(hull.area() < 144.0, "slot was bridged: area {}", hull.area());
    let deep_in_slot = Point::new(11.0, 8.0);
    assert!(!m.contains(deep_in_slot));
    assert!(m.obstacles.iter().any(|o| o.contains(deep_in_slot)));
}

/// Crossing-number point-in-polygon.
fn inside(poly: &Polygon, p: Point) -> bool {
    let v = &poly.vertices;
    let mut c = false;
    let mut j = v.len() - 1;
    for i in 0..v.len() {
        if (v[i].y > p.y) != (v[j].y > p.y) && p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x {
            c = !c;
        }
        j = i;
    }
    c
}

fn random_safe(rng: &mut ChaCha8Rng, grid: &Grid) -> CellSet {
    let mut cells = Vec::new();
    for _ in 0..rng.random_range(1..8) {
        let c = Point::new(rng.random_range(0.0..grid.width as f64), rng.random_range(0.0..grid.height as f64));
        cells.extend(grid.disk(c, rng.random_range(0.5..6.0)));
    }
    if cells.is_empty() {
        cells.push(0);
    }
    CellSet::from_indices(grid.len(), cells)
}

#[test]
fn free_space_partitions_the_workspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let grid = Grid::new(40, 40, 1.0, Point::new(-3.0, 2.0)).unwrap();
        let safe = random_safe(&mut rng, &grid);
        let m = FreeSpaceModel::build(&safe, &grid, &GeometryParams::default()).unwrap();
        let hull_area: f64 = m.hulls.iter().map(Polygon::area).sum();
        let obs_area: f64 = m.obstacles.iter().map(|o| o.area()).sum();
        let ws = m.workspace.area();
        assert!(((hull_area + obs_area) - ws).abs() <= 1e-6 * ws, "{hull_area} + {obs_area} vs {ws}");

        let mut agree = 0;
        let probes = 10_000;
        for _ in 0..probes {
            let p = Point::new(
                rng.random_range(m.workspace.min.x..m.workspace.max.x),
                rng.random_range(m.workspace.min.y..m.workspace.max.y),
            );
            let in_obstacle_def = !m.hulls.iter().any(|h| inside(h, p));
            let in_obstacle = m.obstacles.iter().any(|o| o.contains(p));
            if in_obstacle_def == in_obstacle {
                agree += 1;
            }
        }
        assert!(agree as f64 >= 0.999 * probes as f64, "agreement {agree}/{probes}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concave_hull_encloses_its_input(
        raw in prop::collection::vec((0u8..20, 0u8..20), 1..120),
        threshold in 1.0f64..6.0,
    ) {
        let pts: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();
        let hull = concave_hull(&pts, &HullParams::with_threshold(threshold)).unwrap();
        prop_assert!(hull.is_ccw());
        prop_assert!(hull.is_simple());
        for p in &pts {
            prop_assert!(hull.contains(*p));
        }
        let convex = concave_hull(&pts, &HullParams::with_threshold(f64::INFINITY)).unwrap();
        prop_assert!(hull.area() <= convex.area() + 1e-9);
    }
}
