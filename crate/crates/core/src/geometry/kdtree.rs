//! Static 2D KD-tree with fixed-radius neighbor queries.

use crate::grid::Point;

#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Point>,
    /// Permutation of point indices laid out as an implicit balanced tree:
    /// the median of `order[lo..hi]` is the node, split on `depth % 2`.
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(points, &mut order, 0);
        KdTree { points: points.to_vec(), order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of all points within `radius` (inclusive) of `center`.
    pub fn within(&self, center: Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.search(center, radius * radius, radius, 0, self.order.len(), 0, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn search(&self, c: Point, r_sq: f64, r: f64, lo: usize, hi: usize, depth: usize, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = self.points[idx];
        if p.dist_sq(c) <= r_sq {
            out.push(idx);
        }
        let diff = if depth.is_multiple_of(2) { c.x - p.x } else { c.y - p.y };
        if diff <= r {
            self.search(c, r_sq, r, lo, mid, depth + 1, out);
        }
        if diff >= -r {
            self.search(c, r_sq, r, mid + 1, hi, depth + 1, out);
        }
    }
}

fn build(points: &[Point], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let mid = order.len() / 2;
    let key = |i: &usize| if depth.is_multiple_of(2) { points[*i].x } else { points[*i].y };
    order.select_nth_unstable_by(mid, |a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}
