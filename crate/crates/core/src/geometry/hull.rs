//! Convex and concave hulls of planar point sets.
//!
//! The concave hull starts from the convex hull and repeatedly "digs" long
//! edges: for an edge `(a, b)` longer than the length threshold, the nearest
//! interior point `p` that is closer to this edge than to either neighbouring
//! edge replaces the edge with `(a, p), (p, b)` when
//! `|ab| / min(|pa|, |pb|) > concavity`. A dig is only accepted if the removed
//! triangle holds no other input point and the new edges cross nothing, so
//! the ring stays simple and keeps every input point.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::Point;

use super::{point_segment_distance, segments_intersect, Polygon};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullParams {
    /// Edges no longer than this are left alone. `f64::INFINITY` yields the
    /// convex hull.
    pub length_threshold: f64,
    pub concavity: f64,
    /// Half-width of the rectangle used when the input has no area.
    pub degenerate_buffer: f64,
}

impl HullParams {
    pub fn with_threshold(length_threshold: f64) -> Self {
        HullParams { length_threshold, concavity: 2.0, degenerate_buffer: 0.5 }
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn lex(a: &Point, b: &Point) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

fn sorted_unique(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(lex);
    pts.dedup();
    pts
}

/// Indices (into a lexicographically sorted, deduplicated slice) of the
/// convex hull, counter-clockwise, collinear points dropped.
fn monotone_chain(pts: &[Point]) -> Vec<usize> {
    if pts.len() < 3 {
        return (0..pts.len()).collect();
    }
    let mut lower: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        while lower.len() >= 2 && orient(pts[lower[lower.len() - 2]], pts[lower[lower.len() - 1]], pts[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for i in (0..pts.len()).rev() {
        while upper.len() >= 2 && orient(pts[upper[upper.len() - 2]], pts[upper[upper.len() - 1]], pts[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Convex hull, counter-clockwise, without collinear vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let pts = sorted_unique(points);
    monotone_chain(&pts).into_iter().map(|i| pts[i]).collect()
}

pub fn concave_hull(points: &[Point], params: &HullParams) -> Result<Polygon> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("hull input must be finite"));
    }
    let pts = sorted_unique(points);
    if pts.is_empty() {
        return Err(Error::invalid("cannot build a hull of zero points"));
    }
    let mut ring = monotone_chain(&pts);
    if ring.len() < 3 {
        return Ok(buffered(&pts, params.degenerate_buffer));
    }

    let mut on_ring = vec![false; pts.len()];
    for &i in &ring {
        on_ring[i] = true;
    }
    let mut i = 0;
    while i < ring.len() {
        let n = ring.len();
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if pts[a].dist(pts[b]) > params.length_threshold {
            if let Some(k) = dig(&pts, &ring, &on_ring, i, params.concavity) {
                ring.insert(i + 1, k);
                on_ring[k] = true;
                continue;
            }
        }
        i += 1;
    }

    Ok(Polygon::new(drop_collinear(ring.into_iter().map(|i| pts[i]).collect())))
}

/// Candidates tried per edge, nearest first.
const DIG_CANDIDATES: usize = 16;

fn dig(pts: &[Point], ring: &[usize], on_ring: &[bool], edge: usize, concavity: f64) -> Option<usize> {
    let n = ring.len();
    let pa = pts[ring[edge]];
    let pb = pts[ring[(edge + 1) % n]];
    let prev = pts[ring[(edge + n - 1) % n]];
    let next = pts[ring[(edge + 2) % n]];
    let len = pa.dist(pb);

    let mut cands: Vec<(f64, f64, usize)> = Vec::new();
    for (k, &p) in pts.iter().enumerate() {
        if on_ring[k] || orient(pa, pb, p) < 0.0 {
            continue;
        }
        let d = point_segment_distance(p, pa, pb);
        if d > point_segment_distance(p, prev, pa) || d > point_segment_distance(p, pb, next) {
            continue;
        }
        let dd = p.dist(pa).min(p.dist(pb));
        if d == 0.0 {
            // A point on the edge splits it without changing the ring's shape.
            cands.push((d, dd, k));
        } else if dd > 0.0 && len / dd > concavity {
            cands.push((d, dd, k));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    cands
        .into_iter()
        .take(DIG_CANDIDATES)
        .find(|&(d, _, k)| d == 0.0 || dig_is_clean(pts, ring, edge, k))
        .map(|(_, _, k)| k)
}

/// Whether replacing the edge at `edge` by a detour through `k` keeps every
/// point inside and the ring simple.
fn dig_is_clean(pts: &[Point], ring: &[usize], edge: usize, k: usize) -> bool {
    let n = ring.len();
    let pa = pts[ring[edge]];
    let pb = pts[ring[(edge + 1) % n]];
    let pk = pts[k];
    for (q_idx, &q) in pts.iter().enumerate() {
        if q_idx == k || q == pa || q == pb {
            continue;
        }
        let s1 = orient(pa, pb, q);
        if s1 == 0.0 {
            if point_segment_distance(q, pa, pb) == 0.0 {
                return false;
            }
            continue;
        }
        if s1 > 0.0 && orient(pb, pk, q) > 0.0 && orient(pk, pa, q) > 0.0 {
            return false;
        }
    }
    for j in 0..n {
        if j == edge {
            continue;
        }
        let (u, v) = (pts[ring[j]], pts[ring[(j + 1) % n]]);
        for (s, t) in [(pa, pk), (pk, pb)] {
            if edges_conflict(s, t, u, v) {
                return false;
            }
        }
    }
    true
}

/// Whether segments `st` and `uv` meet anywhere other than at one shared
/// endpoint.
fn edges_conflict(s: Point, t: Point, u: Point, v: Point) -> bool {
    let shared = [(s, u), (s, v), (t, u), (t, v)].iter().filter(|(x, y)| x == y).count();
    match shared {
        0 => segments_intersect(s, t, u, v),
        1 => {
            let w = if s == u || s == v { s } else { t };
            let other_new = if w == s { t } else { s };
            let other_old = if w == u { v } else { u };
            point_segment_distance(other_new, u, v) == 0.0 || point_segment_distance(other_old, s, t) == 0.0
        }
        _ => true,
    }
}

fn drop_collinear(vertices: Vec<Point>) -> Vec<Point> {
    let mut out = vertices;
    let mut changed = true;
    while changed && out.len() > 3 {
        changed = false;
        let n = out.len();
        for i in 0..n {
            let (p, c, q) = (out[(i + n - 1) % n], out[i], out[(i + 1) % n]);
            if orient(p, c, q) == 0.0 {
                out.remove(i);
                changed = true;
                break;
            }
        }
    }
    out
}

/// Counter-clockwise rectangle around a point or a segment.
fn buffered(pts: &[Point], b: f64) -> Polygon {
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let len = first.dist(last);
    let (u, nrm) = if len > 0.0 {
        let u = (last - first) * (1.0 / len);
        (u, Point::new(-u.y, u.x))
    } else {
        (Point::new(1.0, 0.0), Point::new(0.0, 1.0))
    };
    let lo = first - u * b;
    let hi = last + u * b;
    let ring = Polygon::new(vec![lo - nrm * b, hi - nrm * b, hi + nrm * b, lo + nrm * b]);
    if ring.is_ccw() {
        ring
    } else {
        ring.reversed()
    }
}
