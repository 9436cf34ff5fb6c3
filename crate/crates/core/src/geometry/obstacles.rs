//! Workspace rectangle and obstacle extraction.

use geo::{Area, BooleanOps, Coord, LineString, MultiPolygon, Polygon as GeoPolygon};
use log::warn;

use crate::error::{Error, Result};
use crate::grid::Point;

use super::{Polygon, Rect, Region};

/// Axis-aligned bounds of all hull vertices, grown by `margin` on each side.
pub fn workspace_bbox(hulls: &[Polygon], margin: f64) -> Result<Rect> {
    if hulls.is_empty() || hulls.iter().all(Polygon::is_empty) {
        return Err(Error::invalid("workspace needs at least one hull"));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::invalid(format!("margin must be finite and non-negative, got {margin}")));
    }
    let mut rect = Rect { min: Point::new(f64::INFINITY, f64::INFINITY), max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY) };
    for v in hulls.iter().flat_map(|h| &h.vertices) {
        rect.min.x = rect.min.x.min(v.x);
        rect.min.y = rect.min.y.min(v.y);
        rect.max.x = rect.max.x.max(v.x);
        rect.max.y = rect.max.y.max(v.y);
    }
    rect.min = rect.min - Point::new(margin, margin);
    rect.max = rect.max + Point::new(margin, margin);
    Ok(rect)
}

/// `workspace ∖ ⋃ hulls` as polygons with holes.
///
/// Coordinates are snapped to a lattice of pitch `snap` first. If the result
/// fails the area check, the difference is retried on a coarser lattice.
pub fn extract_obstacles(workspace: &Rect, hulls: &[Polygon], snap: f64) -> Result<Vec<Region>> {
    let mut pitch = snap;
    for attempt in 0..3 {
        let regions = difference(workspace, hulls, pitch);
        let expected = workspace.area() - union_area(hulls, pitch);
        let got: f64 = regions.iter().map(Region::area).sum();
        let scale = workspace.area().max(f64::MIN_POSITIVE);
        if ((got - expected) / scale).abs() <= 1e-9 {
            return Ok(regions);
        }
        warn!("obstacle extraction attempt {attempt}: area {got} vs expected {expected}");
        pitch *= 1e3;
    }
    Err(Error::Geometry("polygon difference failed the area check after snapping".into()))
}

fn snap_value(v: f64, pitch: f64) -> f64 {
    if pitch > 0.0 {
        (v / pitch).round() * pitch
    } else {
        v
    }
}

fn to_geo(poly: &Polygon, pitch: f64) -> GeoPolygon<f64> {
    let coords: Vec<Coord<f64>> =
        poly.vertices.iter().map(|p| Coord { x: snap_value(p.x, pitch), y: snap_value(p.y, pitch) }).collect();
    GeoPolygon::new(LineString::from(coords), vec![])
}

fn ring_from_geo(ls: &LineString<f64>) -> Polygon {
    let mut pts: Vec<Point> = ls.0.iter().map(|c| Point::new(c.x, c.y)).collect();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    Polygon::new(pts)
}

fn union_area(hulls: &[Polygon], pitch: f64) -> f64 {
    let mut acc = MultiPolygon::<f64>(vec![]);
    for h in hulls {
        acc = acc.union(&MultiPolygon(vec![to_geo(h, pitch)]));
    }
    acc.unsigned_area()
}

fn difference(workspace: &Rect, hulls: &[Polygon], pitch: f64) -> Vec<Region> {
    let ws = MultiPolygon(vec![to_geo(&workspace.to_polygon(), pitch)]);
    let holes = MultiPolygon(hulls.iter().map(|h| to_geo(h, pitch)).collect());
    let diff = ws.difference(&holes);
    diff.0
        .iter()
        .map(|p| {
            let mut exterior = ring_from_geo(p.exterior());
            if !exterior.is_ccw() {
                exterior = exterior.reversed();
            }
            let holes = p
                .interiors()
                .iter()
                .map(|ls| {
                    let h = ring_from_geo(ls);
                    if h.is_ccw() {
                        h.reversed()
                    } else {
                        h
                    }
                })
                .collect();
            Region { exterior, holes }
        })
        .filter(|r| r.exterior.len() >= 3)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Polygon {
        Polygon::new(vec![Point::new(x0, y0), Point::new(x0 + s, y0), Point::new(x0 + s, y0 + s), Point::new(x0, y0 + s)])
    }

    #[test]
    fn bbox_with_and_without_margin() {
        let r = workspace_bbox(&[square(0.0, 0.0, 1.0)], 0.0).unwrap();
        assert_eq!((r.min, r.max), (Point::new(0.0, 0.0), Point::new(1.0, 1.0)));
        let r = workspace_bbox(&[square(0.0, 0.0, 1.0)], 0.5).unwrap();
        assert_eq!((r.min, r.max), (Point::new(-0.5, -0.5), Point::new(1.5, 1.5)));
        let r = workspace_bbox(&[square(0.0, 0.0, 1.0), square(4.0, -2.0, 1.0)], 0.0).unwrap();
        assert_eq!((r.min, r.max), (Point::new(0.0, -2.0), Point::new(5.0, 1.0)));
        assert!(workspace_bbox(&[], 0.0).is_err());
    }

    #[test]
    fn hull_filling_workspace_leaves_nothing() {
        let hull = square(0.0, 0.0, 2.0);
        let ws = workspace_bbox(std::slice::from_ref(&hull), 0.0).unwrap();
        let obs = extract_obstacles(&ws, &[hull], 1e-9).unwrap();
        assert!(obs.iter().map(Region::area).sum::<f64>() < 1e-12);
    }

    #[test]
    fn centered_square_becomes_a_hole() {
        let ws = Rect { min: Point::new(0.0, 0.0), max: Point::new(3.0, 3.0) };
        let obs = extract_obstacles(&ws, &[square(1.0, 1.0, 1.0)], 1e-9).unwrap();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].holes.len(), 1);
        assert!(obs[0].exterior.is_ccw());
        assert!(!obs[0].holes[0].is_ccw());
        assert!((obs[0].area() - 8.0).abs() < 1e-9);
        assert!(obs[0].contains(Point::new(0.5, 0.5)));
        assert!(!obs[0].contains(Point::new(1.5, 1.5)));
    }
}
