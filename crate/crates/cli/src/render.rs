//! Snapshot rasterization.
//!
//! Layers, bottom to top: ground truth (only with a terrain) or a neutral
//! backdrop, obstacles, safe cells, frontier cells, local free space, then
//! the goal, subgoal and robot markers. North is up.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use saegt::geometry::Polygon;
use saegt::grid::{Grid, Point};
use saegt::sim::{list_snapshots, read_snapshot, Snapshot, TerrainGrid};
use sha2::{Digest, Sha256};

/// Pixels per cell edge.
pub const SUPERSAMPLE: u32 = 4;

pub const SAFE_TRUTH: Rgb<u8> = Rgb([255, 255, 255]);
pub const LOW_TRUTH: Rgb<u8> = Rgb([128, 128, 128]);
pub const UNKNOWN: Rgb<u8> = Rgb([236, 232, 220]);
pub const OBSTACLE: Rgb<u8> = Rgb([0, 0, 0]);
pub const LOCAL: Rgb<u8> = Rgb([0, 170, 0]);
pub const SAFE_SET: Rgb<u8> = Rgb([173, 216, 230]);
pub const FRONTIER: Rgb<u8> = Rgb([255, 0, 0]);
pub const SUBGOAL: Rgb<u8> = Rgb([128, 0, 128]);
pub const GOAL: Rgb<u8> = Rgb([0, 0, 139]);
pub const ROBOT: Rgb<u8> = Rgb([255, 140, 0]);

/// Ground truth to draw under the robot's view.
#[derive(Clone, Copy)]
pub struct Truth<'a> {
    pub terrain: &'a TerrainGrid,
    pub threshold: f64,
}

struct Canvas {
    img: RgbImage,
    origin: Point,
    /// World units per pixel.
    px: f64,
}

impl Canvas {
    fn new(grid: &Grid, fill: Rgb<u8>) -> Self {
        let w = grid.width as u32 * SUPERSAMPLE;
        let h = grid.height as u32 * SUPERSAMPLE;
        Canvas { img: RgbImage::from_pixel(w, h, fill), origin: grid.origin, px: grid.resolution / SUPERSAMPLE as f64 }
    }

    fn center(&self, x: u32, y: u32) -> Point {
        let h = self.img.height();
        Point::new(self.origin.x + (x as f64 + 0.5) * self.px, self.origin.y + ((h - 1 - y) as f64 + 0.5) * self.px)
    }

    /// Pixel range covering world box `[lo, hi]`, clamped to the image.
    fn span(&self, lo: Point, hi: Point) -> (u32, u32, u32, u32) {
        let (w, h) = (self.img.width() as f64, self.img.height() as f64);
        let fx = |v: f64| ((v - self.origin.x) / self.px).floor().clamp(0.0, w) as u32;
        let fy = |v: f64| (h - (v - self.origin.y) / self.px).floor().clamp(0.0, h) as u32;
        let x0 = fx(lo.x);
        let x1 = (fx(hi.x) + 1).min(self.img.width());
        let y0 = fy(hi.y);
        let y1 = (fy(lo.y) + 1).min(self.img.height());
        (x0, x1, y0, y1)
    }

    fn paint(&mut self, lo: Point, hi: Point, mut color: impl FnMut(Point, Rgb<u8>) -> Option<Rgb<u8>>) {
        let (x0, x1, y0, y1) = self.span(lo, hi);
        for y in y0..y1 {
            for x in x0..x1 {
                let p = self.center(x, y);
                let old = *self.img.get_pixel(x, y);
                if let Some(c) = color(p, old) {
                    self.img.put_pixel(x, y, c);
                }
            }
        }
    }

    fn cells(&mut self, grid: &Grid, cells: impl Iterator<Item = usize>, color: Rgb<u8>) {
        let s = SUPERSAMPLE;
        let h = self.img.height();
        for c in cells {
            let (col, row) = grid.col_row(c);
            let x0 = col as u32 * s;
            let y0 = h - (row as u32 + 1) * s;
            for y in y0..y0 + s {
                for x in x0..x0 + s {
                    self.img.put_pixel(x, y, color);
                }
            }
        }
    }

    fn disk(&mut self, c: Point, r: f64, color: Rgb<u8>) {
        let r = r.max(1.5 * self.px);
        let d = Point::new(r, r);
        self.paint(c - d, c + d, |p, _| (p.dist(c) <= r).then_some(color));
    }
}

fn blend(a: Rgb<u8>, b: Rgb<u8>, t: f64) -> Rgb<u8> {
    let mix = |x: u8, y: u8| (x as f64 * (1.0 - t) + y as f64 * t).round() as u8;
    Rgb([mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])])
}

fn bbox(poly: &Polygon) -> (Point, Point) {
    let r = poly.bbox();
    (r.min, r.max)
}

/// Draws one snapshot. With `truth`, cells are white when at or above the
/// threshold and gray below it.
pub fn render_snapshot(grid: &Grid, snap: &Snapshot, truth: Option<Truth<'_>>) -> anyhow::Result<RgbImage> {
    let mut cv = Canvas::new(grid, UNKNOWN);
    if let Some(t) = truth {
        anyhow::ensure!(t.terrain.grid == *grid, "terrain grid does not match the snapshot grid");
        let low: Vec<usize> = (0..grid.len()).filter(|&i| t.terrain.value(i) < t.threshold).collect();
        cv.cells(grid, 0..grid.len(), SAFE_TRUTH);
        cv.cells(grid, low.into_iter(), LOW_TRUTH);
    }
    for o in &snap.obstacles {
        let (lo, hi) = bbox(&o.exterior);
        cv.paint(lo, hi, |p, _| o.contains(p).then_some(OBSTACLE));
    }
    cv.cells(grid, snap.safe.iter(), SAFE_SET);
    cv.cells(grid, snap.frontier.iter(), FRONTIER);
    if let Some(local) = &snap.local {
        let (lo, hi) = bbox(local);
        let edge = 0.75 * cv.px;
        cv.paint(lo, hi, |p, old| {
            if local.boundary_distance(p) <= edge {
                Some(LOCAL)
            } else if local.contains(p) {
                Some(blend(old, LOCAL, 0.35))
            } else {
                None
            }
        });
    }
    let res = grid.resolution;
    if let Some(g) = snap.goal {
        cv.disk(g, 1.2 * res, GOAL);
    }
    if let Some(s) = snap.subgoal {
        cv.disk(s, 0.8 * res, SUBGOAL);
    }
    cv.disk(snap.robot, 0.5 * res, ROBOT);
    Ok(cv.img)
}

/// SHA-256 over the dimensions and raw RGB bytes, as lowercase hex.
pub fn image_digest(img: &RgbImage) -> String {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    h.update(img.as_raw());
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// `k` indices spread evenly over `0..n`, first and last included.
pub fn pick_frames(n: usize, k: usize) -> Vec<usize> {
    if k == 0 || n == 0 {
        return Vec::new();
    }
    if k >= n {
        return (0..n).collect();
    }
    if k == 1 {
        return vec![n - 1];
    }
    let mut out: Vec<usize> = (0..k).map(|i| (i * (n - 1) + (k - 1) / 2) / (k - 1)).collect();
    out.dedup();
    out
}

#[derive(Debug, Default)]
pub struct RenderReport {
    /// Written image and its digest.
    pub written: Vec<(PathBuf, String)>,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Renders every snapshot under `root` (or `root` itself when it is a
/// snapshot) into `out_dir/<snapshot name>.png`. `frames` keeps that many
/// evenly spaced snapshots. Unreadable snapshots are skipped.
pub fn render_dir(root: &Path, out_dir: &Path, truth: Option<Truth<'_>>, frames: Option<usize>) -> anyhow::Result<RenderReport> {
    let mut dirs = if root.join("lower.grid").is_file() { vec![root.to_path_buf()] } else { list_snapshots(root)? };
    if let Some(k) = frames {
        dirs = pick_frames(dirs.len(), k).into_iter().map(|i| dirs[i].clone()).collect();
    }
    std::fs::create_dir_all(out_dir).map_err(|e| anyhow::anyhow!("{}: {e}", out_dir.display()))?;
    let mut report = RenderReport::default();
    for dir in dirs {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "snapshot".into());
        let drawn = read_snapshot(&dir).map_err(anyhow::Error::from).and_then(|(grid, snap)| render_snapshot(&grid, &snap, truth));
        match drawn {
            Ok(img) => {
                let path = out_dir.join(format!("{name}.png"));
                img.save(&path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                let digest = image_digest(&img);
                report.written.push((path, digest));
            }
            Err(e) => {
                log::warn!("skipping {}: {e:#}", dir.display());
                report.skipped.push((dir, format!("{e:#}")));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use saegt::geometry::Rect;
    use saegt::grid::CellSet;
    use saegt::planner::Status;

    fn snap(grid: &Grid) -> Snapshot {
        let n = grid.len();
        Snapshot {
            t: 3,
            status: Status::Running,
            robot: Point::new(2.5, 2.5),
            subgoal: Some(Point::new(4.5, 2.5)),
            goal: Some(Point::new(7.5, 7.5)),
            lower: vec![0.0; n],
            upper: vec![0.0; n],
            safe: CellSet::from_indices(n, grid.disk(Point::new(2.5, 2.5), 2.0)),
            frontier: CellSet::empty(n),
            hulls: Vec::new(),
            workspace: Rect { min: grid.origin, max: grid.extent().1 },
            obstacles: Vec::new(),
            local: None,
        }
    }

    fn count(img: &RgbImage, c: Rgb<u8>) -> usize {
        img.pixels().filter(|p| **p == c).count()
    }

    #[test]
    fn empty_frontier_has_no_red() {
        let grid = Grid::new(10, 10, 1.0, Point::default()).unwrap();
        let mut s = snap(&grid);
        let img = render_snapshot(&grid, &s, None).unwrap();
        assert_eq!((img.width(), img.height()), (40, 40));
        assert_eq!(count(&img, FRONTIER), 0);
        assert!(count(&img, SAFE_SET) > 0);
        s.frontier.insert(grid.index(1, 1));
        let img = render_snapshot(&grid, &s, None).unwrap();
        assert_eq!(count(&img, FRONTIER), 16);
    }

    #[test]
    fn north_is_up() {
        let grid = Grid::new(4, 3, 1.0, Point::default()).unwrap();
        let mut s = snap(&grid);
        s.safe = CellSet::from_indices(grid.len(), [grid.index(0, 2)]);
        s.subgoal = None;
        s.goal = None;
        s.robot = Point::new(3.5, 0.5);
        let img = render_snapshot(&grid, &s, None).unwrap();
        assert_eq!(*img.get_pixel(0, 0), SAFE_SET);
        assert_eq!(*img.get_pixel(14, 10), ROBOT);
        assert_eq!(*img.get_pixel(15, 11), UNKNOWN);
    }

    #[test]
    fn ground_truth_only_when_given() {
        let grid = Grid::new(6, 6, 1.0, Point::default()).unwrap();
        let terrain = TerrainGrid::from_fn(grid, |p| if p.x < 3.0 { 1500.0 } else { 500.0 }).unwrap();
        let mut s = snap(&grid);
        s.safe = CellSet::empty(grid.len());
        let bare = render_snapshot(&grid, &s, None).unwrap();
        assert_eq!(count(&bare, SAFE_TRUTH) + count(&bare, LOW_TRUTH), 0);
        let truth = Truth { terrain: &terrain, threshold: 1000.0 };
        let img = render_snapshot(&grid, &s, Some(truth)).unwrap();
        assert_eq!(*img.get_pixel(23, 0), LOW_TRUTH);
        assert_eq!(*img.get_pixel(0, 0), SAFE_TRUTH);
    }

    #[test]
    fn frames_are_spread_evenly() {
        assert_eq!(pick_frames(5, 9), vec![0, 1, 2, 3, 4]);
        assert_eq!(pick_frames(17, 9), vec![0, 2, 4, 6, 8, 10, 12, 14, 16]);
        let f = pick_frames(30, 9);
        assert_eq!((f.len(), f[0], f[8]), (9, 0, 29));
        assert_eq!(pick_frames(4, 1), vec![3]);
    }

    #[test]
    fn digest_changes_with_pixels() {
        let mut img = RgbImage::new(2, 2);
        let a = image_digest(&img);
        img.put_pixel(1, 1, Rgb([1, 0, 0]));
        assert_ne!(a, image_digest(&img));
        assert_eq!(a.len(), 64);
    }
}
