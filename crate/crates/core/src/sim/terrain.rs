//! Ground-truth terrain: storage, text format and synthetic generators.
//!
//! File format: a header line `GRID <width> <height> <resolution> <origin_x>
//! <origin_y>`, then `height` lines of `width` space-separated values, the
//! northernmost row first. Values are written in shortest round-trip form, so
//! save followed by load is bit-identical.
//!
//! A terrain may carry a declared Lipschitz bound, stored next to the file in
//! `<file>.meta` as `lipschitz = <value>`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

#[derive(Clone, Debug, PartialEq)]
pub struct TerrainGrid {
    pub grid: Grid,
    /// Row-major from the southern row, like [`Grid::index`].
    pub values: Vec<f64>,
    pub lipschitz: Option<f64>,
}

impl TerrainGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!("{} values for a {}x{} grid", values.len(), grid.width, grid.height)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("terrain value at cell {i} is not finite")));
        }
        Ok(TerrainGrid { grid, values, lipschitz: None })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = grid.centers().into_iter().map(f).collect();
        TerrainGrid::new(grid, values)
    }

    /// Attaches a declared bound after checking it against adjacent cells.
    pub fn with_lipschitz(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::invalid(format!("Lipschitz bound {bound} must be finite and non-negative")));
        }
        let scanned = self.finite_difference_lipschitz();
        if scanned > bound * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::invalid(format!(
                "terrain varies by up to {scanned} per unit length, above the declared bound {bound}"
            )));
        }
        self.lipschitz = Some(bound);
        Ok(self)
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Bilinear interpolation between cell centers, held constant over the
    /// half-cell border strip.
    pub fn interpolate(&self, p: Point) -> Result<f64> {
        if !self.grid.contains(p) {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        let g = &self.grid;
        let (c0, c1, tx) = axis(p.x - g.origin.x, g.resolution, g.width);
        let (r0, r1, ty) = axis(p.y - g.origin.y, g.resolution, g.height);
        let v = |c, r| self.values[g.index(c, r)];
        let south = v(c0, r0) * (1.0 - tx) + v(c1, r0) * tx;
        let north = v(c0, r1) * (1.0 - tx) + v(c1, r1) * tx;
        Ok(south * (1.0 - ty) + north * ty)
    }

    /// Largest `|f(a) - f(b)| / |a - b|` over 8-neighbour cell pairs.
    pub fn finite_difference_lipschitz(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for row in 0..g.height {
            for col in 0..g.width {
                let a = self.values[g.index(col, row)];
                for (dc, dr) in [(1usize, 0usize), (0, 1), (1, 1)] {
                    if col + dc < g.width && row + dr < g.height {
                        let d = g.resolution * ((dc * dc + dr * dr) as f64).sqrt();
                        worst = worst.max((a - self.values[g.index(col + dc, row + dr)]).abs() / d);
                    }
                }
                if col > 0 && row + 1 < g.height {
                    let d = g.resolution * 2f64.sqrt();
                    worst = worst.max((a - self.values[g.index(col - 1, row + 1)]).abs() / d);
                }
            }
        }
        worst
    }

    /// Cells with value below `h`.
    pub fn unsafe_cells(&self, h: f64) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] < h).collect()
    }
}

/// Lower and upper lattice index along one axis plus the blend weight.
fn axis(offset: f64, resolution: f64, n: usize) -> (usize, usize, f64) {
    let u = (offset / resolution - 0.5).clamp(0.0, (n - 1) as f64);
    let i0 = (u.floor() as usize).min(n.saturating_sub(2));
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, if i1 == i0 { 0.0 } else { u - i0 as f64 })
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Shortest round-trip decimal; exponent form for very large or very small
/// magnitudes so sentinels stay compact.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn format_grid(grid: &Grid, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 8);
    let _ = writeln!(
        out,
        "GRID {} {} {} {} {}",
        grid.width,
        grid.height,
        fmt_f64(grid.resolution),
        fmt_f64(grid.origin.x),
        fmt_f64(grid.origin.y)
    );
    for row in (0..grid.height).rev() {
        for col in 0..grid.width {
            if col > 0 {
                out.push(' ');
            }
            out.push_str(&fmt_f64(values[grid.index(col, row)]));
        }
        out.push('\n');
    }
    out
}

/// Parses the grid text format. `name` is used in error messages.
pub fn parse_grid(text: &str, name: &str) -> Result<(Grid, Vec<f64>)> {
    let err = |line: usize, msg: String| Error::Parse { path: name.to_string(), line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "GRID" {
        return Err(err(hline + 1, "expected `GRID <width> <height> <resolution> <origin_x> <origin_y>`".into()));
    }
    let uint = |s: &str, what: &str| s.parse::<usize>().map_err(|_| err(hline + 1, format!("bad {what} `{s}`")));
    let float = |s: &str, what: &str| s.parse::<f64>().map_err(|_| err(hline + 1, format!("bad {what} `{s}`")));
    let width = uint(fields[1], "width")?;
    let height = uint(fields[2], "height")?;
    let res = float(fields[3], "resolution")?;
    let origin = Point::new(float(fields[4], "origin_x")?, float(fields[5], "origin_y")?);
    let grid = Grid::new(width, height, res, origin).map_err(|e| err(hline + 1, e.to_string()))?;

    let mut values = vec![0.0; grid.len()];
    let mut rows = 0;
    for (lno, line) in lines {
        if rows == height {
            return Err(err(lno + 1, format!("more than {height} data rows")));
        }
        let row = height - 1 - rows;
        let mut count = 0;
        for tok in line.split_whitespace() {
            if count == width {
                return Err(err(lno + 1, format!("more than {width} values in row")));
            }
            let v: f64 = tok.parse().map_err(|_| err(lno + 1, format!("bad value `{tok}`")))?;
            if !v.is_finite() {
                return Err(err(lno + 1, format!("value `{tok}` is not finite")));
            }
            values[grid.index(count, row)] = v;
            count += 1;
        }
        if count != width {
            return Err(err(lno + 1, format!("expected {width} values, found {count}")));
        }
        rows += 1;
    }
    if rows != height {
        let last = text.lines().count();
        return Err(err(last + 1, format!("expected {height} data rows, found {rows}")));
    }
    Ok((grid, values))
}

pub fn save_terrain(terrain: &TerrainGrid, path: &Path) -> Result<()> {
    fs::write(path, format_grid(&terrain.grid, &terrain.values)).map_err(|e| Error::io(path, e))?;
    let meta = meta_path(path);
    match terrain.lipschitz {
        Some(l) => fs::write(&meta, format!("lipschitz = {l}\n")).map_err(|e| Error::io(&meta, e))?,
        None if meta.exists() => fs::remove_file(&meta).map_err(|e| Error::io(&meta, e))?,
        None => {}
    }
    Ok(())
}

pub fn load_terrain(path: &Path) -> Result<TerrainGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (grid, values) = parse_grid(&text, &path.display().to_string())?;
    let mut terrain = TerrainGrid::new(grid, values)?;
    let meta = meta_path(path);
    if meta.exists() {
        let body = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
        terrain.lipschitz = parse_meta(&body, &meta.display().to_string())?;
    }
    Ok(terrain)
}

fn parse_meta(body: &str, name: &str) -> Result<Option<f64>> {
    let mut bound = None;
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { path: name.to_string(), line: i + 1, msg };
        let (k, v) = line.split_once('=').ok_or_else(|| parse_err("expected `key = value`".into()))?;
        if k.trim() == "lipschitz" {
            let v = v.trim();
            bound = Some(v.parse::<f64>().map_err(|_| parse_err(format!("bad bound `{v}`")))?);
        }
    }
    Ok(bound)
}

/// Synthetic terrain recipes. Coordinates are in world units; values are
/// evaluated at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub enum TerrainSpec {
    Uniform {
        value: f64,
    },
    /// `base + slope_x * x + slope_y * y`.
    Ramp {
        base: f64,
        slope_x: f64,
        slope_y: f64,
    },
    /// A low rectangle `[x0, x1] x [y0, y1]` (leave part of the width open
    /// for a gap), rising linearly to `high` over `ramp` units.
    Band {
        low: f64,
        high: f64,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        ramp: f64,
    },
    /// `count` low disks with random centers and radii. The listed keep-out
    /// disks stay at `high`.
    Blobs {
        low: f64,
        high: f64,
        count: usize,
        min_radius: f64,
        max_radius: f64,
        ramp: f64,
        keep_out: Vec<(Point, f64)>,
        seed: u64,
    },
}

impl TerrainSpec {
    /// Lipschitz bound that holds by construction.
    pub fn declared_lipschitz(&self) -> f64 {
        match *self {
            TerrainSpec::Uniform { .. } => 0.0,
            TerrainSpec::Ramp { slope_x, slope_y, .. } => slope_x.hypot(slope_y),
            TerrainSpec::Band { low, high, ramp, .. } | TerrainSpec::Blobs { low, high, ramp, .. } => {
                (high - low).abs() / ramp
            }
        }
    }

    fn check(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be finite")))
            }
        };
        match self {
            TerrainSpec::Uniform { value } => finite(*value, "value"),
            TerrainSpec::Ramp { base, slope_x, slope_y } => {
                finite(*base, "base")?;
                finite(*slope_x, "slope_x")?;
                finite(*slope_y, "slope_y")
            }
            TerrainSpec::Band { low, high, x0, x1, y0, y1, ramp } => {
                for (v, n) in [(low, "low"), (high, "high"), (x0, "x0"), (x1, "x1"), (y0, "y0"), (y1, "y1")] {
                    finite(*v, n)?;
                }
                if !(ramp.is_finite() && *ramp > 0.0) {
                    return Err(Error::invalid("ramp must be positive"));
                }
                if x1 < x0 || y1 < y0 {
                    return Err(Error::invalid("band corners are out of order"));
                }
                Ok(())
            }
            TerrainSpec::Blobs { low, high, min_radius, max_radius, ramp, .. } => {
                finite(*low, "low")?;
                finite(*high, "high")?;
                if !(ramp.is_finite() && *ramp > 0.0) {
                    return Err(Error::invalid("ramp must be positive"));
                }
                if !(*min_radius >= 0.0 && max_radius >= min_radius && max_radius.is_finite()) {
                    return Err(Error::invalid("blob radii must satisfy 0 <= min_radius <= max_radius"));
                }
                Ok(())
            }
        }
    }
}

fn blend(low: f64, high: f64, dist: f64, ramp: f64) -> f64 {
    low + (high - low) * (dist / ramp).min(1.0)
}

/// Builds a terrain from `spec`. With `declared` set, that bound is checked
/// and recorded; otherwise the construction bound is.
pub fn generate(grid: Grid, spec: &TerrainSpec, declared: Option<f64>) -> Result<TerrainGrid> {
    spec.check()?;
    let terrain = match spec {
        TerrainSpec::Uniform { value } => TerrainGrid::from_fn(grid, |_| *value)?,
        TerrainSpec::Ramp { base, slope_x, slope_y } => {
            TerrainGrid::from_fn(grid, |p| base + slope_x * p.x + slope_y * p.y)?
        }
        &TerrainSpec::Band { low, high, x0, x1, y0, y1, ramp } => TerrainGrid::from_fn(grid, |p| {
            let dx = (x0 - p.x).max(p.x - x1).max(0.0);
            let dy = (y0 - p.y).max(p.y - y1).max(0.0);
            blend(low, high, dx.hypot(dy), ramp)
        })?,
        TerrainSpec::Blobs { low, high, count, min_radius, max_radius, ramp, keep_out, seed } => {
            let blobs = place_blobs(&grid, *count, (*min_radius, *max_radius), *ramp, keep_out, *seed)?;
            TerrainGrid::from_fn(grid, |p| {
                let d = blobs.iter().map(|&(c, r)| (p.dist(c) - r).max(0.0)).fold(f64::INFINITY, f64::min);
                blend(*low, *high, d, *ramp)
            })?
        }
    };
    terrain.with_lipschitz(declared.unwrap_or_else(|| spec.declared_lipschitz()))
}

fn place_blobs(
    grid: &Grid,
    count: usize,
    (min_r, max_r): (f64, f64),
    ramp: f64,
    keep_out: &[(Point, f64)],
    seed: u64,
) -> Result<Vec<(Point, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = grid.extent();
    let mut blobs = Vec::with_capacity(count);
    let mut attempts = 0;
    while blobs.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 1) {
            return Err(Error::invalid("could not place blobs clear of the keep-out disks"));
        }
        let c = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        let r = if max_r > min_r { rng.random_range(min_r..=max_r) } else { min_r };
        if keep_out.iter().all(|&(k, kr)| c.dist(k) >= r + ramp + kr) {
            blobs.push((c, r));
        }
    }
    Ok(blobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize) -> Grid {
        Grid::new(w, h, 1.0, Point::default()).unwrap()
    }

    #[test]
    fn text_round_trip_is_bit_identical() {
        let g = Grid::new(3, 2, 0.5, Point::new(-1.25, 7.0)).unwrap();
        let vals = vec![0.1, 1.0 / 3.0, -2e-300, 1e300, 1500.0, std::f64::consts::PI];
        let text = format_grid(&g, &vals);
        let (g2, v2) = parse_grid(&text, "t").unwrap();
        assert_eq!(g2, g);
        assert!(vals.iter().zip(&v2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn north_row_comes_first() {
        let g = grid(2, 2);
        let text = format_grid(&g, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(text, "GRID 2 2 1 0 0\n3 4\n1 2\n");
    }

    #[test]
    fn malformed_files_report_lines() {
        let cases = [
            ("GRID 2 2 1 0 0\n1 2\n3\n", 3),
            ("GRID 2 2 1 0 0\n1 2\n", 3),
            ("GRID 2 2 1 0 0\n1 2\n3 4\n5 6\n", 4),
            ("GRID 2 x 1 0 0\n", 1),
            ("GRID 2 2 1 0 0\n1 nope\n3 4\n", 2),
        ];
        for (text, line) in cases {
            match parse_grid(text, "f") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn interpolation_hits_centers_and_blends_between() {
        let t = TerrainGrid::new(grid(2, 1), vec![10.0, 20.0]).unwrap();
        assert_eq!(t.interpolate(Point::new(0.5, 0.5)).unwrap(), 10.0);
        assert_eq!(t.interpolate(Point::new(1.5, 0.5)).unwrap(), 20.0);
        assert_eq!(t.interpolate(Point::new(1.0, 0.2)).unwrap(), 15.0);
        assert_eq!(t.interpolate(Point::new(0.1, 0.9)).unwrap(), 10.0);
        assert!(matches!(t.interpolate(Point::new(2.5, 0.5)), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn generators_match_their_bounds() {
        let u = generate(grid(5, 5), &TerrainSpec::Uniform { value: 1500.0 }, None).unwrap();
        assert!(u.values.iter().all(|&v| v == 1500.0));

        let r = generate(grid(20, 4), &TerrainSpec::Ramp { base: 1000.0, slope_x: 1.0, slope_y: 0.0 }, None).unwrap();
        assert!((r.finite_difference_lipschitz() - 1.0).abs() < 1e-12);
        assert_eq!(r.lipschitz, Some(1.0));

        let band = TerrainSpec::Band { low: 500.0, high: 1500.0, x0: 0.0, x1: 14.0, y0: 9.0, y1: 11.0, ramp: 10.0 };
        let b = generate(grid(20, 20), &band, None).unwrap();
        assert_eq!(b.lipschitz, Some(100.0));
        assert!(b.finite_difference_lipschitz() <= 100.0 + 1e-9);
        assert_eq!(b.value(b.grid.index(3, 10)), 500.0);
        assert!(generate(grid(20, 20), &band, Some(50.0)).is_err());
    }

    #[test]
    fn blobs_are_seeded() {
        let spec = |seed| TerrainSpec::Blobs {
            low: 500.0,
            high: 1500.0,
            count: 4,
            min_radius: 1.0,
            max_radius: 3.0,
            ramp: 5.0,
            keep_out: vec![(Point::new(2.0, 2.0), 3.0)],
            seed,
        };
        let a = generate(grid(30, 30), &spec(9), None).unwrap();
        let b = generate(grid(30, 30), &spec(9), None).unwrap();
        let c = generate(grid(30, 30), &spec(10), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.value(a.grid.index(2, 2)), 1500.0);
    }
}
