//! Planar points, the discretization grid and cell sets over it.
//!
//! Cells are addressed by a row-major index: `index = row * width + col`,
//! with row 0 the southernmost row and column 0 the westernmost column. All
//! tie-breaking in the crate uses this index.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        (self - other).norm_sq()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Regular grid of square cells covering an axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    /// Cell side length.
    pub resolution: f64,
    /// South-west corner of cell 0.
    pub origin: Point,
}

impl Grid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Point) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("grid must be non-empty, got {width}x{height}")));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::invalid(format!("grid resolution must be positive, got {resolution}")));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(Grid { width, height, resolution, origin })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col < self.width && row < self.height);
        row * self.width + col
    }

    pub fn col_row(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn cell_center(&self, index: usize) -> Point {
        let (col, row) = self.col_row(index);
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.cell_center(i)).collect()
    }

    /// Extent as `(min, max)` corners.
    pub fn extent(&self) -> (Point, Point) {
        let max = Point::new(
            self.origin.x + self.width as f64 * self.resolution,
            self.origin.y + self.height as f64 * self.resolution,
        );
        (self.origin, max)
    }

    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = self.extent();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Cell containing `p`. Points on the outer boundary belong to the edge
    /// cells; points outside the extent have no cell.
    pub fn cell_at(&self, p: Point) -> Option<usize> {
        if !p.is_finite() || !self.contains(p) {
            return None;
        }
        let col = (((p.x - self.origin.x) / self.resolution).floor() as usize).min(self.width - 1);
        let row = (((p.y - self.origin.y) / self.resolution).floor() as usize).min(self.height - 1);
        Some(self.index(col, row))
    }

    /// Cells whose centers lie within `radius` of `center`.
    pub fn disk(&self, center: Point, radius: f64) -> Vec<usize> {
        let r_sq = radius * radius;
        (0..self.len())
            .filter(|&i| self.cell_center(i).dist_sq(center) <= r_sq + 1e-12 * self.resolution)
            .collect()
    }
}

/// Boolean membership mask over the cells of a grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellSet {
    mask: Vec<bool>,
    count: usize,
}

impl CellSet {
    pub fn empty(len: usize) -> Self {
        CellSet { mask: vec![false; len], count: 0 }
    }

    pub fn full(len: usize) -> Self {
        CellSet { mask: vec![true; len], count: len }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = CellSet::empty(len);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let count = mask.iter().filter(|&&b| b).count();
        CellSet { mask, count }
    }

    /// Number of cells in the underlying grid, not the number of members.
    pub fn capacity(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let slot = &mut self.mask[i];
        if *slot {
            false
        } else {
            *slot = true;
            self.count += 1;
            true
        }
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let slot = &mut self.mask[i];
        if *slot {
            *slot = false;
            self.count -= 1;
            true
        } else {
            false
        }
    }

    /// Members in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.mask.len() == other.mask.len()
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}
