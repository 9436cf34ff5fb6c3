//! Per-cell confidence intervals, safe-set expansion and frontier detection.
//!
//! A cell `x'` becomes safe when some already-safe cell `x` certifies it:
//! `lower(x) − L·‖x − x'‖ ≥ h`. The frontier is the set of safe cells whose
//! optimistic bound could certify at least one cell that is not yet safe.
//!
//! Both scans only visit cells inside each source cell's reach disk of radius
//! `(bound − h) / L`; the predicate itself is evaluated exactly as written,
//! so the result is identical to the all-pairs definition.

use log::debug;

use crate::error::{Error, Result};
use crate::gp::PosteriorField;
use crate::grid::{CellSet, Grid};

/// Stand-in for −∞ in interval bounds.
pub const NEG_INF_SENTINEL: f64 = -f64::MAX;
/// Stand-in for +∞ in interval bounds.
pub const POS_INF_SENTINEL: f64 = f64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceField {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cells where the fresh interval missed the running one entirely, summed
    /// over all updates so far.
    pub inconsistencies: usize,
}

impl ConfidenceField {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// `u − ℓ`; infinite while a side is still a sentinel.
    pub fn width(&self, i: usize) -> f64 {
        let w = self.upper[i] - self.lower[i];
        if self.upper[i] == POS_INF_SENTINEL || self.lower[i] == NEG_INF_SENTINEL {
            f64::INFINITY
        } else {
            w
        }
    }

    /// Mean width over cells with both bounds set; infinite when there are
    /// none.
    pub fn mean_width(&self) -> f64 {
        let (sum, n) = (0..self.len())
            .map(|i| self.width(i))
            .filter(|w| w.is_finite())
            .fold((0.0, 0usize), |(s, n), w| (s + w, n + 1));
        if n == 0 {
            f64::INFINITY
        } else {
            sum / n as f64
        }
    }
}

/// `C₀`: `[h, +∞)` on the initial safe set and `(−∞, +∞)` elsewhere.
pub fn init_confidence(grid: &Grid, s0: &CellSet, h: f64) -> Result<ConfidenceField> {
    if s0.capacity() != grid.len() {
        return Err(Error::invalid("initial safe set does not match the grid"));
    }
    if s0.is_empty() {
        return Err(Error::invalid("initial safe set must be non-empty"));
    }
    if !h.is_finite() {
        return Err(Error::invalid("safety threshold must be finite"));
    }
    let lower = (0..grid.len()).map(|i| if s0.contains(i) { h } else { NEG_INF_SENTINEL }).collect();
    Ok(ConfidenceField { lower, upper: vec![POS_INF_SENTINEL; grid.len()], inconsistencies: 0 })
}

/// Intersects the running intervals with `μ ± √β σ`.
///
/// A cell whose fresh interval does not overlap the running one keeps the
/// running interval and is counted in `inconsistencies`.
pub fn update_confidence(prev: &ConfidenceField, post: &PosteriorField, beta: f64) -> Result<ConfidenceField> {
    if post.len() != prev.len() || post.variances.len() != prev.len() {
        return Err(Error::invalid(format!(
            "posterior covers {} cells but the confidence field has {}",
            post.len(),
            prev.len()
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be a finite non-negative number, got {beta}")));
    }
    let scale = beta.sqrt();
    let mut next = prev.clone();
    let mut missed = 0;
    for i in 0..prev.len() {
        let half = scale * post.variances[i].max(0.0).sqrt();
        let lo = prev.lower[i].max(post.means[i] - half);
        let hi = prev.upper[i].min(post.means[i] + half);
        if lo <= hi {
            next.lower[i] = lo;
            next.upper[i] = hi;
        } else {
            missed += 1;
        }
    }
    if missed > 0 {
        debug!("{missed} cells had an empty confidence intersection");
    }
    next.inconsistencies += missed;
    Ok(next)
}

/// Distance between two cell centers in world units.
pub fn cell_distance(grid: &Grid, a: usize, b: usize) -> f64 {
    let (ac, ar) = grid.col_row(a);
    let (bc, br) = grid.col_row(b);
    let dx = (ac as f64 - bc as f64) * grid.resolution;
    let dy = (ar as f64 - br as f64) * grid.resolution;
    (dx * dx + dy * dy).sqrt()
}

/// Calls `visit` for every cell whose center might lie within `reach` of
/// cell `src`. The box is slightly generous; callers re-check exactly.
fn for_each_in_reach(grid: &Grid, src: usize, reach: f64, mut visit: impl FnMut(usize)) {
    let (col, row) = grid.col_row(src);
    let span = reach / grid.resolution;
    let (c0, c1, r0, r1) = if span.is_finite() && span < grid.width.max(grid.height) as f64 {
        let k = span.floor() as usize + 1;
        (
            col.saturating_sub(k),
            (col + k).min(grid.width - 1),
            row.saturating_sub(k),
            (row + k).min(grid.height - 1),
        )
    } else {
        (0, grid.width - 1, 0, grid.height - 1)
    };
    for r in r0..=r1 {
        for c in c0..=c1 {
            visit(grid.index(c, r));
        }
    }
}

fn reach(bound: f64, lipschitz: f64, h: f64) -> f64 {
    if lipschitz > 0.0 {
        (bound - h) / lipschitz
    } else {
        f64::INFINITY
    }
}

/// Result of one safe-set expansion step.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    pub safe: CellSet,
    /// The literal union was empty and the previous set was kept.
    pub stalled: bool,
}

/// `⋃_{x ∈ S_{t−1}} { x' : ℓ_t(x) − L‖x − x'‖ ≥ h }`.
///
/// An empty union keeps `prev_safe` and sets `stalled`.
pub fn expand_safe(prev_safe: &CellSet, conf: &ConfidenceField, lipschitz: f64, h: f64, grid: &Grid) -> Expansion {
    let safe = expand_safe_literal(prev_safe, conf, lipschitz, h, grid);
    if safe.is_empty() && !prev_safe.is_empty() {
        Expansion { safe: prev_safe.clone(), stalled: true }
    } else {
        Expansion { safe, stalled: false }
    }
}

/// The union without the empty-result fallback.
pub fn expand_safe_literal(
    prev_safe: &CellSet,
    conf: &ConfidenceField,
    lipschitz: f64,
    h: f64,
    grid: &Grid,
) -> CellSet {
    let mut safe = CellSet::empty(grid.len());
    for x in prev_safe.iter() {
        let lo = conf.lower[x];
        if lo < h {
            continue;
        }
        for_each_in_reach(grid, x, reach(lo, lipschitz, h), |y| {
            if !safe.contains(y) && lo - lipschitz * cell_distance(grid, x, y) >= h {
                safe.insert(y);
            }
        });
    }
    safe
}

/// `g_t(x) = |{ x' ∉ S_t : u_t(x) − L‖x − x'‖ ≥ h }|` for `x ∈ S_t`, zero
/// elsewhere.
///
/// For a fixed row offset the condition is monotone in the column offset, so
/// each row contributes one run of columns, counted with per-row prefix sums
/// of the unsafe mask. The condition itself is evaluated exactly as in the
/// all-pairs definition.
pub fn expansion_potential(safe: &CellSet, conf: &ConfidenceField, lipschitz: f64, h: f64, grid: &Grid) -> Vec<u32> {
    let mut potential = vec![0u32; grid.len()];
    if safe.len() == grid.len() {
        return potential;
    }
    let (w, ht) = (grid.width, grid.height);
    let mut prefix = vec![0u32; (w + 1) * ht];
    for r in 0..ht {
        let base = r * (w + 1);
        for c in 0..w {
            prefix[base + c + 1] = prefix[base + c] + u32::from(!safe.contains(grid.index(c, r)));
        }
    }
    let res = grid.resolution;
    for x in safe.iter() {
        let up = conf.upper[x];
        if up < h {
            continue;
        }
        let (col, row) = grid.col_row(x);
        let ok = |dc: usize, dr: usize| {
            let dx = dc as f64 * res;
            let dy = dr as f64 * res;
            up - lipschitz * (dx * dx + dy * dy).sqrt() >= h
        };
        let span = reach(up, lipschitz, h) / res;
        let max_off = if span.is_finite() { (span.floor() as usize + 1).min(w.max(ht)) } else { w.max(ht) };
        let mut count = 0u32;
        let mut run = max_off.min(w - 1);
        for dr in 0..=max_off.min(ht - 1) {
            // Shrinks as dr grows; start from the previous row's run.
            while !ok(run, dr) {
                if run == 0 {
                    break;
                }
                run -= 1;
            }
            if !ok(run, dr) {
                break;
            }
            let lo = col.saturating_sub(run);
            let hi = (col + run).min(w - 1);
            for r in [row.checked_sub(dr), (dr > 0).then_some(row + dr).filter(|&r| r < ht)].into_iter().flatten() {
                let base = r * (w + 1);
                count += prefix[base + hi + 1] - prefix[base + lo];
            }
        }
        potential[x] = count;
    }
    potential
}

/// `{ x ∈ S_t : g_t(x) > 0 }`.
pub fn frontier(safe: &CellSet, potential: &[u32]) -> CellSet {
    CellSet::from_indices(safe.capacity(), safe.iter().filter(|&x| potential.get(x).is_some_and(|&g| g > 0)))
}

/// Safe set, expansion potentials and frontier for one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionState {
    pub safe: CellSet,
    pub frontier: CellSet,
    pub potential: Vec<u32>,
    pub stalled: bool,
}

impl RegionState {
    /// Runs the expansion and frontier steps against an updated confidence field.
    pub fn advance(prev_safe: &CellSet, conf: &ConfidenceField, lipschitz: f64, h: f64, grid: &Grid) -> Self {
        let Expansion { safe, stalled } = expand_safe(prev_safe, conf, lipschitz, h, grid);
        let potential = expansion_potential(&safe, conf, lipschitz, h, grid);
        let frontier = frontier(&safe, &potential);
        RegionState { safe, frontier, potential, stalled }
    }
}
