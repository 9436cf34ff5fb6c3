//! Seeded band-obstacle regression suite.
//!
//! Each case is a 40x40 terrain with a low band across the middle and a
//! gap on one side; the robot starts south of the band with the goal north
//! of it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use saegt::gp::Hyperparams;
use saegt::grid::{Grid, Point};
use saegt::sim::{generate, GoalPoint, RunConfig, StartRegion, TerrainGrid, TerrainSpec};

pub const SIZE: usize = 40;
pub const LOW: f64 = 500.0;
pub const HIGH: f64 = 1500.0;
/// Ramp width; the terrain slope is (HIGH - LOW) / RAMP = 80, below L.
pub const RAMP: f64 = 12.5;
pub const LIPSCHITZ: f64 = 100.0;
pub const THRESHOLD: f64 = 1000.0;
pub const BETA: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    pub config: RunConfig,
    pub terrain: TerrainGrid,
}

/// Band geometry drawn from `seed`: returns `(x0, x1, y0, y1)`.
fn band_layout(seed: u64) -> (f64, f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba4d);
    let n = SIZE as f64;
    let y0 = rng.random_range(15.0..19.0);
    let thickness = rng.random_range(3.0..6.0);
    let gap = rng.random_range(12.0..16.0);
    if rng.random_bool(0.5) {
        (0.0, n - gap, y0, y0 + thickness)
    } else {
        (gap, n, y0, y0 + thickness)
    }
}

pub fn base_config(seed: u64) -> RunConfig {
    RunConfig {
        terrain: format!("band_{seed:03}.grid").into(),
        seed,
        max_iterations: 400,
        beta: BETA,
        lipschitz: LIPSCHITZ,
        threshold: THRESHOLD,
        noise_sd: None,
        bootstrap_samples: 5,
        snapshot_every: 25,
        max_reselect: 3,
        gp: Hyperparams::new(1e6, 5.0, 100.0).expect("constant hyperparameters are valid"),
        start: StartRegion { x: 20.5, y: 5.5, radius: 3.0 },
        goal: Some(GoalPoint { x: 20.5, y: 35.5 }),
        planner: Default::default(),
        geometry: Default::default(),
        navigator: Default::default(),
    }
}

pub fn band_terrain(seed: u64) -> TerrainGrid {
    band_terrain_with_ramp(seed, RAMP)
}

pub fn band_terrain_with_ramp(seed: u64, ramp: f64) -> TerrainGrid {
    let (x0, x1, y0, y1) = band_layout(seed);
    let grid = Grid::new(SIZE, SIZE, 1.0, Point::default()).expect("constant grid is valid");
    let spec = TerrainSpec::Band { low: LOW, high: HIGH, x0, x1, y0, y1, ramp };
    generate(grid, &spec, None).expect("band parameters respect their own bound")
}

pub fn band_case(seed: u64) -> Case {
    Case { name: format!("band_{seed:03}"), config: base_config(seed), terrain: band_terrain(seed) }
}

/// Cases for seeds `0..count`.
pub fn band_suite(count: u64) -> Vec<Case> {
    (0..count).map(band_case).collect()
}

/// Applies `f` to every item on the rayon pool, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}
