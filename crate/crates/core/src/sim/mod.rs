//! Simulated terrain, sensor and the full exploration episode.

mod config;
mod episode;
mod output;
pub mod route;
mod terrain;

pub use config::{GoalPoint, PlannerSettings, RunConfig, StartRegion};
pub use episode::{
    bootstrap, measure, run_episode, run_episode_on, sample_in_disk, start_cells, Bootstrap, EpisodeMetrics,
    EpisodeOutput, IterationRecord, Simulation, Snapshot, TrajectoryPoint,
};
pub use output::{
    geometry_text, list_snapshots, metrics_csv, read_snapshot, snapshot_dir_name, summary_text, trajectory_csv,
    write_episode, write_snapshot, METRICS_HEADER, TRAJECTORY_HEADER,
};
pub use terrain::{
    fmt_f64, format_grid, generate, load_terrain, meta_path, parse_grid, save_terrain, TerrainGrid, TerrainSpec,
};
