//! Command-line front end: run and explore episodes, generate terrains,
//! render snapshots and check metrics against golden files.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | goal reached (`run`), frontier exhausted (`explore`), or success |
//! | 1 | error |
//! | 2 | frontier exhausted before the goal (`run`) |
//! | 3 | iteration cap hit |
//! | 4 | `verify` found differences |
//! | 64 | usage error: bad flag, bad config key or value |

pub mod config;
pub mod render;
pub mod suite;
pub mod verify;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use saegt::grid::{Grid, Point};
use saegt::planner::{Mode, Status};
use saegt::sim::{generate, load_terrain, run_episode_on, save_terrain, write_episode, EpisodeOutput, RunConfig, TerrainSpec};

pub use config::UsageError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FRONTIER_EXHAUSTED: i32 = 2;
pub const EXIT_MAX_ITERATIONS: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Output directory when `--out` is absent. Falls back to `./out`.
pub const OUT_DIR_ENV: &str = "SAEGT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "saegt", version, about = "Safe exploration over grid terrains")]
pub struct Cli {
    /// More log output (repeatable). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a goal-directed episode.
    Run(RunArgs),
    /// Run a goal-free episode and report the final safe fraction.
    Explore(RunArgs),
    /// Write a synthetic terrain file and its Lipschitz sidecar.
    GenTerrain(GenArgs),
    /// Rasterize snapshots to PNG.
    Render(RenderArgs),
    /// Compare a metrics CSV against a golden copy.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// TOML run configuration.
    pub config: PathBuf,
    /// `key=value` applied after loading; dotted keys reach sections.
    #[arg(short = 'O', long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory [env: SAEGT_OUT_DIR, default: out].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Replaces the configured seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Seed range `A..B` or `A..=B`, run in parallel into `seed_<n>/`.
    #[arg(long, value_parser = parse_seed_range)]
    pub seeds: Option<SeedRange>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedRange {
    pub start: u64,
    /// Exclusive.
    pub end: u64,
}

pub fn parse_seed_range(s: &str) -> Result<SeedRange, String> {
    let num = |v: &str| v.trim().parse::<u64>().map_err(|_| format!("`{v}` is not a seed"));
    let (start, end) = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?, num(b)?.checked_add(1).ok_or("range end overflows")?)
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?, num(b)?)
    } else {
        return Err("expected A..B or A..=B".into());
    };
    if end <= start {
        return Err(format!("empty seed range `{s}`"));
    }
    Ok(SeedRange { start, end })
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Terrain file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub origin_x: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub origin_y: f64,
    /// Bound to check and record instead of the construction bound.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[command(subcommand)]
    pub kind: TerrainKind,
}

#[derive(Subcommand, Debug)]
pub enum TerrainKind {
    Uniform {
        #[arg(long, allow_negative_numbers = true)]
        value: f64,
    },
    /// base + slope_x * x + slope_y * y
    Ramp {
        #[arg(long, allow_negative_numbers = true)]
        base: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        slope_x: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        slope_y: f64,
    },
    /// Low rectangle [x0,x1]x[y0,y1] ramping to `high`; leave a gap in x.
    Band {
        #[arg(long, default_value_t = 500.0)]
        low: f64,
        #[arg(long, default_value_t = 1500.0)]
        high: f64,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true)]
        x1: f64,
        #[arg(long, allow_negative_numbers = true)]
        y0: f64,
        #[arg(long, allow_negative_numbers = true)]
        y1: f64,
        #[arg(long, default_value_t = 10.0)]
        ramp: f64,
    },
    /// Random low disks.
    Blobs {
        #[arg(long, default_value_t = 500.0)]
        low: f64,
        #[arg(long, default_value_t = 1500.0)]
        high: f64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        min_radius: f64,
        #[arg(long)]
        max_radius: f64,
        #[arg(long, default_value_t = 10.0)]
        ramp: f64,
        /// `x,y,r` disk kept free of blobs (repeatable).
        #[arg(long, value_parser = parse_disk)]
        keep_out: Vec<(f64, f64, f64)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_disk(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, r] => Ok((x, y, r)),
        _ => Err("expected x,y,r".into()),
    }
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// A snapshot directory, or a directory of them.
    pub snapshots: PathBuf,
    /// Output directory [env: SAEGT_OUT_DIR, default: out].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Ground-truth terrain; without it only robot knowledge is drawn.
    #[arg(long)]
    pub terrain: Option<PathBuf>,
    #[arg(long, default_value_t = 1000.0)]
    pub threshold: f64,
    /// Keep this many evenly spaced snapshots.
    #[arg(long)]
    pub frames: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub metrics: PathBuf,
    pub golden: PathBuf,
    /// `column=tolerance` for a float column (repeatable).
    #[arg(long = "tolerance", value_parser = parse_tolerance)]
    pub tolerances: Vec<(String, f64)>,
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (c, t) = s.split_once('=').ok_or("expected column=tolerance")?;
    let t: f64 = t.parse().map_err(|_| format!("`{t}` is not a number"))?;
    if t.is_nan() || t < 0.0 {
        return Err("tolerance must be non-negative".into());
    }
    Ok((c.to_string(), t))
}

pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
    }
}

pub fn exit_code(status: Status, mode: Mode) -> i32 {
    match (status, mode) {
        (Status::GoalReached, _) => EXIT_OK,
        (Status::FrontierExhausted, Mode::GoalFree) => EXIT_OK,
        (Status::FrontierExhausted, Mode::GoalDirected) => EXIT_FRONTIER_EXHAUSTED,
        (Status::MaxIterations, _) => EXIT_MAX_ITERATIONS,
        (Status::Running, _) => EXIT_ERROR,
    }
}

/// Loads the terrain named by `config`, runs, and writes all artifacts.
pub fn run_to_dir(config: &RunConfig, out: &Path) -> anyhow::Result<EpisodeOutput> {
    let terrain = load_terrain(&config.terrain)?;
    let output = run_episode_on(config, &terrain)?;
    write_episode(out, &output)?;
    std::fs::write(out.join("config.toml"), config::config_to_toml(config))?;
    Ok(output)
}

fn one_line(dir: &Path, out: &EpisodeOutput) -> String {
    let m = &out.metrics;
    format!(
        "{}: status={} iterations={} safe_fraction={} safety_violations={}",
        dir.display(),
        m.status,
        m.iterations,
        saegt::sim::fmt_f64(m.safe_fraction),
        m.safety_violations
    )
}

fn run_command(args: &RunArgs, explore: bool) -> anyhow::Result<i32> {
    let mut cfg = config::load_config(&args.config, &args.overrides)?;
    if explore {
        cfg.planner.mode = Some(Mode::GoalFree);
    } else if cfg.mode() == Mode::GoalDirected && cfg.goal.is_none() {
        return Err(UsageError::new("goal", "run needs a goal; use explore for goal-free runs").into());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = resolve_out_dir(args.out.as_deref());
    let jobs: Vec<(RunConfig, PathBuf)> = match args.seeds {
        None => vec![(cfg, out)],
        Some(r) => (r.start..r.end)
            .map(|s| {
                let mut c = cfg.clone();
                c.seed = s;
                (c, out.join(format!("seed_{s}")))
            })
            .collect(),
    };
    let results = suite::par_map(&jobs, |(c, dir)| run_to_dir(c, dir).map(|o| (c.mode(), o)));
    let mut code = EXIT_OK;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for ((_, dir), res) in jobs.iter().zip(results) {
        let this = match res {
            Ok((mode, o)) => {
                let _ = writeln!(lock, "{}", one_line(dir, &o));
                if o.metrics.safety_violations > 0 {
                    let _ = writeln!(
                        lock,
                        "warning: {} trajectory points on cells below the threshold",
                        o.metrics.safety_violations
                    );
                }
                exit_code(o.metrics.status, mode)
            }
            Err(e) if jobs.len() == 1 => return Err(e),
            Err(e) => {
                eprintln!("error: {}: {e:#}", dir.display());
                EXIT_ERROR
            }
        };
        code = worst(code, this);
    }
    Ok(code)
}

/// Error beats iteration cap beats frontier exhaustion beats success.
fn worst(a: i32, b: i32) -> i32 {
    let rank = |c: i32| match c {
        EXIT_ERROR => 3,
        EXIT_MAX_ITERATIONS => 2,
        EXIT_FRONTIER_EXHAUSTED => 1,
        _ => 0,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn terrain_spec(kind: &TerrainKind) -> TerrainSpec {
    match *kind {
        TerrainKind::Uniform { value } => TerrainSpec::Uniform { value },
        TerrainKind::Ramp { base, slope_x, slope_y } => TerrainSpec::Ramp { base, slope_x, slope_y },
        TerrainKind::Band { low, high, x0, x1, y0, y1, ramp } => TerrainSpec::Band { low, high, x0, x1, y0, y1, ramp },
        TerrainKind::Blobs { low, high, count, min_radius, max_radius, ramp, ref keep_out, seed } => TerrainSpec::Blobs {
            low,
            high,
            count,
            min_radius,
            max_radius,
            ramp,
            keep_out: keep_out.iter().map(|&(x, y, r)| (Point::new(x, y), r)).collect(),
            seed,
        },
    }
}

fn gen_command(args: &GenArgs) -> anyhow::Result<i32> {
    let grid = Grid::new(args.width, args.height, args.resolution, Point::new(args.origin_x, args.origin_y))
        .map_err(|e| UsageError::new("", e.to_string()))?;
    let terrain = generate(grid, &terrain_spec(&args.kind), args.lipschitz)?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    save_terrain(&terrain, &args.output)?;
    println!(
        "{}: {}x{} lipschitz={}",
        args.output.display(),
        args.width,
        args.height,
        terrain.lipschitz.map(saegt::sim::fmt_f64).unwrap_or_default()
    );
    Ok(EXIT_OK)
}

fn render_command(args: &RenderArgs) -> anyhow::Result<i32> {
    let terrain = args.terrain.as_deref().map(load_terrain).transpose()?;
    let truth = terrain.as_ref().map(|t| render::Truth { terrain: t, threshold: args.threshold });
    let out = resolve_out_dir(args.out.as_deref());
    let report = render::render_dir(&args.snapshots, &out, truth, args.frames)?;
    let mut stdout = std::io::stdout().lock();
    for (path, digest) in &report.written {
        let _ = writeln!(stdout, "{} sha256={digest}", path.display());
    }
    for (dir, why) in &report.skipped {
        eprintln!("warning: skipped {}: {why}", dir.display());
    }
    if report.written.is_empty() {
        anyhow::bail!("no snapshot under {} could be rendered", args.snapshots.display());
    }
    Ok(EXIT_OK)
}

fn verify_command(args: &VerifyArgs) -> anyhow::Result<i32> {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| p.display().to_string());
    let actual = read(&args.metrics)?;
    let golden = read(&args.golden)?;
    let tol: BTreeMap<String, f64> = args.tolerances.iter().cloned().collect();
    let diffs = verify::compare(&actual, &golden, &tol);
    if diffs.is_empty() {
        println!("ok: {} matches {}", args.metrics.display(), args.golden.display());
        return Ok(EXIT_OK);
    }
    const SHOWN: usize = 20;
    let mut stdout = std::io::stdout().lock();
    for d in diffs.iter().take(SHOWN) {
        let _ = writeln!(stdout, "{d}");
    }
    if diffs.len() > SHOWN {
        let _ = writeln!(stdout, "... {} more", diffs.len() - SHOWN);
    }
    Ok(EXIT_VERIFY_FAILED)
}

/// Runs a parsed command line. Errors are left to the caller; see
/// [`error_code`].
pub fn execute(cli: &Cli) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Run(a) => run_command(a, false),
        Command::Explore(a) => run_command(a, true),
        Command::GenTerrain(a) => gen_command(a),
        Command::Render(a) => render_command(a),
        Command::Verify(a) => verify_command(a),
    }
}

pub fn error_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_ERROR
    }
}
