//! The `rtls` command line.
//!
//! Exit codes: 0 success, 2 a solve problem failed, 3 no feasible tuning
//! point, 64 usage, 65 invalid config, 66 IO or missing input.

mod manifest;
mod report;
mod solve;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::scheduler::{tune, SearchGrid, TuneError, Variant};
use crate::sim::{output, ConfigError, SimConfig, Simulation};

pub use manifest::{config_hash, RunManifest, MANIFEST_FILE};
pub use report::{report, ReportError};
pub use solve::{solve_csv, SolveError, SolveRow, SolverChoice};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVE_FAILED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;
pub const EXIT_IO: i32 = 66;

/// Directory searched for `rtls.toml` and `grid.toml` when no path is given.
pub const CONFIG_DIR_ENV: &str = "RTLS_CONFIG_DIR";
pub const CONFIG_FILE: &str = "rtls.toml";
pub const GRID_FILE: &str = "grid.toml";

#[derive(Debug, Parser)]
#[command(name = "rtls", version, about = "Positioning solvers and energy-harvesting deployment simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every problem in a measurement CSV.
    Solve {
        /// Input CSV: problem_id,kind,anchor_x,anchor_y,anchor_z,value_m[,initiator_x,initiator_y,initiator_z]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverChoice::Lm)]
        solver: SolverChoice,
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
        /// Output CSV; standard output if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a simulation and write its CSV outputs.
    Simulate {
        /// Config file; defaults to $RTLS_CONFIG_DIR/rtls.toml, then the bundled config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "rtls-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        days: Option<u32>,
        /// Number of randomly placed tags.
        #[arg(long)]
        tags: Option<usize>,
        #[arg(long, value_enum)]
        scheduler: Option<SchedulerArg>,
        /// Run the solvers on every exchange and write solver_errors.csv.
        #[arg(long)]
        with_solvers: bool,
    },
    /// Grid-search the scheduler thresholds.
    Tune {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid file; defaults to $RTLS_CONFIG_DIR/grid.toml, then the built-in grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value = "rtls-tune")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        days: Option<u32>,
        #[arg(long)]
        tags: Option<usize>,
    },
    /// Aggregate the daily CSV of a simulation run.
    Report {
        stats_dir: PathBuf,
        /// Output directory; defaults to the stats directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerArg {
    Aimd,
    #[value(name = "bounded_aimd", alias = "bounded")]
    BoundedAimd,
    #[value(name = "constant_rate", alias = "constant")]
    ConstantRate,
}

impl From<SchedulerArg> for Variant {
    fn from(s: SchedulerArg) -> Self {
        match s {
            SchedulerArg::Aimd => Variant::Aimd,
            SchedulerArg::BoundedAimd => Variant::BoundedAimd,
            SchedulerArg::ConstantRate => Variant::ConstantRate,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Solve {
            input,
            solver,
            tolerance,
            output,
        } => cmd_solve(&input, solver, tolerance, output.as_deref()),
        Command::Simulate {
            config,
            out,
            seed,
            days,
            tags,
            scheduler,
            with_solvers,
        } => {
            let overrides = Overrides {
                seed,
                days,
                tags,
                scheduler: scheduler.map(Into::into),
                with_solvers,
            };
            match load_config(config.as_deref(), &overrides) {
                Ok(c) => cmd_simulate(&c, &out),
                Err(code) => code,
            }
        }
        Command::Tune {
            config,
            grid,
            out,
            seed,
            days,
            tags,
        } => {
            let overrides = Overrides {
                seed,
                days,
                tags,
                ..Overrides::default()
            };
            let config = match load_config(config.as_deref(), &overrides) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match load_grid(grid.as_deref()) {
                Ok(g) => cmd_tune(&config, &g, &out),
                Err(code) => code,
            }
        }
        Command::Report { stats_dir, out } => {
            let out = out.unwrap_or_else(|| stats_dir.clone());
            match report(&stats_dir, &out) {
                Ok(files) => {
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_IO
                }
            }
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub days: Option<u32>,
    pub tags: Option<usize>,
    pub scheduler: Option<Variant>,
    pub with_solvers: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut SimConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(days) = self.days {
            config.days = days;
        }
        if let Some(tags) = self.tags {
            config.world.random_tags.count = tags;
        }
        if let Some(v) = self.scheduler {
            config.scheduler.variant = v;
        }
        if self.with_solvers {
            config.measurements.with_solvers = true;
        }
    }
}

fn config_dir_file(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CONFIG_DIR_ENV)?;
    let path = Path::new(&dir).join(name);
    path.is_file().then_some(path)
}

/// Resolves a path given on the command line, falling back to the config
/// directory for relative paths that do not exist.
fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

/// Loads, overrides and validates a config, printing diagnostics and
/// returning the exit code on failure.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<SimConfig, i32> {
    let path = path.map(resolve).or_else(|| config_dir_file(CONFIG_FILE));
    let mut config = match &path {
        Some(p) => SimConfig::read(p),
        None => toml::from_str(crate::sim::config::BUNDLED_CONFIG)
            .map_err(|e| ConfigError::Parse(e.to_string())),
    }
    .map_err(|e| {
        eprintln!("error: {e}");
        match e {
            ConfigError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        }
    })?;
    overrides.apply(&mut config);
    if let Err(errors) = config.validate() {
        eprintln!("error: {}", ConfigError::Invalid(errors));
        return Err(EXIT_CONFIG);
    }
    Ok(config)
}

fn load_grid(path: Option<&Path>) -> Result<SearchGrid, i32> {
    let Some(path) = path.map(resolve).or_else(|| config_dir_file(GRID_FILE)) else {
        return Ok(SearchGrid::default());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    SearchGrid::from_toml(&text).map_err(|e| {
        eprintln!("error: invalid grid {}: {e}", path.display());
        EXIT_CONFIG
    })
}

fn cmd_solve(input: &Path, solver: SolverChoice, tolerance: f64, output: Option<&Path>) -> i32 {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return EXIT_IO;
        }
    };
    let rows = match solve_csv(&text, solver, tolerance) {
        Ok(rows) => rows,
        Err(e @ SolveError::Tolerance(_)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVE_FAILED;
        }
    };
    let written = match output {
        Some(path) => std::fs::File::create(path).and_then(|f| solve::write_rows(&rows, f)),
        None => solve::write_rows(&rows, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return EXIT_IO;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} problems failed", rows.len());
        EXIT_SOLVE_FAILED
    } else {
        EXIT_OK
    }
}

fn cmd_simulate(config: &SimConfig, out: &Path) -> i32 {
    let started = chrono::Utc::now();
    let sim = match Simulation::new(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    let stats = sim.run();
    let files = match output::write_outputs(&stats, out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot write outputs to {}: {e}", out.display());
            return EXIT_IO;
        }
    };
    let manifest = RunManifest::new("simulate", config, started, &files);
    if let Err(e) = manifest.write(out) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_IO;
    }
    let tags = stats.role_aggregate(crate::sim::Role::Tag);
    println!(
        "simulated {} days, {} nodes; mean localizations per tag per day {:.2}; outputs in {}",
        stats.days,
        stats.nodes.len(),
        tags.map_or(0.0, |a| a.avg),
        out.display()
    );
    EXIT_OK
}

pub const TUNE_REPORT_FILE: &str = "tune_report.csv";

fn cmd_tune(config: &SimConfig, grid: &SearchGrid, out: &Path) -> i32 {
    let started = chrono::Utc::now();
    let result = tune(grid, config);
    let rows = match &result {
        Ok(o) => &o.rows,
        Err(TuneError::NoFeasiblePoint(rows)) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                TuneError::Grid(_) => EXIT_CONFIG,
                _ => EXIT_IO,
            };
        }
    };
    let report_path = out.join(TUNE_REPORT_FILE);
    let written = std::fs::create_dir_all(out)
        .and_then(|_| std::fs::File::create(&report_path))
        .and_then(|f| crate::scheduler::write_rows(rows, f).map_err(std::io::Error::other))
        .and_then(|_| RunManifest::new("tune", config, started, std::slice::from_ref(&report_path)).write(out));
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", report_path.display());
        return EXIT_IO;
    }
    match result {
        Ok(o) => {
            println!(
                "selected beta1={} beta2={} gamma={} (mean localizations per tag {:.2})",
                o.best.beta1, o.best.beta2, o.best.gamma, o.objective
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}; see {}", report_path.display());
            EXIT_INFEASIBLE
        }
    }
}
