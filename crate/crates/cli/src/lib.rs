//! The `minkvec` command line: compute vectors, run verification suites,
//! tabulate transforms and extract Steiner coefficients.
//!
//! Exit codes: 0 success, 1 suite failure, 2 configuration error,
//! 3 precondition refusal by a backend.

pub mod commands;
pub mod config;
pub mod grammar;

use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use minkvec::transforms::TransformError;
use minkvec::MeasureError;
use thiserror::Error;

pub use config::{BackendChoice, Command, JobConfig, OutputFormat, TransformKind};
pub use grammar::GrammarError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Grammar(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Measure(
                MeasureError::Spec(_) | MeasureError::Degree { .. } | MeasureError::Nodes(_) | MeasureError::IllConditioned(_),
            ) => EXIT_CONFIG,
            CliError::Measure(_) | CliError::Transform(_) => EXIT_PRECONDITION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "minkvec", version, about = "Functional Minkowski vectors of convex functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    #[command(flatten)]
    pub global: GlobalFlags,
}

#[derive(Debug, Args)]
pub struct GlobalFlags {
    /// JSON job file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true, env = "MINKVEC_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub radial_points: Option<usize>,
    #[arg(long, global = true)]
    pub angular_points: Option<usize>,
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evaluate t*_{j,ζ}(v) with one backend.
    Compute {
        #[arg(long = "fn")]
        function: Option<String>,
        #[arg(long)]
        density: Option<String>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        backend: Option<BackendChoice>,
    },
    /// Run a verification suite; exits 1 if any check fails.
    Verify { suite: Option<String> },
    /// Tabulate a transform of a density on a grid.
    Transforms {
        #[arg(long)]
        density: Option<String>,
        #[arg(long, value_enum)]
        transform: Option<TransformKind>,
        /// `l` for r/t, `k` for abel.
        #[arg(long, alias = "l", alias = "k")]
        order: Option<u32>,
        /// `lo:hi:count`
        #[arg(long)]
        grid: Option<String>,
    },
    /// Coefficients of r ↦ t*_{n,α}(v + r h_B).
    Steiner {
        #[arg(long = "fn")]
        function: Option<String>,
        /// The density α.
        #[arg(long)]
        density: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<f64>>,
    },
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// Loads the config file (if any) and applies flags on top of it.
pub fn resolve(cli: Cli) -> Result<JobConfig, CliError> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            JobConfig::from_json(&text)?
        }
        None => JobConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.quad.seed = seed;
    }
    if let Some(k) = g.radial_points {
        cfg.quad.radial_points = k;
    }
    if let Some(k) = g.angular_points {
        cfg.quad.angular_points = k;
    }
    if let Some(k) = g.mc_samples {
        cfg.quad.mc_samples = k;
    }
    set(&mut cfg.format, g.format);
    set(&mut cfg.output, g.output);
    match cli.command {
        Cmd::Compute {
            function,
            density,
            j,
            n,
            backend,
        } => {
            cfg.command = Some(Command::Compute);
            set(&mut cfg.function, function);
            set(&mut cfg.density, density);
            set(&mut cfg.j, j);
            set(&mut cfg.n, n);
            set(&mut cfg.backend, backend);
        }
        Cmd::Verify { suite } => {
            cfg.command = Some(Command::Verify);
            set(&mut cfg.suite, suite);
        }
        Cmd::Transforms {
            density,
            transform,
            order,
            grid,
        } => {
            cfg.command = Some(Command::Transforms);
            set(&mut cfg.density, density);
            set(&mut cfg.transform, transform);
            set(&mut cfg.order, order);
            set(&mut cfg.grid, grid);
        }
        Cmd::Steiner {
            function,
            density,
            n,
            nodes,
        } => {
            cfg.command = Some(Command::Steiner);
            set(&mut cfg.function, function);
            set(&mut cfg.density, density);
            set(&mut cfg.n, n);
            set(&mut cfg.nodes, nodes);
        }
    }
    Ok(cfg)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let threads = cli.global.threads;
    let outcome = resolve(cli).and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            pool = pool.num_threads(t);
        }
        let pool = pool.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        pool.install(|| commands::execute(&cfg))
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
