//! `remlab` — experiment harness for the energy-statistics laboratory.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 verification
//! failure.

use clap::{Args, Parser, Subcommand};
use remlab_cli::config::{parse_grid, parse_window, ExperimentConfig, MethodSel, Task};
use remlab_cli::error::CliError;
use remlab_cli::runner::{run_experiment, verify_failures};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "remlab",
    version,
    about = "Tilted spin-field energy statistics: moments, log-MGFs, duality solves, tail oracles, thinned point processes, ranked Gibbs weights, and a one-shot verification suite."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Root seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores). Results are identical across counts.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Spin bias m in (-1, 1).
    #[arg(long, default_value_t = 0.3)]
    m: f64,
    /// Margin epsilon in (0, 1/2) with |m| <= 1 - 2 epsilon.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a field spec and emit its moment summary.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Config file holding the `[field]` section.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Annealed log-MGF over a tilt grid.
    Mgf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: PathBuf,
        /// Grid as lo:hi:steps.
        #[arg(long, default_value = "0:3:31")]
        lambda_grid: String,
    },
    /// Solve the coupled centering system on an explicit disorder vector.
    Solve {
        #[command(flatten)]
        common: Common,
        /// CSV with header index,h.
        #[arg(long)]
        h_file: PathBuf,
        /// Rate level C.
        #[arg(long, value_name = "C")]
        level: f64,
        /// Offset x.
        #[arg(long, default_value_t = 0.0)]
        x: f64,
    },
    /// Tail probability at a level, by the chosen estimator.
    Tail {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h_file: PathBuf,
        /// Energy level.
        #[arg(long)]
        a: f64,
        /// exact | tilted | sharp.
        #[arg(long, default_value = "exact")]
        method: String,
        /// Sample count for the tilted estimator.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Realize thinned point processes and compare with the Poisson law.
    Process {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        /// Observation window lo:hi; default spans the limiting law.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, default_value_t = 6)]
        bins: usize,
    },
    /// Ranked Gibbs weights of retained configurations vs the limit law.
    Gibbs {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Inverse temperature; default 2.5x the asymptotic tilt.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
    },
    /// Run the full verification suite; exit 4 on any failed criterion.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Execute the task described by a config file.
    Run {
        /// Full config file (`[field]`, `[model]`, `[run]` sections).
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_spec_file(path: &PathBuf) -> Result<remlab_core::field::FieldSpec, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(ExperimentConfig::from_text(&text)?.field)
}

fn apply_common(cfg: &mut ExperimentConfig, common: &Common) {
    cfg.seed = common.seed;
    cfg.out = common.out.clone();
    cfg.threads = common.threads;
    cfg.m = common.m;
    cfg.epsilon = common.epsilon;
}

fn build_config(command: &Command) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    match command {
        Command::Moments { common, spec } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Moments;
            cfg.field = load_spec_file(spec)?;
        }
        Command::Mgf {
            common,
            spec,
            lambda_grid,
        } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Mgf;
            cfg.field = load_spec_file(spec)?;
            cfg.lambda_grid = parse_grid(lambda_grid)?;
        }
        Command::Solve {
            common,
            h_file,
            level,
            x,
        } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Solve;
            cfg.h_file = Some(h_file.clone());
            cfg.level = Some(*level);
            cfg.offset = *x;
        }
        Command::Tail {
            common,
            h_file,
            a,
            method,
            samples,
        } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Tail;
            cfg.h_file = Some(h_file.clone());
            cfg.a = Some(*a);
            cfg.method = MethodSel::parse(method)?;
            cfg.samples = *samples;
        }
        Command::Process {
            common,
            spec,
            rho,
            n,
            replicates,
            window,
            bins,
        } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Process;
            cfg.field = load_spec_file(spec)?;
            cfg.rho = *rho;
            cfg.n = *n;
            cfg.replicates = *replicates;
            cfg.bins = *bins;
            if let Some(w) = window {
                cfg.window = Some(parse_window(w)?);
            }
        }
        Command::Gibbs {
            common,
            spec,
            rho,
            n,
            beta,
            replicates,
        } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Gibbs;
            cfg.field = load_spec_file(spec)?;
            cfg.rho = *rho;
            cfg.n = *n;
            cfg.beta = *beta;
            cfg.replicates = *replicates;
        }
        Command::Verify { common } => {
            apply_common(&mut cfg, common);
            cfg.task = Task::Verify;
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)?;
            cfg = ExperimentConfig::from_text(&text)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let cfg = build_config(&cli.command)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let manifest = run_experiment(&cfg)?;
    eprintln!(
        "task {} done in {} ms; {} output file(s) in {}",
        manifest.task,
        manifest.wall_clock_ms,
        manifest.outputs.len(),
        cfg.out.display()
    );
    if cfg.task == Task::Verify {
        let failed = verify_failures(&manifest, &cfg)?;
        if failed > 0 {
            return Err(CliError::Acceptance { failed });
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("remlab: {e}");
        std::process::exit(e.exit_code());
    }
}
