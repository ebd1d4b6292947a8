use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use heleshaw::sim::{self, convergence_study, Figure, RunOutput, SimConfig};
use log::info;

mod verify;

/// Environment variable naming the default output directory.
const OUTPUT_ENV: &str = "HELESHAW_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "output";

#[derive(Debug, Parser)]
#[command(name = "heleshaw", version, about = "Hele-Shaw tumor growth simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation from a config file
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (overrides `output_dir` and $HELESHAW_OUTPUT_DIR)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the solver against its oracles and invariants
    Verify(verify::VerifyArgs),
    /// Self-convergence study under uniform refinement
    Converge {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        t_snapshot: f64,
    },
    /// Reproduce a reference figure (fig1 or fig2)
    Reproduce {
        figure: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Coarsening factor relative to h = 1/64
        #[arg(long, default_value_t = 1)]
        scale: usize,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set t_end=2`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> heleshaw::Result<SimConfig> {
        let mut cfg = SimConfig::load(&self.config)?;
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<heleshaw::Error> for Failure {
    fn from(e: heleshaw::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Verify(args) => verify::run(&args),
        Command::Converge {
            config,
            levels,
            t_snapshot,
        } => cmd_converge(&config, levels, t_snapshot),
        Command::Reproduce { figure, out, scale } => cmd_reproduce(&figure, out, scale),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn env_output() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn report_run(out: &RunOutput, dir: &Path) -> Result<(), Failure> {
    let d = &out.diagnostics;
    println!("steps: {}", out.state.step);
    println!("t: {}", out.state.t);
    println!("mass: {:.16e}", out.state.n.integral());
    println!("max_n: {:.16e}", out.state.n.max());
    println!("output: {}", dir.display());
    println!("warnings: {}", d.warnings.len());
    println!("failures: {}", d.failures.len());
    if let Some(f) = d.failures.first() {
        return Err(Failure::Numerical(format!(
            "{} invariant failures, first at step {}: {}",
            d.failures.len(),
            f.step,
            f.report
        )));
    }
    Ok(())
}

fn cmd_run(args: &ConfigArgs, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = args.load()?;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .or_else(env_output)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    cfg.output_dir = Some(dir.clone());
    info!("running {} to t={}", args.config.display(), cfg.t_end);
    let out = sim::run(&cfg)?;
    report_run(&out, &dir)
}

fn cmd_converge(args: &ConfigArgs, levels: usize, t_snapshot: f64) -> Result<(), Failure> {
    let cfg = args.load()?;
    let rows = convergence_study(&cfg, levels, t_snapshot)?;
    println!("n_cells,h,l1_difference,rate");
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
    for r in &rows {
        println!("{},{:.6e},{},{}", r.n_cells, r.h, opt(r.l1_difference), opt(r.rate));
    }
    Ok(())
}

fn cmd_reproduce(figure: &str, out: Option<PathBuf>, scale: usize) -> Result<(), Failure> {
    let figure: Figure = figure.parse()?;
    let dir = out
        .or_else(|| env_output().map(|d| d.join(figure.to_string())))
        .unwrap_or_else(|| Path::new(DEFAULT_OUTPUT).join(figure.to_string()));
    let h = figure.config(scale)?.grid()?.h();
    println!("figure: {figure}");
    println!("h: {h}");
    let out = sim::reproduce(figure, Some(&dir), scale)?;
    report_run(&out, &dir)
}
