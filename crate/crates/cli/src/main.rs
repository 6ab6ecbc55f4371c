use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hpblowup::study::{self, FitModel, RunConfig, RunReport, SweepSpec};
use hpblowup::Error;
use log::{error, LevelFilter};

/// Adaptive Galerkin time stepping towards finite-time blow-up.
#[derive(Debug, Parser)]
#[command(name = "hpblowup", version)]
struct Cli {
    /// Increase log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single adaptive run from a JSON config; writes a JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tolerance sweep from a JSON spec; writes a CSV table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares rate fit of a sweep CSV; writes JSON.
    Fit {
        /// Sweep table produced by `sweep`.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "algebraic")]
        model: Model,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Growth factor and effectivity series of a run report; writes CSV.
    Trace {
        /// Report produced by `run`.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Algebraic,
    Exponential,
}

impl From<Model> for FitModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Algebraic => FitModel::Algebraic,
            Model::Exponential => FitModel::Exponential,
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match out {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let mut w = sink(out)?;
    writeln!(w, "{text}")
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Runtime(e.to_string()))
}

/// Returns whether a run aborted.
fn dispatch(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = RunConfig::from_json(&read(&config)?)?;
            let rep = study::run(&cfg)?;
            write_text(out.as_deref(), &rep.to_json()?)?;
            Ok(rep.aborted())
        }
        Command::Sweep { config, out } => {
            let spec = SweepSpec::from_json(&read(&config)?)?;
            let rows = study::sweep(&spec)?;
            study::write_csv(&rows, sink(out.as_deref())?)?;
            Ok(rows.iter().any(|r| r.aborted))
        }
        Command::Fit { config, model, out } => {
            let file = File::open(&config).map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            let rows = study::read_csv(file)?;
            let res = study::fit(&rows, model.into())?;
            let text = serde_json::to_string_pretty(&res).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_text(out.as_deref(), &text)?;
            Ok(false)
        }
        Command::Trace { config, out } => {
            let rep = RunReport::from_json(&read(&config)?)?;
            let points = study::trace(&rep)?;
            study::write_trace_csv(&points, sink(out.as_deref())?)?;
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();

    match dispatch(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            error!("run aborted: step size fell below k_min");
            ExitCode::from(3)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
