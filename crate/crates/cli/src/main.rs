//! `liveclock`: run, validate and analyse live-clock network scenarios.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use liveclock::analysis::{find_euler_brick, stripes_feasible, sync_report, Feasibility, FeasibilityInput};
use liveclock::engine::{RunError, Simulation};
use liveclock::scenario::{parse_scenario, Scenario, ScenarioError};
use liveclock::trace::{writer_for, Tee, Trace, TraceFormat};

#[derive(Parser)]
#[command(name = "liveclock", version, about = "Simulate networks of steerable live clocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => TraceFormat::Csv,
            Format::Json => TraceFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trace and sync report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Master seed; repeat to run several seeds in parallel.
        #[arg(long)]
        seed: Vec<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Override the horizon, in cycles.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Validate a scenario without running it.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Decide whether a lattice geometry admits zero-phase channels on all
    /// required edges.
    Stripes {
        #[arg(long)]
        geometry: PathBuf,
    },
    /// Search for the smallest Euler brick with edges up to a limit.
    Brick {
        #[arg(long)]
        limit: u64,
    },
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            format,
            horizon,
        } => run(&scenario, &seed, &out, format.into(), horizon),
        Command::Check { scenario } => check(&scenario),
        Command::Stripes { geometry } => stripes(&geometry),
        Command::Brick { limit } => {
            match find_euler_brick(limit) {
                Some((a, b, c)) => println!("{a} {b} {c}"),
                None => println!("none"),
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn check(path: &Path) -> Result<(), Failure> {
    let s = parse_scenario(path)?;
    println!(
        "{}: ok ({} nodes, {} channels, horizon {} cycles)",
        path.display(),
        s.nodes.len(),
        s.channels.len(),
        s.horizon
    );
    Ok(())
}

fn stripes(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let g = FeasibilityInput::from_toml_str(&text).map_err(|e| Failure::Invalid(e.to_string()))?;
    match stripes_feasible(&g).map_err(|e| Failure::Invalid(e.to_string()))? {
        Feasibility::Feasible { tick_period } => println!("feasible tick_period={tick_period}"),
        Feasibility::Infeasible {
            witness: [a, b],
            squared_length,
        } => println!("infeasible witness={a}-{b} squared_length={squared_length}"),
    }
    Ok(())
}

fn run(path: &Path, seeds: &[u64], out: &Path, format: TraceFormat, horizon: Option<f64>) -> Result<(), Failure> {
    let mut base = parse_scenario(path)?;
    if let Some(h) = horizon {
        base.horizon = h;
    }
    base.validate()
        .map_err(|errs| Failure::Invalid(ScenarioError::Invalid(errs).to_string()))?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_owned();
    let seeds = if seeds.is_empty() {
        vec![base.seed]
    } else {
        seeds.to_vec()
    };

    let results: Vec<Result<(), String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let mut s = base.clone();
                s.seed = seed;
                let stem = &stem;
                scope.spawn(move || run_one(&s, out, stem, format).map_err(|e| format!("seed {seed}: {e}")))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("worker panicked".into())))
            .collect()
    });
    let errors: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(errors.join("\n")))
    }
}

fn run_one(s: &Scenario, out: &Path, stem: &str, format: TraceFormat) -> Result<(), RunError> {
    let base = out.join(format!("{stem}-seed{}", s.seed));
    let trace_path = base.with_extension(format.extension());
    let io = |e: std::io::Error| RunError::Trace(e.into());
    let mut file_sink = writer_for(format, BufWriter::new(File::create(&trace_path).map_err(io)?));
    let mut sim = Simulation::new(s)?;
    let mut trace = Trace::new(sim.meta().clone());
    let summary = sim.run(&mut Tee {
        first: file_sink.as_mut(),
        second: &mut trace,
    })?;
    drop(file_sink);

    let report = sync_report(&trace);
    let report_path = match format {
        TraceFormat::Csv => base.with_extension("report.csv"),
        TraceFormat::Json => base.with_extension("report.json"),
    };
    let mut w = BufWriter::new(File::create(&report_path).map_err(io)?);
    let written = match format {
        TraceFormat::Csv => report.write_csv(&mut w),
        TraceFormat::Json => report.to_json().and_then(|j| Ok(writeln!(w, "{j}")?)),
    };
    written.map_err(|e| RunError::Trace(std::io::Error::other(e.to_string()).into()))?;
    w.flush().map_err(io)?;
    eprintln!(
        "{stem} seed {}: {} events, {} arrivals, {} in flight -> {}",
        s.seed,
        summary.events,
        summary.arrivals,
        sim.in_flight(),
        trace_path.display()
    );
    Ok(())
}
