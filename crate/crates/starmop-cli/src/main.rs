//! `starmop`: parameters, equilibrium densities, droplets, spectral curves,
//! generalized Airy functions and multiple orthogonal polynomials from the
//! command line.
//!
//! Exit codes: 0 when everything passed, 2 on a numerical failure, 3 on an
//! invalid configuration.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use commands::{CmdResult, Outcome, Table};
use config::{CommonArgs, Format, RunConfig};

const EXIT_CHECK: u8 = 2;
const EXIT_CONFIG: u8 = 3;
pub const SCHEMA: &str = "1";

#[derive(Debug, Parser)]
#[command(
    name = "starmop",
    version,
    about = "Equilibrium problems on star-shaped sets and their polynomials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived scalars: r, x*, rho, a and the critical time.
    Params(CommonArgs),
    /// Densities of the equilibrium measures on a grid, with masses.
    Density(CommonArgs),
    /// Harmonic moments and boundary samples of the droplet.
    Droplet(CommonArgs),
    /// Coefficients of the spectral curve.
    Curve(CommonArgs),
    /// Generalized Airy values along the real axis.
    Airy(CommonArgs),
    /// Polynomial solves, zeros and strong-asymptotic ratios for each --n.
    Mop(CommonArgs),
    /// Run the acceptance checks; the polynomial ones only with --n.
    Verify(CommonArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &CommonArgs, fn(&RunConfig) -> CmdResult) {
        match self {
            Command::Params(a) => ("params", a, commands::params),
            Command::Density(a) => ("density", a, commands::density),
            Command::Droplet(a) => ("droplet", a, commands::droplet),
            Command::Curve(a) => ("curve", a, commands::curve),
            Command::Airy(a) => ("airy", a, commands::airy),
            Command::Mop(a) => ("mop", a, commands::mop),
            Command::Verify(a) => ("verify", a, commands::verify),
        }
    }
}

#[derive(Serialize)]
struct Timestamp {
    unix_seconds: u64,
    wall_seconds: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    criteria_seconds: BTreeMap<String, f64>,
}

/// Everything except `timestamp` is a function of the configuration.
#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    command: &'a str,
    inputs: &'a RunConfig,
    outputs: Value,
    diagnostics: Value,
    passed: bool,
    timestamp: Timestamp,
}

fn sink(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_csv(out: Box<dyn Write>, table: &Table) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()
}

fn emit(
    name: &str,
    cfg: &RunConfig,
    outcome: Outcome,
    started: SystemTime,
    wall: f64,
) -> io::Result<()> {
    let mut out = sink(cfg)?;
    match cfg.format {
        Format::Csv => write_csv(out, &outcome.table),
        Format::Json => {
            let report = Report {
                schema: SCHEMA,
                command: name,
                inputs: cfg,
                outputs: outcome.outputs,
                diagnostics: outcome.diagnostics,
                passed: outcome.passed,
                timestamp: Timestamp {
                    unix_seconds: started
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                    wall_seconds: wall,
                    criteria_seconds: outcome.timings,
                },
            };
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    let (name, args, run) = cli.command.split();
    let cfg = match RunConfig::resolve(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let started = SystemTime::now();
    let clock = Instant::now();
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{name} failed: {e}");
            return ExitCode::from(EXIT_CHECK);
        }
    };
    let passed = outcome.passed;
    if let Err(e) = emit(name, &cfg, outcome, started, clock.elapsed().as_secs_f64()) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}
