//! `sublorentz` command-line front end.

pub mod commands;
pub mod export;
pub mod scenario;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, CliError};
use export::Format;

#[derive(Debug, Parser)]
#[command(name = "sublorentz", version, about = "Horizontal geodesics of the 4-potential distribution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write the trajectory.
    Integrate(IntegrateArgs),
    /// Sample the geodesic sphere of the constant magnetic field (|p| s <= 2π).
    Sphere(CloudArgs),
    /// Sample the wavefront, including non-optimal geodesics.
    Wavefront(CloudArgs),
    /// Run a property suite and print a pass/fail table.
    Verify {
        /// conservation, oracle, gauge, abnormal, asymptotics, nonholonomy or all
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Print field, kernel and growth-vector analysis at a scenario's initial point.
    Analyze {
        scenario: PathBuf,
        /// Override a scenario key, e.g. --set potential.phi=2
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write (x2,x3) and (x2,x4) projections as SVG next to --out.
    #[arg(long)]
    pub svg: bool,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CloudArgs {
    /// Geodesic length.
    #[arg(long = "s", default_value = "1", value_parser = parse_scalar)]
    pub s: f64,
    #[arg(long, default_value = "1", value_parser = parse_scalar, allow_hyphen_values = true)]
    pub phi: f64,
    /// Lower end of the p range; accepts multiples of pi such as -8pi.
    #[arg(long, value_parser = parse_scalar, allow_hyphen_values = true)]
    pub p_min: Option<f64>,
    #[arg(long, value_parser = parse_scalar, allow_hyphen_values = true)]
    pub p_max: Option<f64>,
    /// Grid size as ALPHASxPS.
    #[arg(long, default_value = "256x256", value_parser = parse_grid)]
    pub grid: (usize, usize),
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub svg: bool,
}

/// A finite number, optionally a multiple of pi: `2.5`, `pi`, `-8pi`, `0.5*pi`.
pub fn parse_scalar(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let value = match t.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| format!("invalid number '{s}'"))?,
            };
            c * std::f64::consts::PI
        }
        None => t.parse::<f64>().map_err(|_| format!("invalid number '{s}'"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("number must be finite, got '{s}'"))
    }
}

/// `NxM` with N, M >= 2.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid must look like 256x256, got '{s}'"))?;
    let n: usize = a.trim().parse().map_err(|_| format!("invalid grid size '{s}'"))?;
    let m: usize = b.trim().parse().map_err(|_| format!("invalid grid size '{s}'"))?;
    if n < 2 || m < 2 {
        return Err(format!("grid needs at least 2x2, got {n}x{m}"));
    }
    Ok((n, m))
}
