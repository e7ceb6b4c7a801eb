//! `qhgeo`: quasihyperbolic distances, geodesics and balls from the command
//! line. Exit codes: 0 ok, 2 numeric failure, 3 input error.

mod commands;
mod domain;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhgeo::engine::MIN_BALL_SAMPLES;
use qhgeo::oracle::DEFAULT_SPACING;
use qhgeo::Point;

use commands::*;
use error::CliError;

#[derive(Parser)]
#[command(name = "qhgeo", version, about = "Quasihyperbolic geometry of plane domains with finite boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Engine distance between two points, checked against the grid oracle.
    Distance(DistanceCmd),
    /// Minimizing geodesics between two points, or a single shot.
    Geodesic(GeodesicCmd),
    /// Trace a ball boundary to SVG and CSV.
    Ball(BallCmd),
    /// Run verification suites and write per-statement reports.
    Verify(VerifyCmd),
    /// Distance table over nested boundary samplings of a polygon.
    Approximate(ApproximateCmd),
    /// Engine against oracle on given or random pairs.
    OracleCompare(OracleCompareCmd),
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let x: f64 = a.parse().map_err(|e| format!("bad coordinate {a:?}: {e}"))?;
            let y: f64 = b.parse().map_err(|e| format!("bad coordinate {b:?}: {e}"))?;
            Ok(Point::new(x, y))
        }
        _ => Err(format!("expected \"x,y\", got {s:?}")),
    }
}

fn parse_levels(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected \"lo..hi\", got {s:?}"))?;
    let lo = a.trim().parse().map_err(|e| format!("bad level {a:?}: {e}"))?;
    let hi = b.trim().parse().map_err(|e| format!("bad level {b:?}: {e}"))?;
    Ok((lo, hi))
}

#[derive(Args)]
struct Pair {
    /// Start point "x,y".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: Point,
    /// End point "x,y".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    y: Point,
}

#[derive(Args)]
struct DistanceCmd {
    /// Domain JSON.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    pair: Pair,
    /// Largest accepted relative gap to the oracle.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    /// Oracle lattice spacing relative to the boundary distance.
    #[arg(long, default_value_t = DEFAULT_SPACING)]
    spacing: f64,
    /// Print the engine distance only.
    #[arg(long)]
    skip_oracle: bool,
    /// Write the minimizing geodesics as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GeodesicCmd {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: Point,
    /// Target point; connects `x` to it.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    y: Option<Point>,
    /// Shooting angle, used with `--length` instead of `--y`.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    /// JSON output; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also draw the geodesics.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct BallCmd {
    #[arg(long)]
    input: PathBuf,
    /// Center "x,y".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: Point,
    /// Radius.
    #[arg(long)]
    r: f64,
    /// Initial number of shooting directions.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Number of sample geodesics drawn.
    #[arg(long, default_value_t = 0)]
    geodesics: usize,
    /// SVG output.
    #[arg(long)]
    output: PathBuf,
    /// CSV of (phi, x, y); defaults to the SVG path with a .csv extension.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct VerifyCmd {
    /// One of algebraic, balls, divergence, uniqueness, regularity, all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Report directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct ApproximateCmd {
    /// Polygon domain JSON.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    pair: Pair,
    /// Inclusive refinement levels "lo..hi"; level k doubles the samples k times.
    #[arg(long, value_parser = parse_levels, default_value = "0..3")]
    levels: (u32, u32),
    /// Largest accepted decrease between consecutive levels.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCompareCmd {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: Option<Point>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    y: Option<Point>,
    /// Random pairs when no points are given.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SPACING)]
    spacing: f64,
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Distance(c) => distance(&DistanceArgs {
            input: c.input,
            x: c.pair.x,
            y: c.pair.y,
            tol: c.tol,
            spacing: c.spacing,
            skip_oracle: c.skip_oracle,
            output: c.output,
        }),
        Command::Geodesic(c) => geodesic(&GeodesicArgs {
            input: c.input,
            x: c.x,
            y: c.y,
            phi: c.phi,
            length: c.length,
            output: c.output,
            svg: c.svg,
        }),
        Command::Ball(c) => {
            if c.samples < MIN_BALL_SAMPLES {
                return Err(CliError::Input(format!("--samples must be at least {MIN_BALL_SAMPLES}")));
            }
            ball(&BallArgs {
                input: c.input,
                x: c.x,
                r: c.r,
                samples: c.samples,
                geodesics: c.geodesics,
                output: c.output,
                csv: c.csv,
                parallel: c.parallel,
            })
        }
        Command::Verify(c) => verify(&VerifyArgs { suite: c.suite, seed: c.seed, trials: c.trials, output: c.output, parallel: c.parallel }),
        Command::Approximate(c) => approximate(&ApproximateArgs {
            input: c.input,
            x: c.pair.x,
            y: c.pair.y,
            levels: c.levels,
            tol: c.tol,
            output: c.output,
        }),
        Command::OracleCompare(c) => oracle_compare(&OracleCompareArgs {
            input: c.input,
            x: c.x,
            y: c.y,
            trials: c.trials,
            seed: c.seed,
            spacing: c.spacing,
            tol: c.tol,
            output: c.output,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
