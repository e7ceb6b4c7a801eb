use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qhgeo::engine::{connect, polyline_upper_bound, shoot, trace_ball, GeodesicPath};
use qhgeo::lab::random::{random_direction, random_point, trial_rng, MIN_START_DELTA};
use qhgeo::lab::{run_suite, Execution, Suite};
use qhgeo::oracle::oracle_distance;
use qhgeo::{Point, VoronoiDomain};
use rand::Rng;
use serde::Serialize;

use crate::domain::DomainSpec;
use crate::error::{io_error, CliError};
use crate::svg::Scene;

/// Sample points per unit of quasihyperbolic length for drawn curves.
const DRAW_PER_UNIT: usize = 64;

/// Polyline bound for the random pairs of `oracle-compare`.
const COMPARE_PAIR_BOUND: f64 = 3.0;

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Write to `path`, or to stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(input: &Path, level: u32) -> Result<(DomainSpec, VoronoiDomain), CliError> {
    let spec = DomainSpec::load(input)?;
    let d = spec.domain(level)?;
    Ok((spec, d))
}

fn relative_gap(engine: f64, oracle: f64) -> f64 {
    if engine == 0.0 && oracle == 0.0 {
        0.0
    } else {
        (engine - oracle).abs() / engine.abs().max(oracle.abs())
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("tolerance must be positive, got {tol}")))
    }
}

#[derive(Serialize)]
struct PathsJson<'a> {
    distance: Option<f64>,
    unique: Option<bool>,
    paths: &'a [GeodesicPath],
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

pub struct DistanceArgs {
    pub input: PathBuf,
    pub x: Point,
    pub y: Point,
    pub tol: f64,
    pub spacing: f64,
    pub skip_oracle: bool,
    pub output: Option<PathBuf>,
}

pub fn distance(a: &DistanceArgs) -> Result<(), CliError> {
    check_tol(a.tol)?;
    check_tol(a.spacing)?;
    let (spec, d) = load(&a.input, 0)?;
    spec.check_query(&d, a.x)?;
    spec.check_query(&d, a.y)?;
    let res = connect(&d, a.x, a.y)?;
    println!("engine {:.6}", res.distance);
    if let Some(out) = &a.output {
        let json = PathsJson { distance: Some(res.distance), unique: Some(res.unique), paths: &res.paths };
        write_file(out, &to_json(&json))?;
    }
    if a.skip_oracle {
        return Ok(());
    }
    let o = oracle_distance(&d, a.x, a.y, a.spacing)?;
    let gap = relative_gap(res.distance, o.richardson_estimate);
    println!("oracle {:.6}", o.richardson_estimate);
    println!("relative_gap {gap:.3e}");
    if gap <= a.tol {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("engine and oracle differ by {gap:.3e} > {:.3e}", a.tol)))
    }
}

pub struct GeodesicArgs {
    pub input: PathBuf,
    pub x: Point,
    pub y: Option<Point>,
    pub phi: Option<f64>,
    pub length: Option<f64>,
    pub output: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

pub fn geodesic(a: &GeodesicArgs) -> Result<(), CliError> {
    let (spec, d) = load(&a.input, 0)?;
    spec.check_query(&d, a.x)?;
    let (paths, distance, unique) = match (a.y, a.phi, a.length) {
        (Some(y), None, None) => {
            spec.check_query(&d, y)?;
            let res = connect(&d, a.x, y)?;
            (res.paths, Some(res.distance), Some(res.unique))
        }
        (None, Some(phi), Some(r)) => (vec![shoot(&d, a.x, Point::polar(phi), r)?], None, None),
        _ => return Err(CliError::Input("give either --y, or both --phi and --length".into())),
    };
    emit(a.output.as_deref(), &to_json(&PathsJson { distance, unique, paths: &paths }))?;
    if let Some(svg) = &a.svg {
        let geodesics = paths.iter().map(|p| sample(p)).collect::<Result<_, _>>()?;
        write_file(svg, &Scene { ball: None, geodesics }.render(&d))?;
    }
    Ok(())
}

fn sample(p: &GeodesicPath) -> Result<Vec<Point>, CliError> {
    Ok(p.to_polyline(DRAW_PER_UNIT)?.vertices().to_vec())
}

pub struct BallArgs {
    pub input: PathBuf,
    pub x: Point,
    pub r: f64,
    pub samples: usize,
    pub geodesics: usize,
    pub output: PathBuf,
    pub csv: Option<PathBuf>,
    pub parallel: bool,
}

pub fn ball(a: &BallArgs) -> Result<(), CliError> {
    let (spec, d) = load(&a.input, 0)?;
    spec.check_query(&d, a.x)?;
    let ball = trace_ball(&d, a.x, a.r, a.samples, a.parallel)?;
    let mut csv = String::from("phi,x,y\n");
    for s in &ball.samples {
        writeln!(csv, "{},{},{}", s.phi, s.endpoint.x, s.endpoint.y).unwrap();
    }
    let mut geodesics = Vec::new();
    if a.geodesics > 0 {
        let m = ball.samples.len();
        let step = m.div_ceil(a.geodesics.min(m));
        for s in ball.samples.iter().step_by(step) {
            geodesics.push(sample(&s.path)?);
        }
    }
    let scene = Scene { ball: Some(ball.boundary_points()), geodesics };
    write_file(&a.output, &scene.render(&d))?;
    let csv_path = a.csv.clone().unwrap_or_else(|| a.output.with_extension("csv"));
    write_file(&csv_path, &csv)?;
    println!("samples {}", ball.samples.len());
    println!("convex {}", ball.is_convex());
    Ok(())
}

pub struct VerifyArgs {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub output: PathBuf,
    pub parallel: bool,
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let suite: Suite = a.suite.parse()?;
    let exec = if a.parallel { Execution::Parallel } else { Execution::Serial };
    let out = run_suite(suite, a.trials, a.seed, exec)?;
    std::fs::create_dir_all(&a.output).map_err(|e| io_error(&a.output, e))?;
    for r in &out.reports {
        write_file(&a.output.join(format!("{}.json", r.statement_id)), &format!("{}\n", r.to_json()))?;
    }
    let csv = out.summary_csv();
    write_file(&a.output.join("summary.csv"), &csv)?;
    print!("{csv}");
    if out.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = out.reports.iter().filter(|r| !r.passed()).map(|r| r.statement_id.as_str()).collect();
        Err(CliError::Numeric(format!("failed statements: {}", failed.join(", "))))
    }
}

pub struct ApproximateArgs {
    pub input: PathBuf,
    pub x: Point,
    pub y: Point,
    pub levels: (u32, u32),
    pub tol: f64,
    pub output: Option<PathBuf>,
}

/// One row of the refinement table.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub level: u32,
    pub nuclei: usize,
    pub distance: f64,
}

/// Distances in the nested approximations `Ω_k`. Removing boundary points
/// shrinks the domain, so the rows should not decrease beyond `tol`.
pub fn approximate_table(spec: &DomainSpec, x: Point, y: Point, levels: (u32, u32)) -> Result<Vec<LevelRow>, CliError> {
    if !matches!(spec, DomainSpec::Polygon { .. }) {
        return Err(CliError::Input("approximate needs a polygon domain".into()));
    }
    let mut rows = Vec::new();
    for level in levels.0..=levels.1 {
        let d = spec.domain(level)?;
        spec.check_query(&d, x)?;
        spec.check_query(&d, y)?;
        rows.push(LevelRow { level, nuclei: d.boundary().len(), distance: connect(&d, x, y)?.distance });
    }
    Ok(rows)
}

pub fn approximate(a: &ApproximateArgs) -> Result<(), CliError> {
    check_tol(a.tol)?;
    if a.levels.0 > a.levels.1 || a.levels.1 > 16 {
        return Err(CliError::Input(format!("bad level range {}..{}", a.levels.0, a.levels.1)));
    }
    let spec = DomainSpec::load(&a.input)?;
    let rows = approximate_table(&spec, a.x, a.y, a.levels)?;
    let mut csv = String::from("level,nuclei,distance,change,monotone\n");
    let mut bad = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let change = if i == 0 { 0.0 } else { r.distance - rows[i - 1].distance };
        let ok = change >= -a.tol;
        if !ok {
            bad.push(r.level);
        }
        writeln!(csv, "{},{},{:.9},{:.3e},{}", r.level, r.nuclei, r.distance, change, ok).unwrap();
    }
    emit(a.output.as_deref(), &csv)?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("distance drops beyond {:.1e} at levels {bad:?}", a.tol)))
    }
}

pub struct OracleCompareArgs {
    pub input: PathBuf,
    pub x: Option<Point>,
    pub y: Option<Point>,
    pub trials: usize,
    pub seed: u64,
    pub spacing: f64,
    pub tol: f64,
    pub output: Option<PathBuf>,
}

/// Random pair: an independent point joined by a short polyline if one
/// turns up, otherwise a shot endpoint.
fn random_pair(d: &VoronoiDomain, seed: u64, k: u64) -> Result<(Point, Point), CliError> {
    let mut rng = trial_rng(seed, 0x0c0, k);
    let x = random_point(&mut rng, d, MIN_START_DELTA);
    for _ in 0..10 {
        let y = random_point(&mut rng, d, MIN_START_DELTA);
        if polyline_upper_bound(d, x, y)? <= COMPARE_PAIR_BOUND {
            return Ok((x, y));
        }
    }
    let r = rng.gen_range(0.2..COMPARE_PAIR_BOUND);
    Ok((x, shoot(d, x, random_direction(&mut rng), r)?.end()))
}

pub fn oracle_compare(a: &OracleCompareArgs) -> Result<(), CliError> {
    check_tol(a.tol)?;
    check_tol(a.spacing)?;
    let (spec, d) = load(&a.input, 0)?;
    let pairs = match (a.x, a.y) {
        (Some(x), Some(y)) => vec![(x, y)],
        (None, None) => {
            if a.trials == 0 {
                return Err(CliError::Input("need at least one trial".into()));
            }
            (0..a.trials as u64).map(|k| random_pair(&d, a.seed, k)).collect::<Result<_, _>>()?
        }
        _ => return Err(CliError::Input("give both --x and --y, or neither".into())),
    };
    let mut csv = String::from("x0,x1,y0,y1,engine,oracle_coarse,oracle_fine,richardson,relative_gap\n");
    let mut worst: f64 = 0.0;
    for &(x, y) in &pairs {
        spec.check_query(&d, x)?;
        spec.check_query(&d, y)?;
        let e = connect(&d, x, y)?.distance;
        let o = oracle_distance(&d, x, y, a.spacing)?;
        let gap = relative_gap(e, o.richardson_estimate);
        worst = worst.max(gap);
        writeln!(
            csv,
            "{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.3e}",
            x.x, x.y, y.x, y.y, e, o.distance, o.fine_distance, o.richardson_estimate, gap
        )
        .unwrap();
    }
    emit(a.output.as_deref(), &csv)?;
    if a.output.is_some() {
        println!("pairs {} worst_gap {worst:.3e}", pairs.len());
    }
    if worst <= a.tol {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("worst relative gap {worst:.3e} exceeds {:.3e}", a.tol)))
    }
}
