//! Checks of the inequalities, each run over seeded random trials.
//!
//! The algebraic checks evaluate closed-form inequalities directly. The
//! geometric checks draw Voronoi domains from [`random_domain`], query the
//! engine, and report signed margins with an explicit numeric budget.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{connect, polyline_upper_bound, qh_distance, shoot, trace_ball, GeodesicPath, QhBall};
use crate::error::{QhError, Result};
use crate::geometry::{points_left, Point, Side};
use crate::quadrature::integrate;
use crate::voronoi::VoronoiDomain;

use super::chain::extract_chain;
use super::random::{random_direction, random_domain, random_nuclei, random_point, MAX_NUCLEI, MIN_NUCLEI, MIN_START_DELTA};
use super::report::{Execution, TrialOutcome, Trials, VerificationReport};

/// Float slack for the algebraic inequalities.
pub const FLOAT_SLACK: f64 = 1e-12;
pub const QUASIS_MAX_RADIUS: f64 = 1.0 / 3.0;
pub const SMALL_BALL_RADIUS: f64 = 0.009;
/// Engine plus oracle budget for the small-ball midpoint bound.
pub const SMALL_BALL_EPS: f64 = 1e-4;
/// Initial tangent samples per traced ball.
pub const BALL_SAMPLES: usize = 64;
/// Largest angular separation of a nearby pair.
pub const NEARBY_MAX_ANGLE: f64 = 1e-5;
/// Endpoint gap of a nearby pair, relative to `delta(x)`.
pub const NEARBY_GAP_FACTOR: f64 = 1e-4;
pub const DIVERGENCE_SLACK: f64 = 1e-3;
pub const DIVERGENCE_SAMPLES: usize = 1000;
pub const MIDPOINT_EPS: f64 = 1e-6;
pub const ANGLE_SLACK: f64 = 1e-9;
/// Distances used by the uniqueness check stay this far below `pi`.
pub const PI_MARGIN: f64 = 0.05;
/// Largest polyline length for the independent pairs of the
/// regularity check.
pub const REGULARITY_PAIR_BOUND: f64 = 2.5;
pub const REGULARITY_TOL: f64 = 1e-9;
/// Relative tolerance for treating a shot as length minimizing.
const MINIMALITY_RTOL: f64 = 1e-7;

mod salt {
    pub const CURV: u64 = 0x11;
    pub const DISTCURV: u64 = 0x12;
    pub const QUASIS: u64 = 0x13;
    pub const SMALLBALLS: u64 = 0x14;
    pub const ANGLE: u64 = 0x21;
    pub const DIVERGENCE: u64 = 0x22;
    pub const MIDPOINT: u64 = 0x23;
    pub const UNIQUE: u64 = 0x31;
    pub const SHARP: u64 = 0x32;
    pub const REGULARITY: u64 = 0x41;
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `|a|+|b|-|a+b| - |a||b|/(2(|a|+|b|)) |a/|a| - b/|b||^2`.
pub fn curv_margin(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let sum: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + q).collect();
    let gap: f64 = a.iter().zip(b).map(|(p, q)| (p / na - q / nb).powi(2)).sum();
    na + nb - norm(&sum) - na * nb / (2.0 * (na + nb)) * gap
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let s = 10f64.powf(rng.gen_range(-2.0..1.0));
        let v: Vec<f64> = (0..dim).map(|_| s * rng.gen_range(-1.0..1.0)).collect();
        if norm(&v) > 0.0 {
            return v;
        }
    }
}

pub fn check_prop_curv(trials: usize, dimension: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    if ![2, 3, 8].contains(&dimension) {
        return Err(QhError::Input(format!("dimension must be 2, 3 or 8, got {dimension}")));
    }
    require_trials(trials)?;
    let id = format!("prop_curv_d{dimension}");
    let t = Trials::new(&id, salt::CURV + 0x100 * dimension as u64, trials, seed, FLOAT_SLACK)
        .param("dimension", dimension as f64);
    Ok(t.run(exec, |_, rng| {
        let a = random_vector(rng, dimension);
        // a quarter of the pairs are nearly parallel, where the bound is tight
        let b = if rng.gen_bool(0.25) {
            let lambda = 10f64.powf(rng.gen_range(-1.0..1.0));
            let eps = 10f64.powf(rng.gen_range(-8.0..-2.0));
            let noise = random_vector(rng, dimension);
            a.iter().zip(&noise).map(|(p, q)| lambda * p + eps * q).collect()
        } else {
            random_vector(rng, dimension)
        };
        TrialOutcome::Margins(vec![curv_margin(&a, &b)])
    }))
}

fn nearest_distance(nuclei: &[Point], z: Point) -> f64 {
    nuclei.iter().map(|s| s.dist(z)).fold(f64::INFINITY, f64::min)
}

/// `2d(x) + |h|^2/d(x) - d(x+h) - d(x-h)` for the boundary `nuclei`.
pub fn distcurv_margin(nuclei: &[Point], x: Point, h: Point) -> f64 {
    let dx = nearest_distance(nuclei, x);
    2.0 * dx + h.norm_sq() / dx - nearest_distance(nuclei, x + h) - nearest_distance(nuclei, x - h)
}

/// Evaluated on nuclei lists directly; the distance to a finite boundary
/// does not need the diagram.
pub fn check_prop_distcurv(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("prop_distcurv", salt::DISTCURV, trials, seed, FLOAT_SLACK);
    Ok(t.run(exec, |_, rng| {
        let n = rng.gen_range(MIN_NUCLEI..=MAX_NUCLEI);
        let nuclei = random_nuclei(rng, n);
        let x = loop {
            let p = Point::new(rng.gen_range(-0.25..1.25), rng.gen_range(-0.25..1.25));
            if nearest_distance(&nuclei, p) > 1e-6 {
                break p;
            }
        };
        let h = random_direction(rng) * 10f64.powf(rng.gen_range(-4.0..0.3));
        TrialOutcome::Margins(vec![distcurv_margin(&nuclei, x, h)])
    }))
}

/// Points of the ball: every sample geodesic at nine radii `r j / 8`.
fn ball_fill(ball: &QhBall) -> Vec<Point> {
    let mut pts = vec![ball.center];
    for s in &ball.samples {
        pts.extend((1..=8).map(|j| s.path.eval(ball.radius * j as f64 / 8.0)));
    }
    pts
}

fn delta_range(d: &VoronoiDomain, pts: &[Point]) -> (f64, f64) {
    pts.iter()
        .map(|&p| d.delta(p))
        .fold((f64::INFINITY, 0.0), |(m, big), v| (m.min(v), big.max(v)))
}

/// Margins of the ratio bound `M/m <= 2` and of `m/2 <= delta(w) <= 2M`
/// at midpoints of `pairs` random pairs of sampled ball points.
pub fn quasis_margins(d: &VoronoiDomain, ball: &QhBall, rng: &mut ChaCha8Rng, pairs: usize) -> Vec<f64> {
    let pts = ball_fill(ball);
    let (m, big) = delta_range(d, &pts);
    let mut out = vec![2.0 - big / m];
    for _ in 0..pairs {
        let (i, j) = (rng.gen_range(0..pts.len()), rng.gen_range(0..pts.len()));
        let dw = d.delta(pts[i].midpoint(pts[j]));
        out.push(dw / (0.5 * m) - 1.0);
        out.push(1.0 - dw / (2.0 * big));
    }
    out
}

pub fn check_prop_quasis(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("prop_quasis", salt::QUASIS, trials, seed, 1e-9)
        .param("max_radius", QUASIS_MAX_RADIUS)
        .param("ball_samples", BALL_SAMPLES as f64);
    Ok(t.run(exec, |_, rng| {
        let d = random_domain(rng);
        let x = random_point(rng, &d, MIN_START_DELTA);
        let r = rng.gen_range(0.01..=QUASIS_MAX_RADIUS);
        trace_ball(&d, x, r, BALL_SAMPLES, false)
            .map(|ball| quasis_margins(&d, &ball, rng, 32))
            .into()
    }))
}

struct SmallBall {
    d: VoronoiDomain,
    ball: QhBall,
    big_m: f64,
}

fn small_ball(rng: &mut ChaCha8Rng) -> Result<SmallBall> {
    let d = random_domain(rng);
    let x = random_point(rng, &d, MIN_START_DELTA);
    let ball = trace_ball(&d, x, SMALL_BALL_RADIUS, BALL_SAMPLES, false)?;
    let (_, big_m) = delta_range(&d, &ball_fill(&ball));
    Ok(SmallBall { d, ball, big_m })
}

/// `r - |y-z|^2/(512 r M^2) - d_Q((y+z)/2, x)`.
pub fn smallballs_margin(d: &VoronoiDomain, x: Point, r: f64, big_m: f64, y: Point, z: Point) -> Result<f64> {
    let dq = qh_distance(d, x, y.midpoint(z))?;
    Ok(r - y.dist(z).powi(2) / (512.0 * r * big_m * big_m) - dq)
}

pub fn check_smallballs(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("smallballs", salt::SMALLBALLS, trials, seed, SMALL_BALL_EPS)
        .param("radius", SMALL_BALL_RADIUS)
        .param("ball_samples", BALL_SAMPLES as f64);
    Ok(t.run(exec, |_, rng| {
        let run = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            let sb = small_ball(rng)?;
            let n = sb.ball.samples.len();
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let (y, z) = (sb.ball.samples[i].endpoint, sb.ball.samples[j].endpoint);
            Ok(vec![smallballs_margin(&sb.d, sb.ball.center, SMALL_BALL_RADIUS, sb.big_m, y, z)?])
        };
        run(rng).into()
    }))
}

/// Smallest `sin` of the turning angle of a closed polygon listed
/// counterclockwise; non-negative exactly when the polygon is convex.
pub fn convexity_margin(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|k| {
            let e0 = v[(k + 1) % n] - v[k];
            let e1 = v[(k + 2) % n] - v[(k + 1) % n];
            e0.cross(e1) / (e0.norm() * e1.norm())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Convexity of the balls drawn by [`check_smallballs`] (same seeds).
pub fn check_small_ball_convexity(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("smallballs_convexity", salt::SMALLBALLS, trials, seed, 0.0)
        .param("radius", SMALL_BALL_RADIUS)
        .param("ball_samples", BALL_SAMPLES as f64);
    Ok(t.run(exec, |_, rng| {
        small_ball(rng)
            .map(|sb| vec![convexity_margin(&sb.ball.boundary_points())])
            .into()
    }))
}

/// Two geodesics from `x` of equal length `r`, both verified to be
/// shortest, with initial angles less than [`NEARBY_MAX_ANGLE`] apart and
/// endpoints within `NEARBY_GAP_FACTOR * delta(x)`.
#[derive(Debug, Clone)]
pub struct NearbyPair {
    pub x: Point,
    pub r: f64,
    pub first: GeodesicPath,
    pub second: GeodesicPath,
}

impl NearbyPair {
    pub fn gap(&self) -> f64 {
        self.first.end().dist(self.second.end())
    }

    /// Order the pair so that the second geodesic leaves on the left.
    pub fn left_normalized(mut self) -> Result<Self> {
        if points_left(self.second.start_tangent, self.first.start_tangent)? == Side::Right {
            std::mem::swap(&mut self.first, &mut self.second);
        }
        Ok(self)
    }
}

fn is_minimizing(d: &VoronoiDomain, g: &GeodesicPath) -> Result<bool> {
    let r = g.total_qh_len;
    Ok(!g.has_flagged_events() && qh_distance(d, g.start, g.end())? >= r * (1.0 - MINIMALITY_RTOL))
}

/// Draw a nearby pair from `x`, shortening the length until the shots are
/// minimizing. `None` when no admissible pair was found.
pub fn nearby_pair(rng: &mut ChaCha8Rng, d: &VoronoiDomain, x: Point, r_max: f64) -> Result<Option<NearbyPair>> {
    let phi = rng.gen_range(-PI..PI);
    let mut eps = NEARBY_MAX_ANGLE * rng.gen_range(0.1..1.0);
    let mut r = rng.gen_range(0.1..r_max);
    let max_gap = NEARBY_GAP_FACTOR * d.delta(x);
    for _ in 0..6 {
        let first = shoot(d, x, Point::polar(phi), r)?;
        if !is_minimizing(d, &first)? {
            r *= 0.6;
            continue;
        }
        let mut second = shoot(d, x, Point::polar(phi + eps), r)?;
        while second.end().dist(first.end()) > max_gap && eps > 1e-12 {
            eps /= 4.0;
            second = shoot(d, x, Point::polar(phi + eps), r)?;
        }
        if second.end().dist(first.end()) > max_gap || !is_minimizing(d, &second)? {
            r *= 0.6;
            continue;
        }
        let mut pair = NearbyPair { x, r, first, second };
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut pair.first, &mut pair.second);
        }
        return Ok(Some(pair));
    }
    Ok(None)
}

/// Margins of the angle-divergence claim on a left-normalized pair: every
/// `Pr(delta_i)` is non-positive and `|Pr(delta_i)|` never decreases.
/// Empty for an empty chain.
pub fn angle_divergence_margins(pair: &NearbyPair) -> Vec<f64> {
    let deltas: Vec<f64> = extract_chain(&pair.first, &pair.second)
        .divergence()
        .deltas
        .iter()
        .map(|a| a.radians())
        .collect();
    let mut out: Vec<f64> = deltas.iter().map(|d| -d).collect();
    out.extend(deltas.windows(2).map(|w| w[1].abs() - w[0].abs()));
    out
}

const PAIR_MAX_LENGTH: f64 = 2.0;

fn pair_trial(rng: &mut ChaCha8Rng) -> Result<Option<(VoronoiDomain, NearbyPair)>> {
    let d = random_domain(rng);
    let x = random_point(rng, &d, MIN_START_DELTA);
    Ok(nearby_pair(rng, &d, x, PAIR_MAX_LENGTH)?.map(|p| (d, p)))
}

pub fn check_angle_divergence(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("angle_divergence", salt::ANGLE, trials, seed, ANGLE_SLACK)
        .param("max_angle", NEARBY_MAX_ANGLE)
        .param("max_length", PAIR_MAX_LENGTH);
    Ok(t.run(exec, |_, rng| {
        let run = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            match pair_trial(rng)? {
                Some((_, p)) => Ok(angle_divergence_margins(&p.left_normalized()?)),
                None => Ok(vec![]),
            }
        };
        run(rng).into()
    }))
}

/// Largest sampled separation `max_t |gamma(t) - gamma~(t)|`.
pub fn max_deviation(a: &GeodesicPath, b: &GeodesicPath, samples: usize) -> f64 {
    let r = a.total_qh_len.min(b.total_qh_len);
    (0..=samples)
        .map(|j| {
            let t = r * j as f64 / samples as f64;
            a.eval(t).dist(b.eval(t))
        })
        .fold(0.0, f64::max)
}

/// `1 - deviation / (2 e^{2r} |y - z| (1 + slack))`.
pub fn divergence_margin(pair: &NearbyPair) -> f64 {
    let dev = max_deviation(&pair.first, &pair.second, DIVERGENCE_SAMPLES);
    let bound = 2.0 * (2.0 * pair.r).exp() * pair.gap() * (1.0 + DIVERGENCE_SLACK);
    if bound > 0.0 {
        1.0 - dev / bound
    } else {
        -dev
    }
}

pub fn check_divergence_bound(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("divergence_bound", salt::DIVERGENCE, trials, seed, 0.0)
        .param("gap_factor", NEARBY_GAP_FACTOR)
        .param("samples", DIVERGENCE_SAMPLES as f64)
        .param("slack", DIVERGENCE_SLACK);
    Ok(t.run(exec, |_, rng| {
        let run = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            Ok(pair_trial(rng)?.map_or_else(Vec::new, |(_, p)| vec![divergence_margin(&p)]))
        };
        run(rng).into()
    }))
}

/// Quasihyperbolic length of `t -> (a(t) + b(t)) / 2`, integrated piecewise
/// between the junctions of both paths.
pub fn average_path_length(d: &VoronoiDomain, a: &GeodesicPath, b: &GeodesicPath) -> Result<f64> {
    let r = a.total_qh_len.min(b.total_qh_len);
    let mut knots: Vec<f64> = (0..a.pieces.len())
        .map(|k| a.piece_offset(k))
        .chain((0..b.pieces.len()).map(|k| b.piece_offset(k)))
        .filter(|&t| t > 0.0 && t < r)
        .collect();
    knots.push(0.0);
    knots.push(r);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let f = |t: f64| {
        let v = (a.eval_velocity(t) + b.eval_velocity(t)) * 0.5;
        v.norm() / d.delta(a.eval(t).midpoint(b.eval(t)))
    };
    knots
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate(f, w[0], w[1], 1e-12 * (w[1] - w[0]).max(1e-3)))
        .sum()
}

/// Margins of the average-path bound `r + r C^2 |y-z|^2 / m^2` with
/// `C = 2 e^{2r}` and `m` the least sampled boundary distance along both
/// paths, for the average path and for `d_Q(x, (y+z)/2)`. Empty when the gap
/// exceeds `m / C`.
pub fn midpoint_margins(d: &VoronoiDomain, pair: &NearbyPair) -> Result<Vec<f64>> {
    let r = pair.r;
    let c = 2.0 * (2.0 * r).exp();
    let pts: Vec<Point> = pair.first.sample(DIVERGENCE_SAMPLES).into_iter().chain(pair.second.sample(DIVERGENCE_SAMPLES)).collect();
    let (m, _) = delta_range(d, &pts);
    let gap = pair.gap();
    if gap > m / c {
        return Ok(vec![]);
    }
    let bound = r + r * c * c * gap * gap / (m * m);
    let avg = average_path_length(d, &pair.first, &pair.second)?;
    let mid = qh_distance(d, pair.x, pair.first.end().midpoint(pair.second.end()))?;
    Ok(vec![bound - avg, bound - mid])
}

pub fn check_midpoint_bound(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("midpoint_bound", salt::MIDPOINT, trials, seed, MIDPOINT_EPS)
        .param("gap_factor", NEARBY_GAP_FACTOR)
        .param("max_length", PAIR_MAX_LENGTH);
    Ok(t.run(exec, |_, rng| {
        let run = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            match pair_trial(rng)? {
                Some((d, p)) => midpoint_margins(&d, &p),
                None => Ok(vec![]),
            }
        };
        run(rng).into()
    }))
}

/// `+min(1, relative gap to the runner-up)` for a unique connection and
/// `-(extra geodesics)` otherwise.
fn uniqueness_margin(d: &VoronoiDomain, x: Point, y: Point) -> Result<f64> {
    let res = connect(d, x, y)?;
    if !res.unique {
        return Ok(-((res.paths.len() - 1) as f64));
    }
    let best = res.distance;
    let runner_up = res
        .candidates
        .iter()
        .map(|s| s.length)
        .filter(|&l| l > best * (1.0 + 1e-7))
        .fold(f64::INFINITY, f64::min);
    Ok(((runner_up - best) / best).min(1.0))
}

pub fn check_uniqueness_below_pi(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("uniqueness_below_pi", salt::UNIQUE, trials, seed, 0.0).param("pi_margin", PI_MARGIN);
    Ok(t.run(exec, |_, rng| {
        let run = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            let d = random_domain(rng);
            let x = random_point(rng, &d, MIN_START_DELTA);
            for _ in 0..10 {
                // shot endpoints and independent points, whose geodesics
                // often run along edges
                let independent = if rng.gen_bool(0.5) { point_within(rng, &d, x, PI - PI_MARGIN)? } else { None };
                let y = match independent {
                    Some(y) => y,
                    None => {
                        let r = rng.gen_range(0.05..PI - PI_MARGIN);
                        shoot(&d, x, random_direction(rng), r)?.end()
                    }
                };
                if qh_distance(&d, x, y)? <= PI - PI_MARGIN {
                    return Ok(vec![uniqueness_margin(&d, x, y)?]);
                }
            }
            Ok(vec![])
        };
        run(rng).into()
    }))
}

/// The antipodal pair about a single nucleus must come back from the
/// ordinary multi-start search as exactly two geodesics of length `pi`.
pub fn check_uniqueness_sharpness(seed: u64) -> Result<VerificationReport> {
    let t = Trials::new("uniqueness_sharpness", salt::SHARP, 1, seed, 0.0);
    Ok(t.run(Execution::Serial, |_, _| {
        let run = || -> Result<Vec<f64>> {
            let d = VoronoiDomain::build(&[Point::ORIGIN])?;
            let res = connect(&d, Point::new(1.0, 0.0), Point::new(-1.0, 0.0))?;
            let ok = res.paths.len() == 2 && (res.distance - PI).abs() <= 1e-8;
            Ok(vec![if ok { 1.0 } else { -1.0 }])
        };
        run().into()
    }))
}

/// Margins of the canonical-speed identity `|gamma'| = delta(gamma)` and of
/// the 1-Lipschitz unit tangent at `samples + 1` equispaced parameters.
pub fn regularity_margins(d: &VoronoiDomain, g: &GeodesicPath, samples: usize) -> Vec<f64> {
    let r = g.total_qh_len;
    let ts: Vec<f64> = (0..=samples).map(|j| r * j as f64 / samples as f64).collect();
    let mut out: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let delta = d.delta(g.eval(t));
            -(g.eval_velocity(t).norm() - delta).abs() / delta
        })
        .collect();
    out.extend(ts.windows(2).map(|w| {
        let dt = w[1] - w[0];
        1.0 - g.eval_tangent(w[1]).dist(g.eval_tangent(w[0])) / dt
    }));
    out
}

pub fn check_regularity(trials: usize, seed: u64, exec: Execution) -> Result<VerificationReport> {
    require_trials(trials)?;
    let t = Trials::new("regularity", salt::REGULARITY, trials, seed, REGULARITY_TOL)
        .param("samples", DIVERGENCE_SAMPLES as f64);
    Ok(t.run(exec, |k, rng| {
        let run = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            let d = random_domain(rng);
            let x = random_point(rng, &d, MIN_START_DELTA);
            // odd trials take the minimizer to an independent point
            let independent = if k % 2 == 1 { point_within(rng, &d, x, REGULARITY_PAIR_BOUND)? } else { None };
            let g = if let Some(y) = independent {
                connect(&d, x, y)?.paths.swap_remove(0)
            } else {
                let r = rng.gen_range(0.05..3.0);
                shoot(&d, x, random_direction(rng), r)?
            };
            Ok(regularity_margins(&d, &g, DIVERGENCE_SAMPLES))
        };
        run(rng).into()
    }))
}

/// `min{1, m^3} (r~ - r) / (10^10 max{1, 4 e^{2r}})`.
pub fn c_constant(m: f64, r: f64, r_tilde: f64) -> Result<f64> {
    if !(m > 0.0 && r > 0.0 && r < r_tilde && r_tilde < r + 1.0) {
        return Err(QhError::Domain(format!(
            "c_constant needs m > 0 and 0 < r < r~ < r + 1, got m = {m}, r = {r}, r~ = {r_tilde}"
        )));
    }
    Ok(m.powi(3).min(1.0) * (r_tilde - r) / (1e10 * (4.0 * (2.0 * r).exp()).max(1.0)))
}

/// An independent random point joined to `x` by a polyline shorter than
/// `limit`, if one turns up in a few draws.
fn point_within(rng: &mut ChaCha8Rng, d: &VoronoiDomain, x: Point, limit: f64) -> Result<Option<Point>> {
    for _ in 0..10 {
        let y = random_point(rng, d, MIN_START_DELTA);
        if polyline_upper_bound(d, x, y)? <= limit {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(QhError::Input("at least one trial required".into()));
    }
    Ok(())
}
