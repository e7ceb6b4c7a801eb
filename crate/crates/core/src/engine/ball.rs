use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QhError, Result};
use crate::geometry::Point;
use crate::voronoi::VoronoiDomain;

use super::path::GeodesicPath;
use super::shoot::shoot;

pub const MIN_BALL_SAMPLES: usize = 16;

/// Cap on samples after adaptive refinement.
pub const MAX_BALL_SAMPLES: usize = 1 << 16;

/// Angular gaps below this are never split further.
const MIN_ANGLE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSample {
    pub phi: f64,
    pub endpoint: Point,
    #[serde(skip)]
    pub path: GeodesicPath,
}

/// Sampled boundary of the quasihyperbolic ball, ordered by shooting angle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QhBall {
    pub center: Point,
    pub radius: f64,
    pub samples: Vec<BallSample>,
}

impl QhBall {
    pub fn boundary_points(&self) -> Vec<Point> {
        self.samples.iter().map(|s| s.endpoint).collect()
    }

    /// Whether the closed boundary polygon turns the same way at every
    /// vertex (cross products of consecutive edges never change sign).
    pub fn is_convex(&self) -> bool {
        is_convex_polygon(&self.boundary_points())
    }
}

pub fn is_convex_polygon(v: &[Point]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let (mut pos, mut neg) = (false, false);
    for k in 0..n {
        let a = v[k];
        let b = v[(k + 1) % n];
        let c = v[(k + 2) % n];
        let z = (b - a).cross(c - b);
        pos |= z > 0.0;
        neg |= z < 0.0;
    }
    !(pos && neg)
}

fn shoot_all(d: &VoronoiDomain, x: Point, r: f64, phis: &[f64], parallel: bool) -> Result<Vec<BallSample>> {
    let one = |&phi: &f64| -> Result<BallSample> {
        let path = shoot(d, x, Point::polar(phi), r)?;
        Ok(BallSample { phi, endpoint: path.end(), path })
    };
    if parallel {
        phis.par_iter().map(one).collect()
    } else {
        phis.iter().map(one).collect()
    }
}

/// Trace the boundary of `B_Q(x, r)` by shooting `n` equispaced directions,
/// splitting angular gaps whose endpoints are farther apart than
/// `scale / 100`.
pub fn trace_ball(d: &VoronoiDomain, x: Point, r: f64, n: usize, parallel: bool) -> Result<QhBall> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(QhError::Input(format!("ball radius {r} must be positive")));
    }
    if n < MIN_BALL_SAMPLES {
        return Err(QhError::Input(format!("at least {MIN_BALL_SAMPLES} samples required, got {n}")));
    }
    let step = std::f64::consts::TAU / n as f64;
    let phis: Vec<f64> = (0..n).map(|k| -std::f64::consts::PI + step * k as f64).collect();
    let mut samples = shoot_all(d, x, r, &phis, parallel)?;
    let max_gap = d.scale() / 100.0;
    loop {
        let m = samples.len();
        let mut new_phis = Vec::new();
        for k in 0..m {
            let (a, b) = (&samples[k], &samples[(k + 1) % m]);
            let hi = if k + 1 == m { b.phi + std::f64::consts::TAU } else { b.phi };
            if a.endpoint.dist(b.endpoint) > max_gap && hi - a.phi > MIN_ANGLE_GAP {
                new_phis.push(0.5 * (a.phi + hi));
            }
        }
        if new_phis.is_empty() || m + new_phis.len() > MAX_BALL_SAMPLES {
            break;
        }
        for p in &mut new_phis {
            if *p >= std::f64::consts::PI {
                *p -= std::f64::consts::TAU;
            }
        }
        samples.extend(shoot_all(d, x, r, &new_phis, parallel)?);
        samples.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    }
    Ok(QhBall { center: x, radius: r, samples })
}
