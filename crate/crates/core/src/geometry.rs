//! Planar primitives and the angle calculus used throughout the crate.
//!
//! Angles follow the convention `ang(x, y) = arg(x) - arg(y)` reduced to the
//! principal range `(-pi, pi]`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};

/// Values this close to `-pi` are folded onto `pi`.
pub const PR_BOUNDARY_EPS: f64 = 1e-12;

/// Per-step angular tolerance for [`curving_sign`].
pub const CURVING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at angle `phi`.
    #[inline]
    pub fn polar(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Point { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is
    /// counter-clockwise from `self`.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    /// Counter-clockwise rotation by a quarter turn.
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    #[inline]
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn lerp(self, o: Point, s: f64) -> Point {
        self + (o - self) * s
    }

    #[inline]
    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Mirror image across the line through `origin` with unit direction `dir`.
    pub fn reflect_across(self, origin: Point, dir: Point) -> Point {
        let v = self - origin;
        let along = dir * v.dot(dir);
        origin + along * 2.0 - v
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Point {
    fn sub_assign(&mut self, o: Point) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    #[inline]
    fn div(self, s: f64) -> Point {
        Point::new(self.x / s, self.y / s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// An angle reduced to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrincipalAngle(f64);

impl PrincipalAngle {
    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<PrincipalAngle> for f64 {
    fn from(a: PrincipalAngle) -> f64 {
        a.0
    }
}

/// Infallible principal-value reduction for finite inputs.
#[inline]
pub fn wrap(theta: f64) -> f64 {
    let mut r = theta.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    if r <= -PI + PR_BOUNDARY_EPS {
        r = PI;
    }
    r
}

/// Principal value of `theta` modulo `2 pi`, in `(-pi, pi]`.
pub fn pr(theta: f64) -> Result<PrincipalAngle> {
    if !theta.is_finite() {
        return Err(QhError::Domain(format!("non-finite angle {theta}")));
    }
    Ok(PrincipalAngle(wrap(theta)))
}

/// Signed angle from `y` to `x`: `Pr(arg x - arg y)`.
pub fn ang(x: Point, y: Point) -> Result<PrincipalAngle> {
    if x.norm_sq() == 0.0 || y.norm_sq() == 0.0 {
        return Err(QhError::Domain("ang of a zero vector".into()));
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(QhError::Domain("ang of a non-finite vector".into()));
    }
    Ok(PrincipalAngle(ang_unchecked(x, y)))
}

/// `ang` without argument validation.
#[inline]
pub fn ang_unchecked(x: Point, y: Point) -> f64 {
    wrap(y.cross(x).atan2(y.dot(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Parallel,
}

/// Whether `x` points left or right from `y`.
pub fn points_left(x: Point, y: Point) -> Result<Side> {
    let a = ang(x, y)?.radians();
    Ok(if a == 0.0 || a == PI {
        Side::Parallel
    } else if a > 0.0 {
        Side::Left
    } else {
        Side::Right
    })
}

/// A polygonal chain, optionally closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
    closed: bool,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(QhError::Input("polyline needs at least 2 vertices".into()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(QhError::Input("non-finite polyline vertex".into()));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(QhError::Input(format!(
                "consecutive vertices {i} and {} coincide",
                i + 1
            )));
        }
        Ok(Polyline { vertices, closed })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segments in traversal order, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count)
            .map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
            .filter(|(a, b)| a != b)
    }

    pub fn euclidean_length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline {
            vertices: v,
            closed: self.closed,
        }
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Winding number of a closed polyline about `z`.
///
/// Sums the principal angles subtended by each segment, each of which lies in
/// `(-pi, pi)` when `z` is off the segment, so the total is an exact multiple
/// of `2 pi` up to rounding.
pub fn winding_number(loop_: &Polyline, z: Point, tol: f64) -> Result<i64> {
    if !loop_.is_closed() {
        return Err(QhError::Input("winding number needs a closed polyline".into()));
    }
    let mut total = 0.0;
    for (a, b) in loop_.segments() {
        let d = point_segment_distance(z, a, b);
        if d <= tol {
            return Err(QhError::AmbiguousPosition { distance: d });
        }
        total += ang_unchecked(b - z, a - z);
    }
    Ok((total / TAU).round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curving {
    Left,
    Right,
    Mixed,
}

/// Result of [`curving_sign`]. `straight` is set when every increment is
/// within tolerance of zero; such paths are reported as [`Curving::Left`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurvingReport {
    pub sign: Curving,
    pub straight: bool,
}

/// Classify sampled unit tangents as left curving, right curving or mixed.
pub fn curving_sign(tangents: &[Point], tol: f64) -> Result<CurvingReport> {
    if tangents.len() < 3 {
        return Err(QhError::InsufficientData(format!(
            "curving_sign needs >= 3 tangent samples, got {}",
            tangents.len()
        )));
    }
    let mut left = true;
    let mut right = true;
    for w in tangents.windows(2) {
        let d = ang(w[1], w[0])?.radians();
        if d < -tol {
            left = false;
        }
        if d > tol {
            right = false;
        }
    }
    let sign = match (left, right) {
        (true, _) => Curving::Left,
        (false, true) => Curving::Right,
        (false, false) => Curving::Mixed,
    };
    Ok(CurvingReport {
        sign,
        straight: left && right,
    })
}
