//! Two-point geodesics by multi-start shooting and Newton refinement on
//! `(angle, length)`.

use std::f64::consts::{PI, TAU};

use crate::error::{QhError, Result};
use crate::geometry::{wrap, Point, Polyline};
use crate::spiral::{qh_length_of_polyline, SpiralOffset};
use crate::voronoi::{CellLocation, Line, VoronoiDomain};

use super::path::{EventKind, GeodesicPath, Piece};
use super::shoot::{depart, shoot};

/// Endpoint residual accepted by the solver, relative to `delta(y)`.
pub const CONNECT_RTOL: f64 = 1e-8;

/// Solutions closer than this in angle and length are the same geodesic.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Relative length window within which solutions count as minimizing.
pub const MIN_LENGTH_RTOL: f64 = 1e-7;

const NEWTON_MAX_ITER: usize = 40;
const FD_STEP: f64 = 1e-7;
const SAMPLES_PER_UNIT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectOptions {
    /// Number of equispaced shooting angles in the first round.
    pub n_starts: usize,
    /// Largest angle count tried when earlier rounds find nothing.
    pub max_starts: usize,
    /// Optional `(angle, length)` seed, typically from the grid oracle.
    pub seed: Option<(f64, f64)>,
    /// Also search geodesics that slide along an edge after a tangent
    /// contact and leave it before reaching `y`.
    pub slides: bool,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions { n_starts: 64, max_starts: 1024, seed: None, slides: true }
    }
}

/// A geodesic from `x` reaching `y`, with its shooting data.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub phi: f64,
    pub length: f64,
    pub residual: f64,
    pub path: GeodesicPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectResult {
    /// Distinct minimizing geodesics found.
    pub paths: Vec<GeodesicPath>,
    pub distance: f64,
    pub unique: bool,
    /// Every distinct locally geodesic solution found, shortest first.
    pub candidates: Vec<Solution>,
}

pub fn connect(d: &VoronoiDomain, x: Point, y: Point) -> Result<ConnectResult> {
    connect_with(d, x, y, &ConnectOptions::default())
}

pub fn qh_distance(d: &VoronoiDomain, x: Point, y: Point) -> Result<f64> {
    Ok(connect(d, x, y)?.distance)
}

/// Length of the shortest of a few simple polylines from `x` to `y`; an
/// upper bound for the distance.
pub fn polyline_upper_bound(d: &VoronoiDomain, x: Point, y: Point) -> Result<f64> {
    let m = x.midpoint(y);
    let n = (y - x).perp();
    let mut best = f64::INFINITY;
    let mut routes = vec![vec![x, y]];
    for w in [0.25, 0.5, 1.0, 2.0] {
        routes.push(vec![x, m + n * w, y]);
        routes.push(vec![x, m - n * w, y]);
    }
    for r in routes {
        if let Ok(p) = Polyline::new(r, false) {
            if let Ok(l) = qh_length_of_polyline(d, &p) {
                best = best.min(l);
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(QhError::Singularity(format!("no admissible polyline from {x:?} to {y:?}")))
    }
}

struct Solver<'a> {
    d: &'a VoronoiDomain,
    x: Point,
    y: Point,
    tol: f64,
}

/// Crossing structure of a shot, used to locate tangencies between
/// neighbouring shooting angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Edge(usize),
    Corner(usize),
    Slide(usize),
}

fn marks(p: &GeodesicPath) -> Vec<(Mark, f64)> {
    p.events
        .iter()
        .filter_map(|e| match (e.kind, e.location) {
            (EventKind::Crossing, CellLocation::Edge { edge }) => Some((Mark::Edge(edge), e.t)),
            (EventKind::Corner, CellLocation::Corner { corner }) => Some((Mark::Corner(corner), e.t)),
            (EventKind::SlidingStart, CellLocation::Edge { edge }) if e.t > 0.0 => Some((Mark::Slide(edge), e.t)),
            _ => None,
        })
        .collect()
}

fn first_difference(a: &[(Mark, f64)], b: &[(Mark, f64)]) -> Option<usize> {
    let n = a.len().min(b.len());
    (0..n).find(|&i| a[i].0 != b[i].0).or(if a.len() != b.len() { Some(n) } else { None })
}

fn same_prefix(a: &[(Mark, f64)], b: &[(Mark, f64)], i: usize) -> bool {
    a.len() > i && b.len() > i && (0..=i).all(|k| a[k].0 == b[k].0)
}

/// A geodesic from `x` that reaches `edge` tangentially at parameter `t`
/// after `slides` earlier straight parts.
struct Tangency {
    phi: f64,
    t: f64,
    edge: usize,
    s: f64,
    sense: f64,
    slides: usize,
    approach: GeodesicPath,
}

/// One-parameter family of shots searched for tangent contacts: shooting
/// angles at `x`, or slide lengths after a tangency before leaving the
/// edge into `cell`. `len` is the total length of each shot.
#[derive(Clone, Copy)]
enum Family<'t> {
    Angle { len: f64 },
    Departure { from: &'t Tangency, cell: usize, len: f64 },
}

impl Family<'_> {
    fn offset(&self) -> f64 {
        match self {
            Family::Angle { .. } => 0.0,
            Family::Departure { from, .. } => from.t,
        }
    }
}

/// Evaluation along a grid of step `h`: a unit step inside a spiral piece
/// multiplies `z - center` by the fixed complex factor `e^(h e^(i alpha))`.
struct GridWalk<'a> {
    path: &'a GeodesicPath,
    h: f64,
    piece: usize,
    end: f64,
    last: Point,
    factor: Option<(Point, Point)>,
}

impl<'a> GridWalk<'a> {
    fn new(path: &'a GeodesicPath, h: f64) -> Self {
        GridWalk { path, h, piece: usize::MAX, end: f64::NEG_INFINITY, last: path.start, factor: None }
    }

    fn point(&mut self, t: f64, unit_step: bool) -> Point {
        let within = self.piece < self.path.pieces.len() && t < self.end && t >= self.path.piece_offset(self.piece);
        if unit_step && within {
            if let Some((c, q)) = self.factor {
                let r = self.last - c;
                self.last = c + Point::new(r.x * q.x - r.y * q.y, r.x * q.y + r.y * q.x);
                return self.last;
            }
        }
        if !within {
            let m = self.path.pieces.len();
            let (mut lo, mut hi) = (0, m);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.path.piece_offset(mid) <= t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let k = lo;
            self.piece = k;
            self.end = if k + 1 < m { self.path.piece_offset(k + 1) } else { f64::INFINITY };
            self.factor = match self.path.pieces.get(k) {
                Some(Piece::Log { arc, .. }) => Some((arc.center, Point::polar(self.h * arc.alpha.sin()) * (self.h * arc.alpha.cos()).exp())),
                _ => None,
            };
        }
        self.last = self.path.eval(t);
        self.last
    }
}

/// Closest approach of a spiral piece to an edge of its cell that it does
/// not reach. `index` counts the marks before the piece and `gap` is the
/// offset relative to the boundary distance at the approach.
#[derive(Debug, Clone, Copy)]
struct NearMiss {
    edge: usize,
    index: usize,
    t: f64,
    gap: f64,
}

#[derive(Clone)]
struct Shot {
    a: f64,
    path: GeodesicPath,
    marks: Vec<(Mark, f64)>,
    near: Vec<NearMiss>,
}

fn near_misses(d: &VoronoiDomain, p: &GeodesicPath, marks: &[(Mark, f64)]) -> Vec<NearMiss> {
    let mut out = Vec::new();
    for (k, piece) in p.pieces.iter().enumerate() {
        let Piece::Log { cell, arc } = piece else { continue };
        let t0 = p.piece_offset(k);
        let index = marks.partition_point(|m| m.1 <= t0);
        let a = d.boundary()[*cell];
        for &ei in &d.cells()[*cell].edges {
            let e = &d.edges()[ei];
            let mut line = e.carrier;
            if line.offset(a) < 0.0 {
                line.dir = -line.dir;
            }
            let off = SpiralOffset::new(arc, &line);
            for tc in off.critical_points(arc.qh_len) {
                let f = off.value(tc);
                let h = 1e-6 * tc.max(1e-3);
                if !(f > 0.0 && off.derivative(tc - h) < 0.0 && off.derivative(tc + h) > 0.0) {
                    continue;
                }
                let q = arc.eval(tc);
                let s = e.carrier.param_of(q);
                let gap = f / d.delta(q);
                if s > e.lo && s < e.hi && gap < NEAR_MISS {
                    out.push(NearMiss { edge: ei, index, t: t0 + tc, gap });
                }
            }
        }
    }
    out
}

impl Solver<'_> {
    fn residual(&self, phi: f64, r: f64) -> Result<(GeodesicPath, Point)> {
        let p = shoot(self.d, self.x, Point::polar(phi), r)?;
        let f = p.end() - self.y;
        Ok((p, f))
    }

    fn family_shot(&self, fam: &Family, a: f64) -> Result<Shot> {
        let path = match *fam {
            Family::Angle { len } => shoot(self.d, self.x, Point::polar(a), len)?,
            Family::Departure { from, cell, len } => depart(self.d, from.edge, from.s, from.sense, a, cell, len - a)?,
        };
        let marks = marks(&path);
        let near = near_misses(self.d, &path, &marks);
        Ok(Shot { a, marks, near, path })
    }

    /// Damped Newton iteration on `(a, r)` for `f(a, r) = end - y`, where
    /// `r` extends the path and `a` stays in `[lo, hi]`. The `a` derivative
    /// is a finite difference.
    fn newton<F>(&self, f: F, a0: f64, r0: f64, (lo, hi): (f64, f64), a_cap: f64) -> Result<(f64, f64, GeodesicPath, f64)>
    where
        F: Fn(f64, f64) -> Result<(GeodesicPath, Point)>,
    {
        let (mut a, mut r) = (a0.clamp(lo, hi), r0.max(1e-12));
        let (mut path, mut res) = f(a, r)?;
        for it in 0..NEWTON_MAX_ITER {
            if res.norm() <= self.tol {
                return Ok((a, r, path, res.norm()));
            }
            let (ap, am) = ((a + FD_STEP).min(hi), (a - FD_STEP).max(lo));
            let (_, fp) = f(ap, r)?;
            let (_, fm) = f(am, r)?;
            let j_a = (fp - fm) / (ap - am);
            let j_r = path.eval_velocity(path.total_qh_len);
            let det = j_a.cross(j_r);
            if det == 0.0 || !det.is_finite() {
                return Err(QhError::Convergence { iterations: it, residual: res.norm() });
            }
            // solve [j_a j_r] (da, dr) = -res by Cramer's rule
            let mut da = -res.cross(j_r) / det;
            let mut dr = -j_a.cross(res) / det;
            let cap = (da.abs() / a_cap).max(dr.abs() / (0.5 * r.max(0.05))).max(1.0);
            da /= cap;
            dr /= cap;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let (na, nr) = ((a + lambda * da).clamp(lo, hi), r + lambda * dr);
                if nr > 0.0 {
                    let (cand, nf) = f(na, nr)?;
                    if nf.norm() < res.norm() {
                        a = na;
                        r = nr;
                        path = cand;
                        res = nf;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(QhError::Convergence { iterations: it, residual: res.norm() });
            }
        }
        if res.norm() <= self.tol {
            Ok((a, r, path, res.norm()))
        } else {
            Err(QhError::Convergence { iterations: NEWTON_MAX_ITER, residual: res.norm() })
        }
    }

    fn newton_shot(&self, phi0: f64, r0: f64) -> Result<Solution> {
        let f = |phi: f64, r: f64| self.residual(phi, r);
        let (phi, length, path, residual) = self.newton(f, phi0, r0, (f64::NEG_INFINITY, f64::INFINITY), 0.3)?;
        Ok(Solution { phi: wrap(phi), length, residual, path })
    }

    /// Local minima of `|gamma(t) - y|` for `t >= from` below `accept`, on
    /// a uniform grid. Since `|gamma'| = delta <= delta(y) + |gamma - y|`,
    /// grid points that provably stay above `accept` are skipped; they could
    /// neither be reported nor hide a reported minimum.
    fn close_passes(&self, p: &GeodesicPath, from: f64, accept: f64) -> Vec<(f64, f64)> {
        let len = p.total_qh_len - from;
        if len <= 0.0 {
            return Vec::new();
        }
        let n = ((len * SAMPLES_PER_UNIT).ceil() as usize).max(16);
        let h = len / n as f64;
        let dy = self.d.delta(self.y);
        let at = |k: usize| from + len * k as f64 / n as f64;
        let mut walk = GridWalk::new(p, h);
        let mut out = Vec::new();
        let (mut left, mut k) = (f64::INFINITY, 0);
        let mut v = walk.point(at(0), false).dist(self.y);
        while k < n {
            let jump = if v > accept { (((v + dy) / (accept + dy)).ln() / h).floor() as usize } else { 0 };
            let next = (k + jump.max(1)).min(n);
            let w = walk.point(at(next), next == k + 1).dist(self.y);
            if k > 0 && v <= left && v <= w && v <= accept {
                out.push((v, at(k)));
            }
            left = v;
            v = w;
            k = next;
        }
        if v <= left && v <= accept {
            out.push((v, at(n)));
        }
        out
    }

    /// Lower bound for the length from any point of `edge` to `y`.
    fn edge_to_target_bound(&self, edge: usize) -> f64 {
        let e = &self.d.edges()[edge];
        let s = e.carrier.param_of(self.y).clamp(e.lo, e.hi);
        (self.y.dist(e.carrier.at(s)) / self.d.delta(self.y)).ln_1p()
    }

    fn mark_bound(&self, m: Mark) -> f64 {
        match m {
            Mark::Edge(e) | Mark::Slide(e) => self.edge_to_target_bound(e),
            Mark::Corner(c) => self.d.corners()[c]
                .edges
                .iter()
                .map(|&e| self.edge_to_target_bound(e))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Tangent contacts between the family members `a` and `b`, found by
    /// bisecting on the first change of their crossing structure.
    #[allow(clippy::too_many_arguments)]
    fn tangencies_between(
        &self,
        fam: &Family,
        a: &Shot,
        b: &Shot,
        bound: f64,
        depth: usize,
        budget: &mut usize,
        out: &mut Vec<Tangency>,
    ) -> Result<()> {
        let Some(i) = first_difference(&a.marks, &b.marks) else { return Ok(()) };
        if depth > TANGENCY_DEPTH || *budget == 0 {
            return Ok(());
        }
        // the contact lies after the last shared event
        let t_low = if i > 0 { a.marks[i - 1].1.min(b.marks[i - 1].1) } else { 0.0 };
        let lb = [a.marks.get(i), b.marks.get(i)]
            .into_iter()
            .flatten()
            .map(|&(m, _)| self.mark_bound(m))
            .fold(f64::INFINITY, f64::min);
        if fam.offset() + t_low + lb > bound {
            return Ok(());
        }
        *budget -= 1;
        let (reference, mut yes, mut no) = if a.marks.len() > i { (&a.marks, a.a, b.a) } else { (&b.marks, b.a, a.a) };
        let mut yes_shot: Option<Shot> = None;
        let mut no_shot: Option<Shot> = None;
        for _ in 0..BISECTION_MAX {
            if (yes - no).abs() <= 4.0 * f64::EPSILON * yes.abs().max(1.0) {
                break;
            }
            let mid = 0.5 * (yes + no);
            let sh = self.family_shot(fam, mid)?;
            if same_prefix(&sh.marks, reference, i) {
                yes = mid;
                yes_shot = Some(sh);
            } else {
                no = mid;
                no_shot = Some(sh);
            }
        }
        let yes_shot = match yes_shot {
            Some(s) => s,
            None => self.family_shot(fam, yes)?,
        };
        let no_shot = match no_shot {
            Some(s) => s,
            None => self.family_shot(fam, no)?,
        };
        for sh in [&yes_shot, &no_shot] {
            if let Some(tg) = self.tangency_at(fam, sh, i) {
                let known = out.iter().any(|o| {
                    o.edge == tg.edge && o.sense == tg.sense && (o.t - tg.t).abs() <= CLUSTER_TOL && o.approach.end().dist(tg.approach.end()) <= CLUSTER_TOL * self.d.delta(tg.approach.end())
                });
                if !known && tg.t + self.edge_to_target_bound(tg.edge) <= bound {
                    out.push(tg);
                }
            }
        }
        // further structure changes on either side of the located one
        let (near_a, near_b) = if (yes_shot.a - a.a).abs() < (no_shot.a - a.a).abs() {
            (&yes_shot, &no_shot)
        } else {
            (&no_shot, &yes_shot)
        };
        self.tangencies_between(fam, a, near_a, bound, depth + 1, budget, out)?;
        self.tangencies_between(fam, near_b, b, bound, depth + 1, budget, out)
    }

    /// Edge crossings confined to the inside of the gap between `a` and
    /// `b`, where a near miss in one of the shots dips through the edge.
    /// Each one is searched by golden section on the gap and its ends are
    /// located by [`Self::tangencies_between`].
    #[allow(clippy::too_many_arguments)]
    fn bumps_between(&self, fam: &Family, a: &Shot, b: &Shot, bound: f64, budget: &mut usize, out: &mut Vec<Tangency>) -> Result<()> {
        let mut keys: Vec<(usize, usize, f64)> = Vec::new();
        for nm in a.near.iter().chain(&b.near) {
            match keys.iter_mut().find(|k| k.0 == nm.edge && k.1 == nm.index) {
                Some(k) => k.2 = k.2.min(nm.t),
                None => keys.push((nm.edge, nm.index, nm.t)),
            }
        }
        for (edge, index, t) in keys {
            if *budget == 0 {
                return Ok(());
            }
            if a.marks.len() < index || b.marks.len() < index || a.marks[..index] != b.marks[..index] {
                continue;
            }
            if fam.offset() + t + self.edge_to_target_bound(edge) > bound {
                continue;
            }
            *budget -= 1;
            let reference = &a.marks;
            // gap of the approach, or the shot if it crosses the edge
            let probe = |x: f64| -> Result<(f64, Option<Shot>)> {
                let sh = self.family_shot(fam, x)?;
                if sh.marks.len() < index || sh.marks[..index] != reference[..index] {
                    return Ok((f64::INFINITY, None));
                }
                if sh.marks.get(index).map(|m| m.0) == Some(Mark::Edge(edge)) {
                    return Ok((-1.0, Some(sh)));
                }
                let g = sh
                    .near
                    .iter()
                    .filter(|n| n.edge == edge && n.index == index)
                    .map(|n| n.gap)
                    .fold(f64::INFINITY, f64::min);
                Ok((g, None))
            };
            const R: f64 = 0.618_033_988_749_894_9;
            let (mut lo, mut hi) = (a.a, b.a);
            let mut x1 = hi - R * (hi - lo);
            let mut x2 = lo + R * (hi - lo);
            let (mut f1, mut s1) = probe(x1)?;
            let (mut f2, mut s2) = probe(x2)?;
            let mut hit = s1.take().or(s2.take());
            for _ in 0..GOLDEN_MAX {
                if hit.is_some() || (hi - lo).abs() <= 1e-14 * lo.abs().max(1.0) {
                    break;
                }
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - R * (hi - lo);
                    (f1, s1) = probe(x1)?;
                    hit = s1.take();
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + R * (hi - lo);
                    (f2, s2) = probe(x2)?;
                    hit = s2.take();
                }
            }
            if let Some(c) = hit {
                self.tangencies_between(fam, a, &c, bound, 1, budget, out)?;
                self.tangencies_between(fam, &c, b, bound, 1, budget, out)?;
            }
        }
        Ok(())
    }

    /// The `i`-th crossing of `sh` if it is nearly tangent to its edge away
    /// from the edge ends.
    fn tangency_at(&self, fam: &Family, sh: &Shot, i: usize) -> Option<Tangency> {
        let (Mark::Edge(edge), t) = *sh.marks.get(i)? else { return None };
        let e = &self.d.edges()[edge];
        let v = sh.path.eval_tangent(t);
        if v.cross(e.carrier.dir).abs() > TANGENCY_SIN {
            return None;
        }
        let (head, t) = tangent_head(&sh.path, t, e.carrier).or_else(|| Some((sh.path.truncate(t).ok()?, t)))?;
        let s = e.carrier.param_of(head.end());
        let margin = END_MARGIN * e.h.hypot(s);
        if s <= e.lo + margin || s >= e.hi - margin {
            return None;
        }
        let sense = if head.end_tangent().dot(e.carrier.dir) >= 0.0 { 1.0 } else { -1.0 };
        Some(match *fam {
            Family::Angle { .. } => Tangency { phi: sh.a, t, edge, s, sense, slides: 0, approach: head },
            Family::Departure { from, .. } => Tangency {
                phi: from.phi,
                t: from.t + t,
                edge,
                s,
                sense,
                slides: from.slides + 1,
                approach: from.approach.concat(&head),
            },
        })
    }

    /// Geodesics that follow the tangency `tg`, slide on its edge and leave
    /// it towards `y`. Tangent contacts met after leaving are collected in
    /// `next` when further slides are allowed.
    #[allow(clippy::too_many_arguments)]
    fn slide_solutions(
        &self,
        tg: &Tangency,
        bound: f64,
        accept: f64,
        budget: &mut usize,
        sols: &mut Vec<Solution>,
        next: &mut Vec<Tangency>,
    ) -> Result<()> {
        let e = &self.d.edges()[tg.edge];
        let u0 = (tg.s / e.h).asinh();
        let end = if tg.sense > 0.0 { e.hi } else { e.lo };
        let to_end = if end.is_finite() { ((end / e.h).asinh() - u0).abs() } else { f64::INFINITY };
        let len = bound - tg.t;
        let lam_max = to_end.min(len - self.edge_to_target_bound(tg.edge));
        if !(lam_max >= 0.0) {
            return Ok(());
        }
        let lam_hi = lam_max.min(to_end * (1.0 - 1e-9));
        let n = ((lam_hi / SLIDE_STEP).ceil() as usize).max(1);
        for &cell in &e.neighbors {
            let fam = Family::Departure { from: tg, cell, len };
            let f = |lam: f64, r: f64| -> Result<(GeodesicPath, Point)> {
                let p = depart(self.d, tg.edge, tg.s, tg.sense, lam, cell, r)?;
                let res = p.end() - self.y;
                Ok((p, res))
            };
            let mut grid = Vec::with_capacity(n + 1);
            let mut starts = Vec::new();
            for k in 0..=n {
                let sh = self.family_shot(&fam, lam_hi * k as f64 / n as f64)?;
                for (dist, t) in self.close_passes(&sh.path, sh.a, accept) {
                    starts.push((dist, sh.a, t - sh.a));
                }
                grid.push(sh);
            }
            starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut found: Vec<(f64, f64)> = Vec::new();
            for (_, lam, r) in starts {
                if found.iter().any(|&(l, q)| (l - lam).abs() <= 2.0 * SLIDE_STEP && (q - r).abs() <= 0.25 * q.max(0.05)) {
                    continue;
                }
                match self.newton(f, lam, r, (0.0, lam_hi), SLIDE_STEP) {
                    Ok((lam, r, dep, residual)) => {
                        found.push((lam, r));
                        sols.push(Solution { phi: tg.phi, length: tg.t + lam + r, residual, path: tg.approach.concat(&dep) });
                    }
                    Err(QhError::Convergence { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            if tg.slides + 1 < MAX_SLIDES {
                for w in grid.windows(2) {
                    self.tangencies_between(&fam, &w[0], &w[1], bound, 0, budget, next)?;
                    self.bumps_between(&fam, &w[0], &w[1], bound, budget, next)?;
                }
            }
        }
        Ok(())
    }
}

/// `path` cut where the spiral piece ending with a shallow crossing at `t`
/// is parallel to `line`. The contact point is off the line by the square
/// of the crossing angle.
fn tangent_head(path: &GeodesicPath, t: f64, line: Line) -> Option<(GeodesicPath, f64)> {
    let k = (0..path.pieces.len()).rev().find(|&k| path.piece_offset(k) < t)?;
    let Piece::Log { cell, arc } = path.pieces[k] else { return None };
    let local = t - path.piece_offset(k);
    let off = SpiralOffset::new(&arc, &line);
    let tm = off
        .critical_points(2.0 * local + 0.1)
        .into_iter()
        .min_by(|a, b| (a - local).abs().total_cmp(&(b - local).abs()))?;
    if (tm - local).abs() > 0.1 * local.max(1e-3) {
        return None;
    }
    let mut pieces = path.pieces[..k].to_vec();
    pieces.push(Piece::Log { cell, arc: arc.with_len(tm) });
    let events = path.events.iter().copied().filter(|e| e.t < t).collect();
    let head = GeodesicPath::assemble(path.start, path.start_tangent, pieces, events);
    let t = head.total_qh_len;
    Some((head, t))
}

/// Shots whose tangent at a crossing is this close (sine) to the edge
/// direction are taken as tangent contacts.
const TANGENCY_SIN: f64 = 1e-5;
const END_MARGIN: f64 = 1e-6;
const BISECTION_MAX: usize = 60;
const TANGENCY_DEPTH: usize = 12;
const TANGENCY_BUDGET: usize = 96;
const MAX_TANGENCIES: usize = 48;
/// Largest number of straight parts on a searched geodesic.
pub const MAX_SLIDES: usize = 3;
const SLIDE_STEP: f64 = 0.05;
/// Near misses closer than this, relative to the boundary distance, are
/// searched for crossings between neighbouring shots.
const NEAR_MISS: f64 = 0.5;
const GOLDEN_MAX: usize = 40;

fn same(d: &VoronoiDomain, a: &Solution, b: &Solution) -> bool {
    if (a.length - b.length).abs() > CLUSTER_TOL * a.length.max(1.0) {
        return false;
    }
    [0.25, 0.5, 0.75].iter().all(|&f| {
        let (p, q) = (a.path.eval(f * a.length), b.path.eval(f * b.length));
        p.dist(q) <= CLUSTER_TOL * d.delta(p).max(d.delta(q))
    })
}

pub fn connect_with(d: &VoronoiDomain, x: Point, y: Point, opts: &ConnectOptions) -> Result<ConnectResult> {
    for p in [x, y] {
        if !p.is_finite() || d.delta(p) <= 0.0 {
            return Err(QhError::Domain(format!("{p:?} is not a point of the domain")));
        }
    }
    if x == y {
        let path = shoot(d, x, Point::new(1.0, 0.0), 0.0)?;
        let sol = Solution { phi: 0.0, length: 0.0, residual: 0.0, path: path.clone() };
        return Ok(ConnectResult { paths: vec![path], distance: 0.0, unique: true, candidates: vec![sol] });
    }
    let upper = polyline_upper_bound(d, x, y)?;
    let mut sols: Vec<Solution> = Vec::new();
    let mut best_residual = f64::INFINITY;
    let merge = |found: Vec<Solution>, sols: &mut Vec<Solution>| {
        for s in found {
            if !sols.iter().any(|o| same(d, o, &s)) {
                sols.push(s);
            }
        }
    };
    // a minimizer may only be reachable from one end when it slides along
    // edges, so both ends are searched; without edges nothing slides
    let slides = opts.slides && !d.edges().is_empty();
    let opts = &ConnectOptions { slides, ..opts.clone() };
    for scale in [1, 4] {
        let (fwd, r1) = search(d, x, y, opts, upper, scale, false)?;
        best_residual = best_residual.min(r1);
        merge(fwd, &mut sols);
        if opts.slides {
            let (bwd, r2) = search(d, y, x, opts, upper, scale, false)?;
            best_residual = best_residual.min(r2);
            let mut back = Vec::with_capacity(bwd.len());
            for s in bwd {
                let path = s.path.reversed()?;
                back.push(Solution { phi: path.start_tangent.arg(), length: s.length, residual: s.residual, path });
            }
            merge(back, &mut sols);
        }
        if !sols.is_empty() || !opts.slides {
            break;
        }
    }
    if sols.is_empty() {
        let (last, r) = search(d, x, y, opts, upper, 1, true)?;
        best_residual = best_residual.min(r);
        merge(last, &mut sols);
    }
    if sols.is_empty() {
        return Err(QhError::Convergence { iterations: opts.max_starts, residual: best_residual });
    }
    sols.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.phi.total_cmp(&b.phi)));
    let distance = sols[0].length;
    let paths: Vec<GeodesicPath> = sols
        .iter()
        .filter(|s| s.length <= distance * (1.0 + MIN_LENGTH_RTOL) + 1e-12)
        .map(|s| s.path.clone())
        .collect();
    Ok(ConnectResult { unique: paths.len() == 1, paths, distance, candidates: sols })
}

/// Geodesics from `x` to `y` found by shooting from `x`: single shots, and
/// shots that slide along edges after tangent contacts. `scale` multiplies
/// the angle grid and the tangency budget. With `exhaustive`, pure shooting
/// continues with denser grids up to `opts.max_starts` and no close-pass
/// threshold.
fn search(d: &VoronoiDomain, x: Point, y: Point, opts: &ConnectOptions, upper: f64, scale: usize, exhaustive: bool) -> Result<(Vec<Solution>, f64)> {
    // endpoint tolerance shrinks with the distance so short pairs keep
    // their relative accuracy
    let solver = Solver { d, x, y, tol: CONNECT_RTOL * d.delta(y) * upper.min(1.0) };
    let window = upper * 1.05 + 1e-3;

    let mut sols: Vec<Solution> = Vec::new();
    let mut best_residual = f64::INFINITY;
    let add = |s: Solution, sols: &mut Vec<Solution>| {
        if !sols.iter().any(|o| same(d, o, &s)) {
            sols.push(s);
        }
    };
    let mut seeds = vec![((y - x).arg(), upper.min(window))];
    if let Some(s) = opts.seed {
        seeds.insert(0, s);
    }
    for (phi, r) in seeds {
        match solver.newton_shot(phi, r) {
            Ok(s) => add(s, &mut sols),
            Err(QhError::Convergence { residual, .. }) => best_residual = best_residual.min(residual),
            Err(e) => return Err(e),
        }
    }

    let mut n = opts.n_starts.max(4) * scale;
    let mut accept = d.delta(y);
    let mut first_round = true;
    loop {
        let spacing = TAU / n as f64;
        let fam = Family::Angle { len: window };
        let mut starts = Vec::new();
        let mut grid = Vec::with_capacity(n + 1);
        for k in 0..n {
            let sh = solver.family_shot(&fam, -PI + spacing * k as f64)?;
            for (dist, t) in solver.close_passes(&sh.path, 0.0, accept) {
                starts.push((dist, sh.a, t));
            }
            grid.push(sh);
        }
        starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        for (_, phi, t) in starts {
            let covered = sols
                .iter()
                .any(|s| wrap(s.phi - phi).abs() <= spacing && (s.length - t).abs() <= 0.25 * s.length);
            if covered {
                continue;
            }
            match solver.newton_shot(phi, t) {
                Ok(s) => add(s, &mut sols),
                Err(QhError::Convergence { residual, .. }) => best_residual = best_residual.min(residual),
                Err(e) => return Err(e),
            }
        }
        if first_round && opts.slides && !exhaustive {
            let best = sols.iter().map(|s| s.length).fold(upper, f64::min);
            let mut bound = (best * (1.0 + 1e-6) + 1e-12).min(window);
            let mut budget = TANGENCY_BUDGET * scale;
            let mut pending = Vec::new();
            let mut wrapped = grid[0].clone();
            wrapped.a += TAU;
            grid.push(wrapped);
            for w in grid.windows(2) {
                solver.tangencies_between(&fam, &w[0], &w[1], bound, 0, &mut budget, &mut pending)?;
                solver.bumps_between(&fam, &w[0], &w[1], bound, &mut budget, &mut pending)?;
            }
            let mut done = 0;
            while done < pending.len() && done < MAX_TANGENCIES * scale {
                let mut slid = Vec::new();
                let mut next = Vec::new();
                solver.slide_solutions(&pending[done], bound, d.delta(y), &mut budget, &mut slid, &mut next)?;
                pending.extend(next);
                for s in slid {
                    bound = bound.min(s.length * (1.0 + 1e-6) + 1e-12);
                    add(s, &mut sols);
                }
                done += 1;
            }
        }
        first_round = false;
        if !exhaustive || !sols.is_empty() || n >= opts.max_starts {
            break;
        }
        n *= 4;
        accept = f64::INFINITY;
    }
    Ok((sols, best_residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spiral::punctured_distance;
    use std::f64::consts::{E, FRAC_PI_2, PI};

    #[test]
    fn punctured_examples() {
        let d = VoronoiDomain::build(&[Point::ORIGIN]).unwrap();
        let c = connect(&d, Point::new(1.0, 0.0), Point::new(0.0, 1.0)).unwrap();
        assert!(c.unique);
        assert!((c.distance - FRAC_PI_2).abs() < 1e-9);

        let c = connect(&d, Point::new(1.0, 0.0), Point::new(-1.0, 0.0)).unwrap();
        assert!(!c.unique);
        assert_eq!(c.paths.len(), 2);
        assert!((c.distance - PI).abs() < 1e-9);

        let y = Point::new(E * 0.3f64.cos(), E * 0.3f64.sin());
        let c = connect(&d, Point::new(1.0, 0.0), y).unwrap();
        let exact = punctured_distance(Point::ORIGIN, Point::new(1.0, 0.0), y).unwrap();
        assert!((c.distance - exact).abs() < 1e-8 * exact);
        assert_eq!(qh_distance(&d, y, y).unwrap(), 0.0);
    }

    #[test]
    fn bisector_pair_is_unique_and_not_beaten_by_polylines() {
        let d = VoronoiDomain::build(&[Point::new(0.0, -1.0), Point::new(0.0, 1.0)]).unwrap();
        let (x, y) = (Point::new(-2.0, 0.0), Point::new(2.0, 0.0));
        let c = connect(&d, x, y).unwrap();
        assert!(c.unique);
        assert!((c.distance - 2.0 * 2f64.asinh()).abs() < 1e-9);
        for bump in [0.05, -0.05, 0.2] {
            let p = Polyline::new((0..=40).map(|k| {
                let s = -2.0 + 0.1 * k as f64;
                Point::new(s, bump * (1.0 - (s / 2.0).powi(2)))
            }).collect(), false).unwrap();
            assert!(qh_length_of_polyline(&d, &p).unwrap() >= c.distance);
        }
    }

    #[test]
    fn slide_beats_every_single_shot() {
        let d = VoronoiDomain::build(&[Point::new(0.0, -1.0), Point::new(0.0, 1.0)]).unwrap();
        let (x, y) = (Point::new(-3.0, 0.1), Point::new(3.0, 0.1));
        let c = connect(&d, x, y).unwrap();
        let pure = connect_with(&d, x, y, &ConnectOptions { slides: false, ..Default::default() }).unwrap();
        assert!(c.distance < pure.distance - 0.05, "{} vs {}", c.distance, pure.distance);
        let g = &c.paths[0];
        assert!(g.pieces.iter().any(|p| matches!(p, super::super::Piece::Straight { .. })));
        let quad = qh_length_of_polyline(&d, &g.to_polyline(4000).unwrap()).unwrap();
        assert!((quad - c.distance).abs() < 1e-6 * c.distance);
        let back = connect(&d, y, x).unwrap();
        assert!((back.distance - c.distance).abs() < 1e-8 * c.distance);
    }

    #[test]
    fn rejects_boundary_points() {
        let d = VoronoiDomain::build(&[Point::ORIGIN]).unwrap();
        assert!(connect(&d, Point::ORIGIN, Point::new(1.0, 0.0)).is_err());
    }
}
