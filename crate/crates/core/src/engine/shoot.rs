//! Geodesic shooting across Voronoi cells.
//!
//! Inside a cell a geodesic is the spiral about the cell nucleus. At a
//! transversal edge crossing the tangent is kept and the spiral angle is
//! recomputed for the neighbouring nucleus. A shot that starts on an edge
//! with tangent along it slides on the edge until the edge ends; a spiral
//! that merely touches an edge from inside its cell keeps going. Corners
//! pick the incident cell whose spiral with the current tangent stays
//! inside it.

use crate::error::{QhError, Result};
use crate::geometry::Point;
use crate::spiral::{LineContact, SpiralArc, SpiralOffset, StraightArc};
use crate::voronoi::{CellLocation, Line, VoronoiDomain, LOCATE_TOL};

use super::path::{EventKind, GeodesicPath, Piece, ShootEvent};

/// Maximum number of pieces in a single shot.
pub const MAX_PIECES: usize = 10_000;

/// Tangents this close (sine of the angle) to an edge count as parallel.
pub const PARALLEL_TOL: f64 = 1e-9;

/// Probe step for a corner continuation whose tangent lies in no sector.
pub const CORNER_PROBE: f64 = 1e-6;

/// Initial parameter window in which a departing spiral ignores its edge.
const DEPARTURE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    InCell(usize),
    Slide { edge: usize, sense: f64 },
}

enum Exit {
    Edge(usize),
    Corner(usize),
}

struct Shooter<'a> {
    d: &'a VoronoiDomain,
    loc_tol: f64,
    pieces: Vec<Piece>,
    events: Vec<ShootEvent>,
    t: f64,
    /// Edge the first spiral leaves tangentially; its contact at the start
    /// is not an exit.
    departing: Option<usize>,
}

/// Shoot the geodesic from `x` with initial direction `dir` for
/// quasihyperbolic length `r`.
pub fn shoot(d: &VoronoiDomain, x: Point, dir: Point, r: f64) -> Result<GeodesicPath> {
    if !x.is_finite() {
        return Err(QhError::Domain("non-finite start point".into()));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(QhError::Domain(format!("length {r} must be finite and nonnegative")));
    }
    let u = dir
        .normalized()
        .ok_or_else(|| QhError::Domain("zero shooting direction".into()))?;
    if d.delta(x) <= 0.0 {
        return Err(QhError::Domain(format!("start point {x:?} is a boundary point")));
    }
    let mut s = Shooter::new(d);
    if r > 0.0 {
        let mode = s.initial_mode(x, u);
        s.run(x, u, mode, r)?;
    }
    Ok(GeodesicPath::assemble(x, u, s.pieces, s.events))
}

/// Geodesic that slides along `edge` from carrier offset `s` in direction
/// `sense` for quasihyperbolic length `slide`, then leaves the edge
/// tangentially into the neighbouring `cell` and continues for length `r`.
pub fn depart(d: &VoronoiDomain, edge: usize, s: f64, sense: f64, slide: f64, cell: usize, r: f64) -> Result<GeodesicPath> {
    let e = d
        .edges()
        .get(edge)
        .ok_or_else(|| QhError::Domain(format!("no edge {edge}")))?
        .clone();
    let Some(other) = e.other(cell) else {
        return Err(QhError::Domain(format!("cell {cell} does not border edge {edge}")));
    };
    if !(slide >= 0.0 && r >= 0.0 && slide.is_finite() && r.is_finite() && s.is_finite()) {
        return Err(QhError::Domain(format!("invalid departure data s = {s}, slide = {slide}, r = {r}")));
    }
    let sense = if sense >= 0.0 { 1.0 } else { -1.0 };
    let u = e.carrier.dir * sense;
    let start = e.carrier.at(s);
    let mut sh = Shooter::new(d);
    let mut p = start;
    if slide > 0.0 {
        let mut arc = StraightArc::new(edge, e.carrier, s, s, e.h)?;
        arc.s_end = e.h * ((s / e.h).asinh() + sense * slide).sinh();
        let slack = 1e-12 * e.h.max(arc.s_end.abs());
        if arc.s_end < e.lo - slack || arc.s_end > e.hi + slack {
            return Err(QhError::Domain(format!("slide of length {slide} runs past the end of edge {edge}")));
        }
        sh.event(CellLocation::Edge { edge }, EventKind::SlidingStart, (other, cell), false);
        sh.push(Piece::Straight { arc })?;
        p = arc.eval(slide);
    }
    sh.event(CellLocation::Edge { edge }, EventKind::SlidingEnd, (other, cell), false);
    if r > 0.0 {
        sh.departing = Some(edge);
        sh.run(p, u, Mode::InCell(cell), slide + r)?;
    }
    Ok(GeodesicPath::assemble(start, u, sh.pieces, sh.events))
}

/// Endpoint of the shot in direction angle `phi`.
pub fn exp_map(d: &VoronoiDomain, x: Point, phi: f64, r: f64) -> Result<Point> {
    Ok(shoot(d, x, Point::polar(phi), r)?.end())
}

/// Continue `path` from its end with its terminal tangent for `extra`.
pub fn prolong(d: &VoronoiDomain, path: &GeodesicPath, extra: f64) -> Result<GeodesicPath> {
    if extra == 0.0 {
        return Ok(path.clone());
    }
    let tail = shoot(d, path.end(), path.end_tangent(), extra)?;
    Ok(path.concat(&tail))
}

impl<'a> Shooter<'a> {
    fn new(d: &'a VoronoiDomain) -> Self {
        Shooter { d, loc_tol: LOCATE_TOL * d.scale(), pieces: Vec::new(), events: Vec::new(), t: 0.0, departing: None }
    }

    fn event(&mut self, location: CellLocation, kind: EventKind, cells: (usize, usize), flagged: bool) {
        self.events.push(ShootEvent { t: self.t, location, kind, cells, flagged });
    }

    fn push(&mut self, piece: Piece) -> Result<()> {
        if piece.qh_len() <= 0.0 {
            return Ok(());
        }
        if self.pieces.len() >= MAX_PIECES {
            return Err(QhError::Convergence { iterations: MAX_PIECES, residual: self.t });
        }
        self.t += piece.qh_len();
        self.pieces.push(piece);
        Ok(())
    }

    fn run(&mut self, x: Point, u: Point, mode: Mode, r: f64) -> Result<()> {
        let mut p = x;
        let mut u = u;
        let mut mode = mode;
        // bound on consecutive zero-length steps, guarding against cycling
        let mut idle = 0;
        // remainders at round-off level would add slivers that no longer
        // advance `t`
        let floor = 8.0 * f64::EPSILON * r.max(1.0);
        while r - self.t > floor {
            let rem = r - self.t;
            let before = self.pieces.len();
            let (next_p, next_u, next_mode) = match mode {
                Mode::InCell(cell) => self.spiral_step(cell, p, u, rem)?,
                Mode::Slide { edge, sense } => self.slide_step(edge, sense, p, rem)?,
            };
            match next_mode {
                None => break,
                Some(m) => {
                    idle = if self.pieces.len() == before { idle + 1 } else { 0 };
                    if idle > 64 {
                        return Err(QhError::Convergence { iterations: idle, residual: rem });
                    }
                    p = next_p;
                    u = next_u;
                    mode = m;
                }
            }
        }
        Ok(())
    }

    fn initial_mode(&mut self, p: Point, u: Point) -> Mode {
        match self.d.locate(p, self.loc_tol) {
            CellLocation::Interior { cell } => Mode::InCell(cell),
            CellLocation::Edge { edge } => self.edge_mode(edge, p, u, None),
            CellLocation::Corner { corner } => {
                let from = self.d.nearest(p).0;
                self.corner_mode(corner, p, u, from)
            }
        }
    }

    /// Continuation from a point on the open edge `edge`.
    fn edge_mode(&mut self, edge: usize, _p: Point, u: Point, from: Option<usize>) -> Mode {
        let e = &self.d.edges()[edge];
        let c = e.carrier.dir.cross(u);
        if c.abs() <= PARALLEL_TOL {
            let sense = if u.dot(e.carrier.dir) >= 0.0 { 1.0 } else { -1.0 };
            let from = from.unwrap_or(e.neighbors[0]);
            self.event(CellLocation::Edge { edge }, EventKind::SlidingStart, (from, e.neighbors[1]), false);
            return Mode::Slide { edge, sense };
        }
        // neighbors[0] lies on the left of the carrier direction
        let to = if c > 0.0 { e.neighbors[0] } else { e.neighbors[1] };
        if let Some(f) = from {
            if f != to {
                self.event(CellLocation::Edge { edge }, EventKind::Crossing, (f, to), false);
            }
        }
        Mode::InCell(to)
    }

    fn corner_mode(&mut self, corner: usize, p: Point, u: Point, from: usize) -> Mode {
        let c = &self.d.corners()[corner];
        // an outgoing edge along the tangent continues as a slide
        for &ei in &c.edges {
            let e = &self.d.edges()[ei];
            let outward = if e.ends[0] == Some(corner) {
                e.carrier.dir
            } else if e.ends[1] == Some(corner) {
                -e.carrier.dir
            } else {
                continue;
            };
            if outward.cross(u).abs() <= PARALLEL_TOL && outward.dot(u) > 0.0 {
                let sense = outward.dot(e.carrier.dir);
                self.event(CellLocation::Corner { corner }, EventKind::Corner, (from, e.neighbors[0]), false);
                self.event(CellLocation::Edge { edge: ei }, EventKind::SlidingStart, (e.neighbors[0], e.neighbors[1]), false);
                return Mode::Slide { edge: ei, sense };
            }
        }
        // the tangent enters the sector of cell k when it points inward
        // across every edge of k at the corner
        let mut best: Option<(f64, usize)> = None;
        let mut admissible = 0;
        for &k in &c.cells {
            let a = self.d.boundary()[k];
            let score = c
                .edges
                .iter()
                .filter(|ei| self.d.cells()[k].edges.contains(ei))
                .map(|&ei| {
                    let line = self.d.edges()[ei].carrier;
                    line.dir.cross(u) * line.offset(a).signum()
                })
                .fold(f64::INFINITY, f64::min);
            if score > 0.0 {
                admissible += 1;
            }
            if best.map_or(true, |(b, _)| score > b) {
                best = Some((score, k));
            }
        }
        let to = match best {
            Some((_, k)) => k,
            None => self.d.nearest(p + u * (CORNER_PROBE * self.d.delta(p))).0,
        };
        self.event(CellLocation::Corner { corner }, EventKind::Corner, (from, to), admissible != 1);
        Mode::InCell(to)
    }

    fn spiral_step(&mut self, cell: usize, p: Point, u: Point, rem: f64) -> Result<(Point, Point, Option<Mode>)> {
        let a = self.d.boundary()[cell];
        let arc = SpiralArc::through(a, p, u, rem)?;
        let mut exit: Option<(f64, usize)> = None;
        let mut touches: Vec<(f64, usize)> = Vec::new();
        let departing = self.departing.take();
        for &ei in &self.d.cells()[cell].edges {
            let e = &self.d.edges()[ei];
            let mut line: Line = e.carrier;
            if line.offset(a) < 0.0 {
                line.dir = -line.dir;
            }
            let off = SpiralOffset::new(&arc, &line);
            let tol = 1e-11 * e.h.max(arc.rho0);
            // contacts of a departing spiral with its own edge near the start
            // are the tangency itself
            let guard = if departing == Some(ei) { DEPARTURE_GUARD } else { -1.0 };
            let t_exit = if guard < 0.0 && off.value(0.0) <= tol && off.derivative(0.0) < 0.0 {
                Some(0.0)
            } else {
                let mut first = None;
                for c in off.contacts(rem, tol) {
                    let t = match c {
                        LineContact::Crossing { t, .. } | LineContact::Touching { t } => t,
                    };
                    if t <= guard {
                        continue;
                    }
                    match c {
                        LineContact::Crossing { t, rising: false } => {
                            first = Some(t);
                            break;
                        }
                        LineContact::Touching { t } => touches.push((t, ei)),
                        LineContact::Crossing { .. } => {}
                    }
                }
                first
            };
            if let Some(t) = t_exit {
                if exit.map_or(true, |(b, _)| t < b) {
                    exit = Some((t, ei));
                }
            }
        }
        let len = exit.map_or(rem, |(t, _)| t.min(rem));
        touches.sort_by(|x, y| x.0.total_cmp(&y.0));
        let t0 = self.t;
        for (t, ei) in touches {
            if t >= len {
                break;
            }
            let e = &self.d.edges()[ei];
            let s = e.carrier.param_of(arc.eval(t));
            if s >= e.lo - self.loc_tol && s <= e.hi + self.loc_tol {
                self.events.push(ShootEvent {
                    t: t0 + t,
                    location: CellLocation::Edge { edge: ei },
                    kind: EventKind::Touching,
                    cells: (cell, cell),
                    flagged: false,
                });
            }
        }
        self.push(Piece::Log { cell, arc: arc.with_len(len) })?;
        let Some((t_exit, ei)) = exit.filter(|&(t, _)| t < rem) else {
            return Ok((arc.eval(len), arc.eval_tangent(len), None));
        };
        let q = arc.eval(t_exit);
        let v = arc.eval_tangent(t_exit);
        let next = match self.exit_kind(ei, q) {
            Exit::Corner(c) => self.corner_mode(c, q, v, cell),
            Exit::Edge(e) => {
                let m = self.edge_mode(e, q, v, Some(cell));
                if m == Mode::InCell(cell) {
                    // numerically tangent exit: let the neighbour take over
                    let other = self.d.edges()[e].other(cell).expect("edge of own cell");
                    self.event(CellLocation::Edge { edge: e }, EventKind::Crossing, (cell, other), true);
                    Mode::InCell(other)
                } else {
                    m
                }
            }
        };
        Ok((q, v, Some(next)))
    }

    fn exit_kind(&self, edge: usize, q: Point) -> Exit {
        let e = &self.d.edges()[edge];
        let s = e.carrier.param_of(q);
        for (k, end) in [e.lo, e.hi].into_iter().enumerate() {
            if let Some(c) = e.ends[k] {
                if (s - end).abs() <= self.loc_tol || self.d.corners()[c].point.dist(q) <= self.loc_tol {
                    return Exit::Corner(c);
                }
            }
        }
        Exit::Edge(edge)
    }

    fn slide_step(&mut self, edge: usize, sense: f64, p: Point, rem: f64) -> Result<(Point, Point, Option<Mode>)> {
        let e = self.d.edges()[edge].clone();
        let s0 = e.carrier.param_of(p);
        let (target, end_corner) = if sense > 0.0 { (e.hi, e.ends[1]) } else { (e.lo, e.ends[0]) };
        let to_end = if target.is_finite() {
            ((target / e.h).asinh() - (s0 / e.h).asinh()).abs()
        } else {
            f64::INFINITY
        };
        let u = e.carrier.dir * sense;
        if rem <= to_end || end_corner.is_none() {
            let mut arc = StraightArc::new(edge, e.carrier, s0, s0, e.h)?;
            arc.s_end = e.h * ((s0 / e.h).asinh() + sense * rem).sinh();
            self.push(Piece::Straight { arc })?;
            return Ok((arc.eval(rem), u, None));
        }
        let arc = StraightArc::new(edge, e.carrier, s0, target, e.h)?;
        self.push(Piece::Straight { arc })?;
        let c = end_corner.expect("finite end has a corner");
        let q = self.d.corners()[c].point;
        self.event(CellLocation::Edge { edge }, EventKind::SlidingEnd, (e.neighbors[0], e.neighbors[1]), false);
        let next = self.corner_mode(c, q, u, e.neighbors[0]);
        Ok((q, u, Some(next)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spiral::qh_length_of_polyline;
    use std::f64::consts::{E, FRAC_PI_2};

    fn single() -> VoronoiDomain {
        VoronoiDomain::build(&[Point::ORIGIN]).unwrap()
    }

    #[test]
    fn radial_and_circular_shots() {
        let d = single();
        let g = shoot(&d, Point::new(1.0, 0.0), Point::new(1.0, 0.0), 1.0).unwrap();
        assert_eq!(g.pieces.len(), 1);
        assert!(g.end().dist(Point::new(E, 0.0)) < 1e-14);
        let y = exp_map(&d, Point::new(1.0, 0.0), FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(y.dist(Point::new(0.0, 1.0)) < 1e-14);
        let z = shoot(&d, Point::new(1.0, 0.0), Point::new(0.0, 1.0), 0.0).unwrap();
        assert!(z.pieces.is_empty() && z.end() == Point::new(1.0, 0.0));
        assert!(shoot(&d, Point::ORIGIN, Point::new(1.0, 0.0), 1.0).is_err());
        assert!(shoot(&d, Point::new(1.0, 0.0), Point::ORIGIN, 1.0).is_err());
    }

    #[test]
    fn slides_along_the_bisector() {
        let d = VoronoiDomain::build(&[Point::new(0.0, -1.0), Point::new(0.0, 1.0)]).unwrap();
        let r = 2.0 * 2f64.asinh();
        let g = shoot(&d, Point::new(-2.0, 0.0), Point::new(1.0, 0.0), r).unwrap();
        assert_eq!(g.pieces.len(), 1);
        assert!(matches!(g.pieces[0], Piece::Straight { .. }));
        assert!(g.end().dist(Point::new(2.0, 0.0)) < 1e-12);
        assert_eq!(g.events[0].kind, EventKind::SlidingStart);
    }

    #[test]
    fn departure_leaves_the_edge_tangentially() {
        let d = VoronoiDomain::build(&[Point::new(0.0, -1.0), Point::new(0.0, 1.0)]).unwrap();
        let e = &d.edges()[0];
        let up = if e.neighbors[0] == 1 { 0 } else { 1 };
        let cell = e.neighbors[up];
        let slide = 0.4;
        let g = depart(&d, 0, -1.0, 1.0, slide, cell, 1.0).unwrap();
        assert!((g.total_qh_len - 1.4).abs() < 1e-12);
        assert!(matches!(g.pieces[0], Piece::Straight { .. }));
        let q = g.eval(slide);
        assert!((e.carrier.param_of(q) - (((-1.0f64).asinh() + slide).sinh())).abs() < 1e-12);
        let turn = g.pieces[0].tangent(slide).dist(g.pieces[1].tangent(0.0));
        assert!(turn < 1e-12);
        // the spiral bends into the chosen cell and stays away from the edge
        for k in 1..=20 {
            let p = g.eval(slide + k as f64 / 20.0);
            assert_eq!(d.nearest(p).0, cell);
        }
        assert!(matches!(g.pieces[1], Piece::Log { cell: c, .. } if c == cell));
        assert!(depart(&d, 0, 0.0, 1.0, 0.1, 7, 1.0).is_err());
    }

    #[test]
    fn crossing_keeps_tangent_and_alpha_switches_nucleus() {
        let d = VoronoiDomain::build(&[Point::new(-1.0, 0.0), Point::new(1.0, 0.0)]).unwrap();
        let x = Point::new(-0.5, 0.3);
        let g = shoot(&d, x, Point::polar(0.2), 3.0).unwrap();
        assert!(g.pieces.len() >= 2);
        let crossing = g.events.iter().find(|e| e.kind == EventKind::Crossing).unwrap();
        let t = crossing.t;
        assert!(g.eval(t).x.abs() < 1e-12);
        let before = g.pieces[0].tangent(g.pieces[0].qh_len());
        let after = g.pieces[1].tangent(0.0);
        assert!(before.dist(after) < 1e-12);
        assert!((g.total_qh_len - 3.0).abs() < 1e-12);
    }

    #[test]
    fn shot_length_matches_quadrature() {
        let pts = [
            Point::new(0.1, 0.2),
            Point::new(0.8, 0.3),
            Point::new(0.4, 0.9),
            Point::new(0.6, 0.55),
            Point::new(0.15, 0.7),
            Point::new(0.9, 0.85),
        ];
        let d = VoronoiDomain::build(&pts).unwrap();
        for k in 0..12 {
            let phi = 0.5 * k as f64 + 0.1;
            let g = shoot(&d, Point::new(0.45, 0.4), Point::polar(phi), 2.5).unwrap();
            let poly = g.to_polyline(4000).unwrap();
            let l = qh_length_of_polyline(&d, &poly).unwrap();
            assert!((l - 2.5).abs() < 1e-6, "phi {phi}: {l}");
        }
    }

    #[test]
    fn corner_exit_just_off_an_edge_enters_the_sector() {
        // four cells meet at the origin along the axes
        let d = VoronoiDomain::build(&[Point::new(1.0, 1.0), Point::new(-1.0, 1.0), Point::new(-1.0, -1.0), Point::new(1.0, -1.0)]).unwrap();
        for eps in [1e-7, -1e-7, 1e-8] {
            let g = shoot(&d, Point::ORIGIN, Point::polar(eps), 0.5).unwrap();
            let nucleus = Point::new(1.0, eps.signum());
            let want = d.nearest(nucleus).0;
            assert!(matches!(g.pieces[0], Piece::Log { cell, .. } if cell == want), "eps {eps}");
            assert!(g.end().y * eps >= 0.0);
        }
    }
}
