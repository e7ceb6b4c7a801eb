use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};
use crate::geometry::{Point, Polyline};
use crate::spiral::{SpiralArc, StraightArc};
use crate::voronoi::CellLocation;

/// One analytic piece of a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Piece {
    /// Logarithmic part inside `cell`.
    Log { cell: usize, arc: SpiralArc },
    /// Straight part along a Voronoi edge.
    Straight { arc: StraightArc },
}

impl Piece {
    pub fn qh_len(&self) -> f64 {
        match self {
            Piece::Log { arc, .. } => arc.qh_len,
            Piece::Straight { arc } => arc.qh_len(),
        }
    }

    pub fn eval(&self, t: f64) -> Point {
        match self {
            Piece::Log { arc, .. } => arc.eval(t),
            Piece::Straight { arc } => arc.eval(t),
        }
    }

    pub fn tangent(&self, t: f64) -> Point {
        match self {
            Piece::Log { arc, .. } => arc.eval_tangent(t),
            Piece::Straight { arc } => arc.eval_tangent(t),
        }
    }

    pub fn velocity(&self, t: f64) -> Point {
        match self {
            Piece::Log { arc, .. } => arc.velocity(t),
            Piece::Straight { arc } => arc.velocity(t),
        }
    }

    pub fn start(&self) -> Point {
        self.eval(0.0)
    }

    pub fn end(&self) -> Point {
        self.eval(self.qh_len())
    }

    /// The same piece cut to length `len` (measured from its start).
    pub fn truncated(&self, len: f64) -> Piece {
        match *self {
            Piece::Log { cell, arc } => Piece::Log { cell, arc: arc.with_len(len) },
            Piece::Straight { arc } => {
                let s_end = arc.offset_at(len);
                Piece::Straight { arc: StraightArc { s_end, ..arc } }
            }
        }
    }

    /// The remainder of the piece after parameter `t0`.
    pub fn tail(&self, t0: f64) -> Piece {
        match *self {
            Piece::Log { cell, arc } => {
                let p = arc.eval(t0) - arc.center;
                Piece::Log {
                    cell,
                    arc: SpiralArc {
                        rho0: p.norm(),
                        theta0: arc.argument(t0),
                        qh_len: (arc.qh_len - t0).max(0.0),
                        ..arc
                    },
                }
            }
            Piece::Straight { arc } => Piece::Straight { arc: StraightArc { s_start: arc.offset_at(t0), ..arc } },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Crossing,
    Touching,
    SlidingStart,
    SlidingEnd,
    Corner,
}

/// A junction or contact event along a shot geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootEvent {
    pub t: f64,
    pub location: CellLocation,
    pub kind: EventKind,
    /// Cells before and after the event.
    pub cells: (usize, usize),
    /// Set when the continuation rule had no unique answer.
    pub flagged: bool,
}

/// A canonically parametrized geodesic `[0, total_qh_len] -> domain`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub start: Point,
    pub start_tangent: Point,
    pub total_qh_len: f64,
    pub pieces: Vec<Piece>,
    pub events: Vec<ShootEvent>,
    #[serde(skip)]
    offsets: Vec<f64>,
}

impl GeodesicPath {
    pub(crate) fn assemble(start: Point, start_tangent: Point, pieces: Vec<Piece>, events: Vec<ShootEvent>) -> Self {
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            offsets.push(acc);
            acc += p.qh_len();
        }
        GeodesicPath { start, start_tangent, total_qh_len: acc, pieces, events, offsets }
    }

    /// Parameter at which piece `k` starts.
    pub fn piece_offset(&self, k: usize) -> f64 {
        self.offsets[k]
    }

    /// Index of the piece containing `t` and the local parameter.
    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if self.pieces.is_empty() {
            return None;
        }
        let t = t.clamp(0.0, self.total_qh_len);
        let k = self.offsets.partition_point(|&o| o <= t).saturating_sub(1);
        let local = (t - self.offsets[k]).min(self.pieces[k].qh_len());
        Some((k, local))
    }

    fn check(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.total_qh_len.max(1.0);
        if !(t >= -slack && t <= self.total_qh_len + slack) {
            return Err(QhError::Parameter { value: t, lo: 0.0, hi: self.total_qh_len });
        }
        Ok(())
    }

    /// Point at `t`, clamped to the parameter window.
    pub fn eval(&self, t: f64) -> Point {
        match self.locate(t) {
            Some((k, s)) => self.pieces[k].eval(s),
            None => self.start,
        }
    }

    pub fn eval_tangent(&self, t: f64) -> Point {
        match self.locate(t) {
            Some((k, s)) => self.pieces[k].tangent(s),
            None => self.start_tangent,
        }
    }

    pub fn eval_velocity(&self, t: f64) -> Point {
        match self.locate(t) {
            Some((k, s)) => self.pieces[k].velocity(s),
            None => Point::ORIGIN,
        }
    }

    pub fn point(&self, t: f64) -> Result<Point> {
        self.check(t)?;
        Ok(self.eval(t))
    }

    pub fn tangent(&self, t: f64) -> Result<Point> {
        self.check(t)?;
        Ok(self.eval_tangent(t))
    }

    pub fn end(&self) -> Point {
        self.pieces.last().map_or(self.start, Piece::end)
    }

    pub fn end_tangent(&self) -> Point {
        self.pieces
            .last()
            .map_or(self.start_tangent, |p| p.tangent(p.qh_len()))
    }

    /// Points at `n + 1` equispaced parameters.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        let n = n.max(1);
        (0..=n).map(|k| self.eval(self.total_qh_len * k as f64 / n as f64)).collect()
    }

    /// Fine polyline through the path: `per_unit` vertices per unit of
    /// quasihyperbolic length on every piece, and all junctions.
    pub fn to_polyline(&self, per_unit: usize) -> Result<Polyline> {
        let mut v = vec![self.start];
        for p in &self.pieces {
            let n = ((p.qh_len() * per_unit as f64).ceil() as usize).max(1);
            for k in 1..=n {
                let q = p.eval(p.qh_len() * k as f64 / n as f64);
                if q != *v.last().unwrap() {
                    v.push(q);
                }
            }
        }
        if v.len() < 2 {
            return Err(QhError::InsufficientData("path has zero length".into()));
        }
        Polyline::new(v, false)
    }

    /// Path restricted to `[0, t]`.
    pub fn truncate(&self, t: f64) -> Result<GeodesicPath> {
        self.check(t)?;
        let t = t.clamp(0.0, self.total_qh_len);
        let mut pieces = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let o = self.offsets[k];
            if o >= t {
                break;
            }
            if o + p.qh_len() <= t {
                pieces.push(*p);
            } else {
                pieces.push(p.truncated(t - o));
            }
        }
        let events = self.events.iter().copied().filter(|e| e.t <= t).collect();
        Ok(GeodesicPath::assemble(self.start, self.start_tangent, pieces, events))
    }

    /// Concatenation with a path starting at this path's end.
    pub fn concat(&self, tail: &GeodesicPath) -> GeodesicPath {
        let shift = self.total_qh_len;
        let mut pieces = self.pieces.clone();
        pieces.extend(tail.pieces.iter().copied());
        let mut events = self.events.clone();
        events.extend(tail.events.iter().map(|e| ShootEvent { t: e.t + shift, ..*e }));
        GeodesicPath::assemble(self.start, self.start_tangent, pieces, events)
    }

    /// The same curve run backwards from its end.
    pub fn reversed(&self) -> Result<GeodesicPath> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in self.pieces.iter().rev() {
            pieces.push(match *p {
                Piece::Log { cell, arc } => {
                    let back = SpiralArc::through(arc.center, p.end(), -p.tangent(p.qh_len()), arc.qh_len)?;
                    Piece::Log { cell, arc: back }
                }
                Piece::Straight { arc } => Piece::Straight { arc: StraightArc { s_start: arc.s_end, s_end: arc.s_start, ..arc } },
            });
        }
        let total = self.total_qh_len;
        let events = self
            .events
            .iter()
            .rev()
            .map(|e| ShootEvent {
                t: (total - e.t).max(0.0),
                kind: match e.kind {
                    EventKind::SlidingStart => EventKind::SlidingEnd,
                    EventKind::SlidingEnd => EventKind::SlidingStart,
                    k => k,
                },
                cells: (e.cells.1, e.cells.0),
                ..*e
            })
            .collect();
        Ok(GeodesicPath::assemble(self.end(), -self.end_tangent(), pieces, events))
    }

    /// Cells of the logarithmic pieces in order, with straight pieces
    /// reported as `None`.
    pub fn cell_sequence(&self) -> Vec<Option<usize>> {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Log { cell, .. } => Some(*cell),
                Piece::Straight { .. } => None,
            })
            .collect()
    }

    pub fn has_flagged_events(&self) -> bool {
        self.events.iter().any(|e| e.flagged)
    }
}
