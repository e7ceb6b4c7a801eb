//! Common-cell chains of two geodesics and their angle divergence.

use serde::Serialize;

use crate::engine::{GeodesicPath, Piece};
use crate::geometry::{pr, PrincipalAngle};
use crate::voronoi::CellLocation;

/// A maximal stretch of a path inside one cell: an optional straight part
/// followed by a logarithmic part.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    cell: usize,
    entry_edge: Option<usize>,
    start: f64,
    end: f64,
    alpha: f64,
}

fn segments(path: &GeodesicPath) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    let mut pending: Option<(f64, usize)> = None;
    let mut prev_log_cell = None;
    for (k, piece) in path.pieces.iter().enumerate() {
        let o = path.piece_offset(k);
        match piece {
            Piece::Straight { arc } => {
                pending.get_or_insert((o, arc.edge));
                prev_log_cell = None;
            }
            Piece::Log { cell, arc } => {
                let end = o + arc.qh_len;
                if prev_log_cell == Some(*cell) {
                    out.last_mut().expect("previous segment").end = end;
                    continue;
                }
                let (start, entry_edge) = match pending.take() {
                    Some((s, e)) => (s, Some(e)),
                    None => (o, edge_event_at(path, o)),
                };
                out.push(Segment { cell: *cell, entry_edge, start, end, alpha: arc.nucleus_angle() });
                prev_log_cell = Some(*cell);
            }
        }
    }
    out
}

fn edge_event_at(path: &GeodesicPath, t: f64) -> Option<usize> {
    if t == 0.0 {
        return None;
    }
    let tol = 1e-12 * t.max(1.0);
    path.events.iter().find_map(|e| match e.location {
        CellLocation::Edge { edge } if (e.t - t).abs() <= tol => Some(edge),
        _ => None,
    })
}

/// Cells visited by both geodesics in the same order, with their parameter
/// windows and spiral angles about each shared nucleus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonCellChain {
    pub cells: Vec<usize>,
    /// Entry edges of `cells[1..]`; `None` when entered through a corner.
    pub edges: Vec<Option<usize>>,
    /// Parameter windows `[(t_i, t_{i+1}), (t~_i, t~_{i+1})]` per cell.
    pub t_params: Vec<[(f64, f64); 2]>,
    /// `ang(tangent, nucleus - point)` per cell for both geodesics.
    pub alphas: Vec<[f64; 2]>,
}

impl CommonCellChain {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn divergence(&self) -> AngleDivergence {
        let deltas = self
            .alphas
            .iter()
            .map(|[a, b]| pr(a - b).expect("finite spiral angles"))
            .collect();
        AngleDivergence { deltas }
    }
}

/// Principal differences `alpha_i - alpha~_i` along a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleDivergence {
    pub deltas: Vec<PrincipalAngle>,
}

/// Longest common prefix of the two paths' cell segments. A segment is a
/// logarithmic part inside one cell, possibly preceded by a slide along an
/// edge of that cell. Different first cells give an empty chain.
pub fn extract_chain(a: &GeodesicPath, b: &GeodesicPath) -> CommonCellChain {
    let (sa, sb) = (segments(a), segments(b));
    let mut chain = CommonCellChain { cells: vec![], edges: vec![], t_params: vec![], alphas: vec![] };
    for (p, q) in sa.iter().zip(&sb) {
        if p.cell != q.cell {
            break;
        }
        if !chain.cells.is_empty() {
            chain.edges.push(p.entry_edge.or(q.entry_edge));
        }
        chain.cells.push(p.cell);
        chain.t_params.push([(p.start, p.end), (q.start, q.end)]);
        chain.alphas.push([p.alpha, q.alpha]);
    }
    chain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::shoot;
    use crate::geometry::Point;
    use crate::voronoi::VoronoiDomain;

    fn domain() -> VoronoiDomain {
        VoronoiDomain::build(&[
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.1),
            Point::new(0.4, 0.9),
            Point::new(-0.6, 0.7),
            Point::new(0.3, -0.8),
        ])
        .unwrap()
    }

    #[test]
    fn identical_paths_give_own_sequence() {
        let d = domain();
        let g = shoot(&d, Point::new(0.2, 0.3), Point::polar(0.4), 2.5).unwrap();
        let c = extract_chain(&g, &g);
        let cells: Vec<usize> = g.cell_sequence().into_iter().flatten().fold(vec![], |mut v, c| {
            if v.last() != Some(&c) {
                v.push(c);
            }
            v
        });
        assert!(c.len() >= 2);
        assert_eq!(c.cells, cells);
        assert_eq!(c.edges.len(), c.len() - 1);
        assert!(c.edges.iter().all(Option::is_some));
        assert!(c.divergence().deltas.iter().all(|d| d.radians() == 0.0));
    }

    #[test]
    fn nearby_shots_share_cells() {
        let d = domain();
        let x = Point::new(0.2, 0.3);
        let g = shoot(&d, x, Point::polar(0.4), 2.5).unwrap();
        let h = shoot(&d, x, Point::polar(0.4 + 1e-5), 2.5).unwrap();
        let c = extract_chain(&g, &h);
        assert_eq!(c, extract_chain(&g, &h));
        assert_eq!(c.len(), extract_chain(&g, &g).len());
        let first = c.divergence().deltas[0].radians();
        assert!((first + 1e-5).abs() < 1e-12);
    }

    #[test]
    fn different_first_cells_give_empty_chain() {
        let d = domain();
        let g = shoot(&d, Point::new(0.1, 0.0), Point::polar(0.0), 1.0).unwrap();
        let h = shoot(&d, Point::new(0.9, 0.1), Point::polar(0.0), 1.0).unwrap();
        assert!(extract_chain(&g, &h).is_empty());
    }

    #[test]
    fn punctured_chain_is_constant() {
        let d = VoronoiDomain::build(&[Point::ORIGIN]).unwrap();
        let g = shoot(&d, Point::new(1.0, 0.0), Point::polar(1.0), 2.0).unwrap();
        let h = shoot(&d, Point::new(1.0, 0.0), Point::polar(1.0 + 1e-5), 2.0).unwrap();
        let c = extract_chain(&g, &h);
        assert_eq!(c.cells, vec![0]);
    }
}
