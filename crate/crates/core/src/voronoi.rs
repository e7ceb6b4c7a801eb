//! Voronoi diagrams of finite boundary sets.
//!
//! Each cell is built by clipping a large square against the bisector
//! half-planes of every other nucleus. The square only exists during
//! construction: any cell side still lying on it afterwards turns the
//! adjacent bisector edge into a ray, so edges keep exact carriers with
//! infinite parameters instead of clipped endpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};
use crate::geometry::{ang_unchecked, Point};

/// Minimum nucleus separation accepted by [`VoronoiDomain::build`].
pub const MIN_SEPARATION: f64 = 1e-9;

/// Default tolerance of [`VoronoiDomain::locate`].
pub const LOCATE_TOL: f64 = 1e-9;

/// A line through `origin` with unit direction `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub origin: Point,
    pub dir: Point,
}

impl Line {
    #[inline]
    pub fn at(&self, s: f64) -> Point {
        self.origin + self.dir * s
    }

    #[inline]
    pub fn param_of(&self, p: Point) -> f64 {
        (p - self.origin).dot(self.dir)
    }

    /// Signed distance, positive on the left of `dir`.
    #[inline]
    pub fn offset(&self, p: Point) -> f64 {
        self.dir.cross(p - self.origin)
    }
}

/// A Voronoi edge: the part `lo <= s <= hi` of the bisector of two nuclei.
///
/// `carrier.origin` is the midpoint of the two nuclei (the foot of both
/// perpendiculars) and `h` their common distance to the carrier line.
/// `neighbors[0]` is the lower cell index; its nucleus lies to the left of
/// `carrier.dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub carrier: Line,
    pub lo: f64,
    pub hi: f64,
    pub neighbors: [usize; 2],
    pub h: f64,
    /// Corners at the `lo` and `hi` ends, when finite.
    pub ends: [Option<usize>; 2],
}

impl Edge {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn other(&self, cell: usize) -> Option<usize> {
        match self.neighbors {
            [a, b] if a == cell => Some(b),
            [a, b] if b == cell => Some(a),
            _ => None,
        }
    }

    /// Euclidean distance from `p` to the edge (segment, ray or line).
    pub fn distance_to(&self, p: Point) -> f64 {
        let s = self.carrier.param_of(p).clamp(self.lo, self.hi);
        p.dist(self.carrier.at(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub nucleus: Point,
    /// Edge indices in counter-clockwise order around the cell.
    pub edges: Vec<usize>,
    /// Corner indices of the cell polygon, counter-clockwise.
    pub corners: Vec<usize>,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corner {
    pub point: Point,
    /// Incident edges, ascending.
    pub edges: Vec<usize>,
    /// Cells sharing the corner, ascending.
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CellLocation {
    Interior { cell: usize },
    Edge { edge: usize },
    Corner { corner: usize },
}

/// A plane domain whose boundary is a finite point set, with its diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiDomain {
    boundary: Vec<Point>,
    cells: Vec<Cell>,
    edges: Vec<Edge>,
    corners: Vec<Corner>,
    scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SideLabel {
    Frame,
    Bisector(usize),
}

/// Intersection of two non-parallel lines `n_a . p = c_a` and `n_b . p = c_b`.
fn intersect(na: Point, ca: f64, nb: Point, cb: f64) -> Point {
    let det = na.cross(nb);
    Point::new((ca * nb.y - cb * na.y) / det, (na.x * cb - nb.x * ca) / det)
}

struct ClipCell {
    /// Each side is `(label, unit outward normal, offset)`.
    sides: Vec<(SideLabel, Point, f64)>,
}

impl ClipCell {
    fn frame(center: Point, half: f64) -> Self {
        let mut sides = Vec::with_capacity(4);
        for n in [
            Point::new(0.0, -1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, 0.0),
        ] {
            sides.push((SideLabel::Frame, n, n.dot(center) + half));
        }
        ClipCell { sides }
    }

    /// `verts[k]` is the end of side `k` (start of side `k+1`).
    fn vertices(&self) -> Vec<Point> {
        let n = self.sides.len();
        (0..n)
            .map(|k| {
                let (_, na, ca) = self.sides[k];
                let (_, nb, cb) = self.sides[(k + 1) % n];
                intersect(na, ca, nb, cb)
            })
            .collect()
    }

    fn clip(&mut self, label: SideLabel, normal: Point, offset: f64, eps: f64) {
        let verts = self.vertices();
        let n = verts.len();
        let inside: Vec<bool> = verts.iter().map(|v| normal.dot(*v) - offset <= eps).collect();
        if inside.iter().all(|&b| b) {
            return;
        }
        // side k runs from verts[k-1] to verts[k]
        let start_in = |k: usize| inside[(k + n - 1) % n];
        let k_out = (0..n).find(|&k| start_in(k) && !inside[k]);
        let k_in = (0..n).find(|&k| !start_in(k) && inside[k]);
        let (Some(k_out), Some(k_in)) = (k_out, k_in) else {
            // Every vertex is outside; cannot happen for a cell containing its nucleus.
            return;
        };
        let mut sides = Vec::with_capacity(n + 1);
        let mut k = k_in;
        loop {
            sides.push(self.sides[k]);
            if k == k_out {
                break;
            }
            k = (k + 1) % n;
        }
        sides.push((label, normal, offset));
        self.sides = sides;
    }

    fn drop_degenerate(&mut self, eps: f64) {
        loop {
            let n = self.sides.len();
            if n <= 3 {
                return;
            }
            let verts = self.vertices();
            let bad = (0..n).find(|&k| verts[(k + n - 1) % n].dist(verts[k]) <= eps);
            match bad {
                Some(k) => {
                    self.sides.remove(k);
                }
                None => return,
            }
        }
    }
}

impl VoronoiDomain {
    /// Build the diagram. Nuclei are sorted lexicographically; cell `i`
    /// belongs to `boundary()[i]`.
    pub fn build(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(QhError::Input("boundary must contain at least one point".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(QhError::Input(format!("non-finite boundary point {p:?}")));
        }
        let mut boundary = points.to_vec();
        boundary.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        for i in 0..boundary.len() {
            for j in i + 1..boundary.len() {
                if boundary[i].dist(boundary[j]) <= MIN_SEPARATION {
                    return Err(QhError::Input(format!(
                        "boundary points {:?} and {:?} are not separated",
                        boundary[i], boundary[j]
                    )));
                }
            }
        }

        let (lo, hi) = bbox(&boundary);
        let extent = (hi - lo).norm();
        let scale = if extent > 0.0 { extent } else { 1.0 };
        let center = lo.midpoint(hi);
        let half = 1e6 * scale;
        let eps = 1e-12 * scale;

        let n = boundary.len();
        let mut polys = Vec::with_capacity(n);
        for i in 0..n {
            let a = boundary[i];
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&p, &q| a.dist(boundary[p]).total_cmp(&a.dist(boundary[q])));
            let mut cell = ClipCell::frame(center, half);
            for j in order {
                let b = boundary[j];
                let normal = (b - a) / a.dist(b);
                let offset = normal.dot(a.midpoint(b));
                cell.clip(SideLabel::Bisector(j), normal, offset, eps);
            }
            cell.drop_degenerate(eps);
            polys.push(cell);
        }

        // Sides present in both cells become edges.
        let mut pair_sides: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, cell) in polys.iter().enumerate() {
            for (label, _, _) in &cell.sides {
                if let SideLabel::Bisector(j) = *label {
                    *pair_sides.entry((i.min(j), i.max(j))).or_default() += 1;
                }
            }
        }

        let mut edges = Vec::new();
        let mut edge_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&(i, j), &count) in &pair_sides {
            if count != 2 {
                continue;
            }
            let (a, b) = (boundary[i], boundary[j]);
            let carrier = Line {
                origin: a.midpoint(b),
                dir: (b - a).perp() / a.dist(b),
            };
            let cell = &polys[i];
            let verts = cell.vertices();
            let m = cell.sides.len();
            let k = cell
                .sides
                .iter()
                .position(|(l, _, _)| *l == SideLabel::Bisector(j))
                .expect("side present");
            let prev = cell.sides[(k + m - 1) % m].0;
            let next = cell.sides[(k + 1) % m].0;
            let s0 = carrier.param_of(verts[(k + m - 1) % m]);
            let s1 = carrier.param_of(verts[k]);
            let s0 = if prev == SideLabel::Frame { f64::NEG_INFINITY.copysign(s0 - s1) } else { s0 };
            let s1 = if next == SideLabel::Frame { f64::INFINITY.copysign(s1 - s0) } else { s1 };
            let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
            if hi - lo <= eps {
                continue;
            }
            edge_of.insert((i, j), edges.len());
            edges.push(Edge {
                carrier,
                lo,
                hi,
                neighbors: [i, j],
                h: 0.5 * a.dist(b),
                ends: [None, None],
            });
        }

        // Corners: shared finite vertices, merged within a tolerance that
        // grows with the distance from the nuclei.
        let merge_tol = |p: Point| 1e-9 * (scale + p.dist(center));
        let mut corners: Vec<Corner> = Vec::new();
        let mut cells = Vec::with_capacity(n);
        for (i, poly) in polys.iter().enumerate() {
            let m = poly.sides.len();
            let verts = poly.vertices();
            let mut cell_edges = Vec::new();
            let mut cell_corners = Vec::new();
            let mut bounded = true;
            for k in 0..m {
                let here = match poly.sides[k].0 {
                    SideLabel::Bisector(j) => edge_of.get(&(i.min(j), i.max(j))).copied(),
                    SideLabel::Frame => {
                        bounded = false;
                        None
                    }
                };
                if let Some(e) = here {
                    cell_edges.push(e);
                }
                let next = poly.sides[(k + 1) % m].0;
                let next_edge = match next {
                    SideLabel::Bisector(j) => edge_of.get(&(i.min(j), i.max(j))).copied(),
                    SideLabel::Frame => None,
                };
                if let (Some(e), Some(f)) = (here, next_edge) {
                    let p = verts[k];
                    let c = match corners.iter().position(|c| c.point.dist(p) <= merge_tol(p)) {
                        Some(c) => c,
                        None => {
                            corners.push(Corner { point: p, edges: Vec::new(), cells: Vec::new() });
                            corners.len() - 1
                        }
                    };
                    for x in [e, f] {
                        if !corners[c].edges.contains(&x) {
                            corners[c].edges.push(x);
                        }
                    }
                    if !corners[c].cells.contains(&i) {
                        corners[c].cells.push(i);
                    }
                    cell_corners.push(c);
                }
            }
            cells.push(Cell {
                nucleus: boundary[i],
                edges: cell_edges,
                corners: cell_corners,
                bounded: bounded && n > 1,
            });
        }
        for c in &mut corners {
            c.edges.sort_unstable();
            c.cells.sort_unstable();
        }
        // Canonical corner order for reproducible output.
        let mut order: Vec<usize> = (0..corners.len()).collect();
        order.sort_by(|&p, &q| {
            let (a, b) = (corners[p].point, corners[q].point);
            a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
        });
        let mut remap = vec![0; corners.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let corners: Vec<Corner> = order.iter().map(|&o| corners[o].clone()).collect();
        for cell in &mut cells {
            for c in &mut cell.corners {
                *c = remap[*c];
            }
        }

        let mut edges = edges;
        for (ci, c) in corners.iter().enumerate() {
            for &e in &c.edges {
                let edge = &mut edges[e];
                let s = edge.carrier.param_of(c.point);
                let k = if (s - edge.lo).abs() <= (s - edge.hi).abs() { 0 } else { 1 };
                edge.ends[k] = Some(ci);
            }
        }

        Ok(VoronoiDomain { boundary, cells, edges, corners, scale })
    }

    pub fn boundary(&self) -> &[Point] {
        &self.boundary
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    /// Diagonal of the nuclei bounding box (1 for a single nucleus).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Index of the nearest nucleus and the distance to it.
    pub fn nearest(&self, z: Point) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.boundary.iter().enumerate() {
            let d = z.dist(*a);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Euclidean distance to the boundary.
    pub fn delta(&self, z: Point) -> f64 {
        self.nearest(z).1
    }

    /// Whether `z` lies in cell `cell`, allowing `tol` slack.
    pub fn in_cell(&self, cell: usize, z: Point, tol: f64) -> bool {
        z.dist(self.boundary[cell]) <= self.delta(z) + tol
    }

    pub fn locate(&self, z: Point, tol: f64) -> CellLocation {
        let (i, _) = self.nearest(z);
        let cell = &self.cells[i];
        if let Some(&c) = cell
            .corners
            .iter()
            .filter(|&&c| self.corners[c].point.dist(z) <= tol)
            .min_by(|&&a, &&b| {
                self.corners[a].point.dist(z).total_cmp(&self.corners[b].point.dist(z))
            })
        {
            return CellLocation::Corner { corner: c };
        }
        let near: Vec<usize> = cell
            .edges
            .iter()
            .copied()
            .filter(|&e| self.edges[e].distance_to(z) <= tol)
            .collect();
        match near.len() {
            0 => CellLocation::Interior { cell: i },
            1 => CellLocation::Edge { edge: near[0] },
            _ => {
                let c = cell
                    .corners
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        self.corners[a].point.dist(z).total_cmp(&self.corners[b].point.dist(z))
                    })
                    .expect("two edges meeting imply a corner");
                CellLocation::Corner { corner: c }
            }
        }
    }

    /// Nucleus of the cell on the other side of `edge`.
    pub fn mirror_nucleus(&self, edge: usize, from_cell: usize) -> Result<Point> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| QhError::Logic(format!("no edge {edge}")))?;
        let other = e
            .other(from_cell)
            .ok_or_else(|| QhError::Logic(format!("cell {from_cell} is not adjacent to edge {edge}")))?;
        Ok(self.boundary[other])
    }

    /// Interior angles of every incident cell at each corner, summed.
    pub fn corner_angle_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.corners.len()];
        for (ci, corner) in self.corners.iter().enumerate() {
            for &cell in &corner.cells {
                let at: Vec<usize> = self.cells[cell]
                    .edges
                    .iter()
                    .copied()
                    .filter(|e| corner.edges.contains(e))
                    .collect();
                if at.len() != 2 {
                    continue;
                }
                let e_in = &self.edges[at[0]];
                let e_out = &self.edges[at[1]];
                let p = corner.point;
                let a = far_end(e_in, p);
                let b = far_end(e_out, p);
                sums[ci] += ang_unchecked(a - p, b - p).abs();
            }
        }
        sums
    }

    pub fn to_json(&self) -> DiagramJson {
        DiagramJson {
            boundary: self.boundary.iter().map(|&p| p.into()).collect(),
            cells: self
                .cells
                .iter()
                .map(|c| CellJson {
                    nucleus: c.nucleus.into(),
                    edges: c.edges.clone(),
                    corners: c.corners.clone(),
                    bounded: c.bounded,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    origin: e.carrier.origin.into(),
                    dir: e.carrier.dir.into(),
                    lo: e.lo.is_finite().then_some(e.lo),
                    hi: e.hi.is_finite().then_some(e.hi),
                    neighbors: e.neighbors,
                })
                .collect(),
            corners: self
                .corners
                .iter()
                .map(|c| CornerJson { point: c.point.into(), edges: c.edges.clone() })
                .collect(),
        }
    }
}

/// A point on `e` away from the corner `p`, used to measure corner angles.
fn far_end(e: &Edge, p: Point) -> Point {
    let s = e.carrier.param_of(p);
    let step = if (s - e.lo).abs() < (s - e.hi).abs() { 1.0 } else { -1.0 };
    e.carrier.at(s + step)
}

fn bbox(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Input format: `{"boundary": [[x, y], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainJson {
    pub boundary: Vec<[f64; 2]>,
}

impl DomainJson {
    pub fn points(&self) -> Vec<Point> {
        self.boundary.iter().map(|&a| a.into()).collect()
    }
}

/// Serialized diagram. Infinite edge parameters are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramJson {
    pub boundary: Vec<[f64; 2]>,
    pub cells: Vec<CellJson>,
    pub edges: Vec<EdgeJson>,
    pub corners: Vec<CornerJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellJson {
    pub nucleus: [f64; 2],
    pub edges: Vec<usize>,
    pub corners: Vec<usize>,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub origin: [f64; 2],
    pub dir: [f64; 2],
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub neighbors: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerJson {
    pub point: [f64; 2],
    pub edges: Vec<usize>,
}
