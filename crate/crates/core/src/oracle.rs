//! Brute-force quasihyperbolic shortest paths on a lattice graph.
//!
//! Nodes are points of nested square lattices whose step follows the
//! distance to the boundary: a lattice point `p` is a node when it lies on
//! the lattice of step `h` with `spacing * delta(p) / 2 < h <= spacing * delta(p)`.
//! Each node links to the lattice points reached by a fixed stencil of
//! primitive offsets at its own step; edge weights integrate `1/delta` by
//! composite two-point Gauss quadrature. Shortest paths come from Dijkstra.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{QhError, Result};
use crate::geometry::{point_segment_distance, Point, Polyline};
use crate::quadrature::gauss2;
use crate::spiral::qh_length_of_polyline;
use crate::voronoi::VoronoiDomain;

/// Default stencil radius: all primitive offsets with max-norm at most this.
pub const DEFAULT_STENCIL_RADIUS: i64 = 4;

/// Default relative spacing (lattice step over distance to the boundary).
pub const DEFAULT_SPACING: f64 = 0.1;

/// Factor by which the search region exceeds the distance bound.
const GRAPH_SLACK: f64 = 1.25;

/// Guard on the number of nodes in one graph.
pub const MAX_NODES: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub stencil_radius: i64,
    /// Upper bound used to confine the search region; computed from simple
    /// polylines when absent.
    pub distance_bound: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { stencil_radius: DEFAULT_STENCIL_RADIUS, distance_bound: None }
    }
}

/// Primitive lattice offsets with max-norm at most `radius`.
pub fn stencil(radius: i64) -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for a in -radius..=radius {
        for b in -radius..=radius {
            if (a, b) != (0, 0) && gcd(a, b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Largest relative excess of stencil paths over straight segments.
pub fn stencil_anisotropy(radius: i64) -> f64 {
    let mut angles: Vec<f64> = stencil(radius).iter().map(|&(a, b)| (b as f64).atan2(a as f64)).collect();
    angles.sort_by(f64::total_cmp);
    let mut gap: f64 = 0.0;
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap = gap.max(angles[0] + std::f64::consts::TAU - angles[angles.len() - 1]);
    1.0 / (0.5 * gap).cos() - 1.0
}

/// The lattice graph around one query pair.
#[derive(Debug, Clone)]
pub struct GridGraph {
    /// Axis-aligned window `(lower-left, upper-right)`.
    pub window: (Point, Point),
    pub spacing: f64,
    pub nodes: Vec<Point>,
    /// Lattice level of each node (0 is the coarsest).
    pub levels: Vec<u32>,
    offsets: Vec<usize>,
    adj: Vec<(u32, f64)>,
    exclusion: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `integral |dz| / delta` over the segment `[a, b]`, refined where the
/// segment is long compared with the distance to the boundary.
fn segment_weight(d: &VoronoiDomain, a: Point, b: Point) -> f64 {
    let len = a.dist(b);
    if len == 0.0 {
        return 0.0;
    }
    let near = d.delta(a).min(d.delta(b));
    let m = ((4.0 * len / near).ceil() as usize).clamp(1, 256);
    let f = |s: f64| len / d.delta(a.lerp(b, s));
    (0..m).map(|k| gauss2(f, k as f64 / m as f64, (k + 1) as f64 / m as f64)).sum()
}

/// Distance-ratio lower bound `log(1 + |a - b| / min(delta(a), delta(b)))`.
fn j_metric(a: Point, da: f64, b: Point, db: f64) -> f64 {
    (a.dist(b) / da.min(db)).ln_1p()
}

impl GridGraph {
    /// Graph holding every lattice path between `x` and `y` of length at
    /// most `bound`.
    pub fn build(d: &VoronoiDomain, x: Point, y: Point, spacing: f64, radius: i64, bound: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing < 1.0) {
            return Err(QhError::Domain(format!("relative spacing {spacing} must lie in (0, 1)")));
        }
        let (dx, dy) = (d.delta(x), d.delta(y));
        if dx <= 0.0 || dy <= 0.0 {
            return Err(QhError::Resolution("query point on the boundary".into()));
        }
        // points of a path of length <= bound stay in these disks
        let reach = (0.5 * bound).exp_m1();
        let (rx, ry) = (reach * dx, reach * dy);
        let lo = Point::new((x.x - rx).min(y.x - ry), (x.y - rx).min(y.y - ry));
        let hi = Point::new((x.x + rx).max(y.x + ry), (x.y + rx).max(y.y + ry));
        // geodesics of length <= bound keep delta above this
        let exclusion = 0.5 * dx.min(dy) * (-0.5 * bound).exp();
        let centre = lo.midpoint(hi);
        let d_max = d.delta(centre) + 0.5 * lo.dist(hi);
        let h0 = spacing * d_max;
        let levels_needed = ((h0 / (spacing * exclusion)).log2().ceil().max(0.0)) as u32;
        if levels_needed > 40 {
            return Err(QhError::Resolution("lattice depth exceeds 40 levels".into()));
        }
        let l_max = levels_needed;
        let h_fine = h0 / 2f64.powi(l_max as i32);
        let level_of = |delta: f64| -> Option<u32> {
            if delta < exclusion {
                return None;
            }
            let l = (h0 / (spacing * delta)).log2().ceil().max(0.0) as u32;
            Some(l.min(l_max))
        };
        let admissible = |p: Point, dp: f64| j_metric(x, dx, p, dp) + j_metric(p, dp, y, dy) <= bound * (1.0 + 1e-9);

        let mut nodes = Vec::new();
        let mut levels = Vec::new();
        let mut keys: HashMap<(i64, i64), u32> = HashMap::new();
        let to_key = |p: Point| (((p.x - lo.x) / h_fine).round() as i64, ((p.y - lo.y) / h_fine).round() as i64);
        let nx_fine = ((hi.x - lo.x) / h_fine).ceil() as i64;
        let ny_fine = ((hi.y - lo.y) / h_fine).ceil() as i64;
        for l in 0..=l_max {
            let step = 1i64 << (l_max - l);
            let h = h_fine * step as f64;
            // a point at level l has delta < 2 h / spacing (unless l = 0)
            let mut boxes: Vec<(i64, i64, i64, i64, Option<usize>)> = Vec::new();
            if l == 0 {
                boxes.push((0, nx_fine, 0, ny_fine, None));
            } else {
                let rad = 2.0 * h / spacing;
                for (k, a) in d.boundary().iter().enumerate() {
                    let kx0 = (((a.x - rad - lo.x) / h_fine).floor() as i64).max(0);
                    let kx1 = (((a.x + rad - lo.x) / h_fine).ceil() as i64).min(nx_fine);
                    let ky0 = (((a.y - rad - lo.y) / h_fine).floor() as i64).max(0);
                    let ky1 = (((a.y + rad - lo.y) / h_fine).ceil() as i64).min(ny_fine);
                    if kx0 <= kx1 && ky0 <= ky1 {
                        boxes.push((kx0, kx1, ky0, ky1, Some(k)));
                    }
                }
            }
            for (kx0, kx1, ky0, ky1, owner) in boxes {
                let start_x = (kx0 + step - 1) / step * step;
                let start_y = (ky0 + step - 1) / step * step;
                let mut i = start_x;
                while i <= kx1 {
                    let mut j = start_y;
                    while j <= ky1 {
                        let p = Point::new(lo.x + i as f64 * h_fine, lo.y + j as f64 * h_fine);
                        let (near, dp) = d.nearest(p);
                        let owned = owner.map_or(true, |o| o == near);
                        if owned && level_of(dp) == Some(l) && admissible(p, dp) {
                            keys.insert((i, j), nodes.len() as u32);
                            nodes.push(p);
                            levels.push(l);
                            if nodes.len() > MAX_NODES {
                                return Err(QhError::Resolution(format!("more than {MAX_NODES} nodes")));
                            }
                        }
                        j += step;
                    }
                    i += step;
                }
            }
        }

        let offs = stencil(radius);
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (pi, (&p, &l)) in nodes.iter().zip(&levels).enumerate() {
            let step = 1i64 << (l_max - l);
            let (ki, kj) = to_key(p);
            for &(a, b) in &offs {
                if let Some(&qi) = keys.get(&(ki + a * step, kj + b * step)) {
                    let (u, v) = if (pi as u32) < qi { (pi as u32, qi) } else { (qi, pi as u32) };
                    pairs.push((u, v));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut degree = vec![0usize; nodes.len() + 1];
        let mut weighted = Vec::with_capacity(pairs.len());
        for &(u, v) in &pairs {
            let (a, b) = (nodes[u as usize], nodes[v as usize]);
            let len = a.dist(b);
            let mid = a.midpoint(b);
            if d.delta(mid) < 0.5 * len + exclusion {
                let close = d
                    .boundary()
                    .iter()
                    .map(|&s| point_segment_distance(s, a, b))
                    .fold(f64::INFINITY, f64::min);
                if close < exclusion {
                    continue;
                }
            }
            weighted.push((u, v, segment_weight(d, a, b)));
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0usize; nodes.len() + 1];
        for i in 0..nodes.len() {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0u32, 0.0); offsets[nodes.len()]];
        for (u, v, w) in weighted {
            adj[fill[u as usize]] = (v, w);
            fill[u as usize] += 1;
            adj[fill[v as usize]] = (u, w);
            fill[v as usize] += 1;
        }
        Ok(GridGraph { window: (lo, hi), spacing, nodes, levels, offsets, adj, exclusion })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Links from a free point to nearby nodes, skipping segments that pass
    /// through the excluded neighbourhoods of the nuclei.
    fn attach(&self, d: &VoronoiDomain, z: Point, radius: i64) -> Vec<(usize, f64)> {
        let reach = radius as f64 * std::f64::consts::SQRT_2 * self.spacing * d.delta(z) * 1.000_001;
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, &p)| p.dist(z) <= reach)
            .filter(|(_, &p)| {
                d.boundary().iter().all(|&s| point_segment_distance(s, z, p) >= self.exclusion)
            })
            .map(|(i, &p)| (i, segment_weight(d, z, p)))
            .collect()
    }

    /// Shortest path from `x` to `y` through the graph.
    pub fn shortest_path(&self, d: &VoronoiDomain, x: Point, y: Point, radius: i64) -> Result<(f64, Vec<Point>)> {
        if x == y {
            return Ok((0.0, vec![x]));
        }
        let src = self.attach(d, x, radius);
        let dst = self.attach(d, y, radius);
        if src.is_empty() || dst.is_empty() {
            return Err(QhError::Resolution("query point has no lattice neighbours".into()));
        }
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut to_target = vec![f64::INFINITY; n];
        for &(i, w) in &dst {
            to_target[i] = w;
        }
        let mut heap = BinaryHeap::new();
        for &(i, w) in &src {
            if w < dist[i] {
                dist[i] = w;
                heap.push(HeapItem(w, i));
            }
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let reach = radius as f64 * std::f64::consts::SQRT_2 * self.spacing * d.delta(x);
        if x.dist(y) <= reach && d.boundary().iter().all(|&s| point_segment_distance(s, x, y) >= self.exclusion) {
            best.0 = segment_weight(d, x, y);
        }
        while let Some(HeapItem(du, u)) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            if du >= best.0 {
                break;
            }
            if to_target[u].is_finite() && du + to_target[u] < best.0 {
                best = (du + to_target[u], u);
            }
            for &(v, w) in self.neighbors(u) {
                let v = v as usize;
                let nd = du + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        if !best.0.is_finite() {
            return Err(QhError::Resolution("target unreachable in the lattice graph".into()));
        }
        if best.1 == usize::MAX {
            return Ok((best.0, vec![x, y]));
        }
        let mut path = vec![y];
        let mut u = best.1;
        while u != usize::MAX {
            path.push(self.nodes[u]);
            u = prev[u];
        }
        path.push(x);
        path.reverse();
        Ok((best.0, path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Graph distance at the requested spacing.
    pub distance: f64,
    /// Shortest path at the finer spacing.
    pub path: Polyline,
    pub spacing_used: f64,
    /// Graph distance at half the spacing.
    pub fine_distance: f64,
    /// `2 d(h/2) - d(h)`.
    pub richardson_estimate: f64,
}

fn graph_distance(d: &VoronoiDomain, x: Point, y: Point, spacing: f64, cfg: &OracleConfig, bound: f64) -> Result<(f64, Vec<Point>)> {
    // room for lattice paths that are longer than the continuous bound
    let g = GridGraph::build(d, x, y, spacing, cfg.stencil_radius, GRAPH_SLACK * bound + 0.01)?;
    g.shortest_path(d, x, y, cfg.stencil_radius)
}

/// Path-length bound from a handful of polylines, or the given bound.
fn bound_for(d: &VoronoiDomain, x: Point, y: Point, cfg: &OracleConfig) -> Result<f64> {
    if let Some(b) = cfg.distance_bound {
        return Ok(b);
    }
    let m = x.midpoint(y);
    let n = (y - x).perp();
    let mut best = f64::INFINITY;
    for w in [0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0] {
        let verts = if w == 0.0 { vec![x, y] } else { vec![x, m + n * w, y] };
        if let Ok(l) = Polyline::new(verts, false).and_then(|p| qh_length_of_polyline(d, &p)) {
            best = best.min(l);
        }
    }
    if best.is_finite() {
        Ok(best * (1.0 + 1e-6) + 1e-9)
    } else {
        Err(QhError::Resolution("no admissible polyline bounds the distance".into()))
    }
}

pub fn oracle_distance(d: &VoronoiDomain, x: Point, y: Point, spacing: f64) -> Result<OracleResult> {
    oracle_distance_with(d, x, y, spacing, &OracleConfig::default())
}

pub fn oracle_distance_with(d: &VoronoiDomain, x: Point, y: Point, spacing: f64, cfg: &OracleConfig) -> Result<OracleResult> {
    if d.delta(x) <= 0.0 || d.delta(y) <= 0.0 {
        return Err(QhError::Resolution("query point on the boundary".into()));
    }
    if x == y {
        return Ok(OracleResult {
            distance: 0.0,
            path: Polyline::new(vec![x, x + Point::new(d.delta(x) * 1e-12, 0.0)], false)?,
            spacing_used: spacing,
            fine_distance: 0.0,
            richardson_estimate: 0.0,
        });
    }
    let bound = bound_for(d, x, y, cfg)?;
    let (coarse, _) = graph_distance(d, x, y, spacing, cfg, bound)?;
    let (fine, path) = graph_distance(d, x, y, 0.5 * spacing, cfg, bound)?;
    Ok(OracleResult {
        distance: coarse,
        path: Polyline::new(path, false)?,
        spacing_used: spacing,
        fine_distance: fine,
        richardson_estimate: 2.0 * fine - coarse,
    })
}

/// Approximate initial direction of the oracle path at `x`, from a
/// least-squares line fit through `x` of the vertices within quasihyperbolic
/// length about 0.1.
pub fn oracle_seed_direction(d: &VoronoiDomain, result: &OracleResult, x: Point) -> Point {
    let v = result.path.vertices();
    let first = (v[1] - v[0]).normalized().unwrap_or(Point::new(1.0, 0.0));
    if v.len() < 3 {
        return first;
    }
    let mut acc = 0.0;
    let mut pts = Vec::new();
    for w in v.windows(2) {
        acc += w[0].dist(w[1]) / d.delta(w[0].midpoint(w[1]));
        pts.push(w[1] - x);
        if acc >= 0.1 {
            break;
        }
    }
    if pts.len() < 2 {
        return first;
    }
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        sxx += p.x * p.x;
        sxy += p.x * p.y;
        syy += p.y * p.y;
    }
    let axis = Point::polar(0.5 * (2.0 * sxy).atan2(sxx - syy));
    let heading: Point = pts.iter().fold(Point::ORIGIN, |s, &p| s + p);
    if axis.dot(heading) >= 0.0 {
        axis
    } else {
        -axis
    }
}

/// CSV rows `spacing,distance` for the spacings `spacing / 2^k`.
pub fn refinement_ladder(d: &VoronoiDomain, x: Point, y: Point, spacing: f64, steps: usize) -> Result<String> {
    let cfg = OracleConfig::default();
    let bound = bound_for(d, x, y, &cfg)?;
    let mut out = String::from("spacing,distance\n");
    let mut h = spacing;
    for _ in 0..steps {
        let (l, _) = graph_distance(d, x, y, h, &cfg, bound)?;
        writeln!(out, "{h:e},{l:.12}").expect("write to string");
        h *= 0.5;
    }
    Ok(out)
}
