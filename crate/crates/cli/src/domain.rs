//! Domain input: inline nuclei, or nuclei sampled on a polygon.

use std::path::Path;

use qhgeo::geometry::winding_number;
use qhgeo::{Point, Polyline, VoronoiDomain};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    boundary: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    polygon: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    samples_per_unit: Option<f64>,
}

/// Validated domain input.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Boundary(Vec<Point>),
    Polygon { polygon: Polyline, samples_per_unit: f64 },
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed domain JSON: {e}")))?;
        let pts = |v: Vec<[f64; 2]>| -> Result<Vec<Point>, CliError> {
            if v.iter().flatten().any(|c| !c.is_finite()) {
                return Err(CliError::Input("non-finite coordinate".into()));
            }
            Ok(v.into_iter().map(Point::from).collect())
        };
        match (raw.boundary, raw.polygon, raw.samples_per_unit) {
            (Some(b), None, None) => Ok(DomainSpec::Boundary(pts(b)?)),
            (None, Some(p), Some(spu)) => {
                if !(spu > 0.0 && spu.is_finite()) {
                    return Err(CliError::Input(format!("samples_per_unit must be positive, got {spu}")));
                }
                let polygon = Polyline::new(pts(p)?, true)?;
                check_simple(&polygon)?;
                Ok(DomainSpec::Polygon { polygon, samples_per_unit: spu })
            }
            (None, Some(_), None) => Err(CliError::Input("polygon needs samples_per_unit".into())),
            _ => Err(CliError::Input("expected either \"boundary\" or \"polygon\" with \"samples_per_unit\"".into())),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Nuclei at refinement `level`. Each polygon side of length `L` is cut
    /// into `ceil(L * samples_per_unit) * 2^level` equal parts, so every
    /// level contains the nuclei of the previous one.
    pub fn nuclei(&self, level: u32) -> Vec<Point> {
        match self {
            DomainSpec::Boundary(b) => b.clone(),
            DomainSpec::Polygon { polygon, samples_per_unit } => {
                let mut out = Vec::new();
                for (a, b) in polygon.segments() {
                    let base = (a.dist(b) * samples_per_unit).ceil().max(1.0) as u64;
                    let n = base << level;
                    for j in 0..n {
                        out.push(a + (b - a) * (j as f64 / n as f64));
                    }
                }
                out
            }
        }
    }

    pub fn domain(&self, level: u32) -> Result<VoronoiDomain, CliError> {
        Ok(VoronoiDomain::build(&self.nuclei(level))?)
    }

    /// Rejects points on the boundary, and for polygons points outside.
    pub fn check_query(&self, d: &VoronoiDomain, p: Point) -> Result<(), CliError> {
        if !p.is_finite() {
            return Err(CliError::Input("non-finite query point".into()));
        }
        if d.delta(p) <= 1e-12 * d.scale() {
            return Err(CliError::Input(format!("query point ({}, {}) lies on the boundary", p.x, p.y)));
        }
        if let DomainSpec::Polygon { polygon, .. } = self {
            match winding_number(polygon, p, 0.0) {
                Ok(0) => return Err(CliError::Input(format!("query point ({}, {}) lies outside the polygon", p.x, p.y))),
                Ok(_) => {}
                Err(_) => return Err(CliError::Input(format!("query point ({}, {}) lies on the polygon", p.x, p.y))),
            }
        }
        Ok(())
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    orient(a, b, p) == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_meet(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// Closed polygon with distinct vertices whose non-adjacent sides are
/// disjoint and whose adjacent sides share only their common vertex.
pub fn check_simple(p: &Polyline) -> Result<(), CliError> {
    let v = p.vertices();
    let n = v.len();
    if n < 3 {
        return Err(CliError::Input(format!("polygon needs at least 3 vertices, got {n}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if v[i] == v[j] {
                return Err(CliError::Input(format!("polygon repeats vertex {i}")));
            }
        }
    }
    let side = |i: usize| (v[i], v[(i + 1) % n]);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = side(i);
            let (c, d) = side(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let bad = if adjacent {
                // the shared vertex is allowed, folding back is not
                let (shared, pa, pb) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                orient(pa, shared, pb) == 0.0 && (pa - shared).dot(pb - shared) > 0.0
            } else {
                segments_meet(a, b, c, d)
            };
            if bad {
                return Err(CliError::Input(format!("polygon is not simple: sides {i} and {j} meet")));
            }
        }
    }
    Ok(())
}
