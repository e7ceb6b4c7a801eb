//! Deterministic SVG scenes: 1000 units per domain unit, y axis up,
//! coordinates rounded to 3 decimals, elements sorted within each layer.

use std::fmt::Write;

use qhgeo::{Point, VoronoiDomain};

pub const UNITS_PER_DOMAIN_UNIT: f64 = 1000.0;

/// Relative margin added around the framed content.
const MARGIN: f64 = 0.1;

fn num(v: f64) -> String {
    let s = format!("{:.3}", v);
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn xy(p: Point) -> (String, String) {
    (num(p.x * UNITS_PER_DOMAIN_UNIT), num(-p.y * UNITS_PER_DOMAIN_UNIT))
}

fn points_attr(pts: &[Point]) -> String {
    pts.iter()
        .map(|&p| {
            let (x, y) = xy(p);
            format!("{x},{y}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    lo: Point,
    hi: Point,
}

impl Frame {
    fn around<'a>(pts: impl Iterator<Item = &'a Point>) -> Frame {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.is_finite() {
            return Frame { lo: Point::new(-1.0, -1.0), hi: Point::new(1.0, 1.0) };
        }
        let pad = MARGIN * (hi.x - lo.x).max(hi.y - lo.y).max(1e-3);
        Frame { lo: lo - Point::new(pad, pad), hi: hi + Point::new(pad, pad) }
    }

    /// Parameter window of `origin + s dir` inside the frame, clipped to
    /// `[lo, hi]`.
    fn clip(&self, origin: Point, dir: Point, mut lo: f64, mut hi: f64) -> Option<(f64, f64)> {
        for (o, v, a, b) in [(origin.x, dir.x, self.lo.x, self.hi.x), (origin.y, dir.y, self.lo.y, self.hi.y)] {
            if v == 0.0 {
                if o < a || o > b {
                    return None;
                }
                continue;
            }
            let (s0, s1) = ((a - o) / v, (b - o) / v);
            lo = lo.max(s0.min(s1));
            hi = hi.min(s0.max(s1));
        }
        (lo < hi).then_some((lo, hi))
    }
}

/// Everything drawn in one picture.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    /// Closed ball boundary, in order.
    pub ball: Option<Vec<Point>>,
    /// Sampled curves, in drawing order.
    pub geodesics: Vec<Vec<Point>>,
}

impl Scene {
    pub fn render(&self, d: &VoronoiDomain) -> String {
        let content: Vec<Point> = self.ball.iter().flatten().chain(self.geodesics.iter().flatten()).copied().collect();
        let frame = if content.is_empty() { Frame::around(d.boundary().iter()) } else { Frame::around(content.iter()) };
        let u = UNITS_PER_DOMAIN_UNIT;
        let size = (frame.hi.x - frame.lo.x).max(frame.hi.y - frame.lo.y) * u;
        let stroke = num(size * 0.002);

        let mut nuclei: Vec<String> = d
            .boundary()
            .iter()
            .filter(|p| p.x >= frame.lo.x && p.x <= frame.hi.x && p.y >= frame.lo.y && p.y <= frame.hi.y)
            .map(|&p| {
                let (x, y) = xy(p);
                format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"{}\"/>", num(size * 0.004))
            })
            .collect();
        nuclei.sort();

        let mut edges: Vec<String> = d
            .edges()
            .iter()
            .filter_map(|e| {
                let (s0, s1) = frame.clip(e.carrier.origin, e.carrier.dir, e.lo, e.hi)?;
                let (mut a, mut b) = (e.carrier.at(s0), e.carrier.at(s1));
                if (b.x, b.y) < (a.x, a.y) {
                    std::mem::swap(&mut a, &mut b);
                }
                let ((x1, y1), (x2, y2)) = (xy(a), xy(b));
                Some(format!("<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\"/>"))
            })
            .collect();
        edges.sort();

        let mut out = String::new();
        let (vx, vy) = (num(frame.lo.x * u), num(-frame.hi.y * u));
        let (w, h) = (num((frame.hi.x - frame.lo.x) * u), num((frame.hi.y - frame.lo.y) * u));
        writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{vx} {vy} {w} {h}\">").unwrap();
        writeln!(out, "<g id=\"nuclei\" fill=\"black\">").unwrap();
        for n in &nuclei {
            writeln!(out, "{n}").unwrap();
        }
        writeln!(out, "</g>").unwrap();
        writeln!(out, "<g id=\"edges\" stroke=\"gray\" stroke-width=\"{stroke}\" fill=\"none\">").unwrap();
        for e in &edges {
            writeln!(out, "{e}").unwrap();
        }
        writeln!(out, "</g>").unwrap();
        writeln!(out, "<g id=\"ball\" stroke=\"blue\" stroke-width=\"{stroke}\" fill=\"none\">").unwrap();
        if let Some(b) = &self.ball {
            writeln!(out, "<polygon points=\"{}\"/>", points_attr(b)).unwrap();
        }
        writeln!(out, "</g>").unwrap();
        writeln!(out, "<g id=\"geodesics\" stroke=\"red\" stroke-width=\"{stroke}\" fill=\"none\">").unwrap();
        for g in &self.geodesics {
            writeln!(out, "<polyline points=\"{}\"/>", points_attr(g)).unwrap();
        }
        writeln!(out, "</g>").unwrap();
        writeln!(out, "</svg>").unwrap();
        out
    }
}
