use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Geometry of one oriented contour piece.
#[derive(Debug, Clone, Copy)]
pub enum PieceGeom {
    Segment {
        a: C64,
        b: C64,
    },
    /// Circular arc, traversed from angle `a0` to `a1` (counter-clockwise
    /// when a1 > a0).
    Arc {
        center: C64,
        radius: f64,
        a0: f64,
        a1: f64,
    },
}

/// Contour piece with corner markers. A flagged endpoint receives geometric
/// mesh grading (integrands of interest vanish there but their derivatives
/// blow up).
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    pub geom: PieceGeom,
    pub corner_start: bool,
    pub corner_end: bool,
}

impl Piece {
    pub fn segment(a: C64, b: C64) -> Piece {
        Piece {
            geom: PieceGeom::Segment { a, b },
            corner_start: false,
            corner_end: false,
        }
    }

    pub fn arc(center: C64, radius: f64, a0: f64, a1: f64) -> Piece {
        Piece {
            geom: PieceGeom::Arc {
                center,
                radius,
                a0,
                a1,
            },
            corner_start: false,
            corner_end: false,
        }
    }

    pub fn corner_start(mut self) -> Piece {
        self.corner_start = true;
        self
    }

    pub fn corner_end(mut self) -> Piece {
        self.corner_end = true;
        self
    }

    pub fn start(&self) -> C64 {
        match self.geom {
            PieceGeom::Segment { a, .. } => a,
            PieceGeom::Arc {
                center, radius, a0, ..
            } => center + C64::from_polar(radius, a0),
        }
    }

    pub fn end(&self) -> C64 {
        match self.geom {
            PieceGeom::Segment { b, .. } => b,
            PieceGeom::Arc {
                center, radius, a1, ..
            } => center + C64::from_polar(radius, a1),
        }
    }

    /// Point and velocity at parameter t in [0, 1].
    pub fn eval(&self, t: f64) -> (C64, C64) {
        match self.geom {
            PieceGeom::Segment { a, b } => (a + (b - a) * C64::new(t, 0.0), b - a),
            PieceGeom::Arc {
                center,
                radius,
                a0,
                a1,
            } => {
                let ang = a0 + t * (a1 - a0);
                let z = center + C64::from_polar(radius, ang);
                let dz = C64::new(0.0, radius * (a1 - a0)) * C64::from_polar(1.0, ang);
                (z, dz)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self.geom {
            PieceGeom::Segment { a, b } => (b - a).norm(),
            PieceGeom::Arc { radius, a0, a1, .. } => radius * (a1 - a0).abs(),
        }
    }

    /// Euclidean distance from a point to this piece.
    pub fn distance(&self, z: C64) -> f64 {
        match self.geom {
            PieceGeom::Segment { a, b } => {
                let ab = b - a;
                let t = ((z - a).conj() * ab).re / ab.norm_sqr();
                let t = t.clamp(0.0, 1.0);
                (z - (a + ab * C64::new(t, 0.0))).norm()
            }
            PieceGeom::Arc {
                center,
                radius,
                a0,
                a1,
            } => {
                let w = z - center;
                let ang = w.arg();
                let (lo, hi) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
                let tau = 2.0 * std::f64::consts::PI;
                let mut in_span = false;
                for k in [-1.0, 0.0, 1.0] {
                    let c = ang + k * tau;
                    if c >= lo && c <= hi {
                        in_span = true;
                    }
                }
                if in_span {
                    (w.norm() - radius).abs()
                } else {
                    let p0 = center + C64::from_polar(radius, a0);
                    let p1 = center + C64::from_polar(radius, a1);
                    (z - p0).norm().min((z - p1).norm())
                }
            }
        }
    }
}

/// Oriented piecewise contour with graded composite Gauss-Legendre nodes.
#[derive(Debug, Clone)]
pub struct Contour {
    pieces: Vec<Piece>,
}

pub(crate) const GL_ORDER: usize = 16;
const BASE_LAYERS: usize = 8;
const GRADE_RATIO: f64 = 0.25;

impl Contour {
    pub fn new(pieces: Vec<Piece>) -> Contour {
        Contour { pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        if self.pieces.is_empty() {
            return false;
        }
        for w in self.pieces.windows(2) {
            if (w[0].end() - w[1].start()).norm() > tol {
                return false;
            }
        }
        (self.pieces.last().unwrap().end() - self.pieces[0].start()).norm() <= tol
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature nodes and weights at a refinement level. Weights carry dz,
    /// so a contour integral is the plain weighted sum of integrand values.
    /// Flagged corners get `8 + level` geometrically graded layers (ratio
    /// 1/4); the bulk of each piece splits into 2^level uniform panels.
    pub fn nodes(&self, level: usize) -> Vec<(C64, C64)> {
        let (gx, gw) = super::quad::gauss_legendre_nodes(GL_ORDER);
        let mut out = Vec::new();
        for piece in &self.pieces {
            let breaks = panel_breaks(piece, level);
            for w in breaks.windows(2). filter(|w| w[1] > w[0]) {
                let (t0, t1) = (w[0], w[1]);
                let half = 0.5 * (t1 - t0);
                for (x, gwt) in gx.iter().zip(&gw) {
                    let t = t0 + half * (x + 1.0);
                    let (z, dz) = piece.eval(t);
                    out.push((z, dz * C64::new(gwt * half, 0.0)));
                }
            }
        }
        out
    }

    pub fn node_count(&self, level: usize) -> usize {
        self.pieces
            .iter()
            .map(|p| (panel_breaks(p, level).len() - 1) * GL_ORDER)
            .sum()
    }

    /// Equispaced samples per piece (parameter space), excluding endpoints.
    pub fn samples(&self, per_piece: usize) -> Vec<C64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for k in 0..per_piece {
                let t = (k as f64 + 0.5) / per_piece as f64;
                out.push(p.eval(t).0);
            }
        }
        out
    }

    pub fn to_spec(&self) -> Vec<PieceSpec> {
        self.pieces.iter().map(PieceSpec::from_piece).collect()
    }
}

fn panel_breaks(piece: &Piece, level: usize) -> Vec<f64> {
    let layers = BASE_LAYERS + level;
    let bulk = 1usize << level;
    let mut breaks = vec![0.0];
    match (piece.corner_start, piece.corner_end) {
        (false, false) => {
            for k in 1..=bulk {
                breaks.push(k as f64 / bulk as f64);
            }
        }
        (true, false) => {
            graded_up(&mut breaks, 0.0, 0.5, layers);
            uniform(&mut breaks, 0.5, 1.0, bulk);
        }
        (false, true) => {
            uniform(&mut breaks, 0.0, 0.5, bulk);
            graded_down(&mut breaks, 0.5, 1.0, layers);
        }
        (true, true) => {
            graded_up(&mut breaks, 0.0, 0.5, layers);
            graded_down(&mut breaks, 0.5, 1.0, layers);
        }
    }
    breaks
}

/// Geometric layers growing away from `lo` (a corner at lo).
fn graded_up(breaks: &mut Vec<f64>, lo: f64, hi: f64, layers: usize) {
    let span = hi - lo;
    for k in (0..layers).rev() {
        breaks.push(lo + span * GRADE_RATIO.powi(k as i32));
    }
}

/// Geometric layers shrinking toward `hi` (a corner at hi).
fn graded_down(breaks: &mut Vec<f64>, lo: f64, hi: f64, layers: usize) {
    let span = hi - lo;
    for k in 1..layers {
        breaks.push(hi - span * GRADE_RATIO.powi(k as i32));
    }
    breaks.push(hi);
}

fn uniform(breaks: &mut Vec<f64>, lo: f64, hi: f64, panels: usize) {
    for k in 1..=panels {
        breaks.push(lo + (hi - lo) * k as f64 / panels as f64);
    }
}

/// Split an arc into spans of at most pi/2 so no single panel wraps far
/// around a circle.
pub(crate) fn split_arc(center: C64, radius: f64, a0: f64, a1: f64) -> Vec<Piece> {
    split_arc_at(center, radius, a0, a1)
}

pub(crate) fn split_arc_at(center: C64, radius: f64, a0: f64, a1: f64) -> Vec<Piece> {
    let span = a1 - a0;
    let chunks = (span.abs() / std::f64::consts::FRAC_PI_2).ceil().max(1.0) as usize;
    (0..chunks)
        .map(|k| {
            let t0 = a0 + span * k as f64 / chunks as f64;
            let t1 = a0 + span * (k + 1) as f64 / chunks as f64;
            Piece::arc(center, radius, t0, t1)
        })
        .collect()
}

/// Serialized contour piece for report artifacts (`--dump-geometry`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PieceSpec {
    Segment {
        start: [f64; 2],
        end: [f64; 2],
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        angle_start: f64,
        angle_end: f64,
    },
}

impl PieceSpec {
    fn from_piece(p: &Piece) -> PieceSpec {
        match p.geom {
            PieceGeom::Segment { a, b } => PieceSpec::Segment {
                start: [a.re, a.im],
                end: [b.re, b.im],
            },
            PieceGeom::Arc {
                center,
                radius,
                a0,
                a1,
            } => PieceSpec::Arc {
                center: [center.re, center.im],
                radius,
                angle_start: a0,
                angle_end: a1,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour_is_closed() {
        let pieces = split_arc(C64::new(0.0, 0.0), 1.0, 0.0, 2.0 * std::f64::consts::PI);
        let c = Contour::new(pieces);
        assert!(c.is_closed(1e-12));
    }

    #[test]
    fn piece_spec_serializes_tagged() {
        let p = Piece::segment(C64::new(0.0, 0.0), C64::new(1.0, 2.0));
        let s = serde_json::to_string(&PieceSpec::from_piece(&p)).unwrap();
        assert!(s.contains("\"type\":\"segment\""), "{s}");
    }

    #[test]
    fn distance_to_segment() {
        let p = Piece::segment(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        assert!((p.distance(C64::new(0.5, 0.3)) - 0.3).abs() < 1e-14);
        assert!((p.distance(C64::new(2.0, 0.0)) - 1.0).abs() < 1e-14);
    }
}
