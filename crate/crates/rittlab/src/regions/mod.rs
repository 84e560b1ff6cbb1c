//! Geometry of the spectral domains: sectors, Stolz-type domains built from a
//! finite unit-circle set, convex polygons, and oriented contours with
//! quadrature.
//!
//! Regions are open; membership at boundary points is false, with a 1e-12
//! tie tolerance on the signed distance.

mod contour;
mod polygons;
mod quad;

pub use contour::{Contour, Piece, PieceGeom, PieceSpec};
pub use polygons::{auto_transfer_polygons, build_transfer_polygons, TransferPolygons};
pub use quad::{
    gauss_legendre_nodes, integrate_contour, integrate_contour_matrix, integrate_contour_vec,
    QuadOpts,
};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MEMBERSHIP_TIE_TOL: f64 = 1e-12;

/// The finite unit-circle set E together with the type radius r and the
/// calculus radius s, 0 < r < s < 1. Construction checks that every tangent
/// needed to form the convex hull of D(0,r) and E exists: the per-point
/// tangency arcs (half-width arccos r) must be pairwise disjoint.
#[derive(Debug, Clone)]
pub struct SpectralConfig {
    xi: Vec<C64>,
    r: f64,
    s: f64,
}

pub(crate) fn principal_angle(z: C64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

impl SpectralConfig {
    pub fn new(mut xi: Vec<C64>, r: f64, s: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if xi.is_empty() {
            problems.push("E must be nonempty".to_string());
        }
        for (j, z) in xi.iter().enumerate() {
            if (z.norm() - 1.0).abs() > 1e-12 {
                problems.push(format!("xi[{j}] = {z} is not on the unit circle"));
            }
        }
        if !(0.0 < r && r < s && s < 1.0) {
            problems.push(format!("need 0 < r < s < 1, got r = {r}, s = {s}"));
        }
        xi.sort_by(|a, b| principal_angle(*a).total_cmp(&principal_angle(*b)));
        for j in 0..xi.len() {
            for k in j + 1..xi.len() {
                if (xi[j] - xi[k]).norm() <= 1e-9 {
                    problems.push(format!("xi[{j}] and xi[{k}] are not separated"));
                }
            }
        }
        if problems.is_empty() && xi.len() > 1 {
            let min_gap_angle = min_angular_gap(&xi);
            let needed = 2.0 * r.acos();
            if min_gap_angle <= needed {
                problems.push(format!(
                    "r = {r} is not large enough for this E: angular gap {min_gap_angle:.6} \
                     must exceed 2*arccos(r) = {needed:.6} for the tangent construction"
                ));
            }
        }
        if problems.is_empty() {
            Ok(SpectralConfig { xi, r, s })
        } else {
            Err(Error::ConfigInvalid(problems))
        }
    }

    pub fn from_angles(angles: &[f64], r: f64, s: f64) -> Result<Self> {
        Self::new(
            angles.iter().map(|&a| C64::from_polar(1.0, a)).collect(),
            r,
            s,
        )
    }

    pub fn xi(&self) -> &[C64] {
        &self.xi
    }

    pub fn n_points(&self) -> usize {
        self.xi.len()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Minimum chordal separation of the points of E.
    pub fn min_gap(&self) -> f64 {
        let n = self.xi.len();
        let mut m = f64::INFINITY;
        for j in 0..n {
            for k in j + 1..n {
                m = m.min((self.xi[j] - self.xi[k]).norm());
            }
        }
        if m.is_finite() {
            m
        } else {
            2.0
        }
    }

    /// Ceiling on the reciprocal power-series coefficients of
    /// prod_j (1 - conj(xi_j) z): N * (min gap)^{-(N-1)}.
    pub fn reciprocal_coeff_ceiling(&self) -> f64 {
        let n = self.xi.len() as f64;
        n * self.min_gap().powi(-(self.xi.len() as i32 - 1))
    }

    pub fn stolz(&self, u: f64) -> Result<Region> {
        build_stolz(self, u)
    }
}

fn min_angular_gap(sorted_xi: &[C64]) -> f64 {
    let n = sorted_xi.len();
    let mut m = f64::INFINITY;
    for j in 0..n {
        let a = principal_angle(sorted_xi[j]);
        let b = if j + 1 < n {
            principal_angle(sorted_xi[j + 1])
        } else {
            principal_angle(sorted_xi[0]) + 2.0 * std::f64::consts::PI
        };
        m = m.min(b - a);
    }
    m
}

// ---- regions ---------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SectorRegion {
    pub vertex: C64,
    /// Unit vector along the sector axis.
    pub axis: C64,
    pub half_angle: f64,
}

#[derive(Debug, Clone)]
pub struct StolzRegion {
    /// Unit-circle points sorted counter-clockwise.
    pub points: Vec<C64>,
    pub u: f64,
}

#[derive(Debug, Clone)]
pub struct PolygonRegion {
    /// Convex, counter-clockwise.
    pub vertices: Vec<C64>,
}

#[derive(Debug, Clone)]
pub enum Region {
    Sector(SectorRegion),
    Stolz(StolzRegion),
    Polygon(PolygonRegion),
    Product(Box<Region>, Box<Region>),
}

impl Region {
    pub fn sector(vertex: C64, axis: C64, half_angle: f64) -> Region {
        assert!(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2);
        Region::Sector(SectorRegion {
            vertex,
            axis: axis / axis.norm(),
            half_angle,
        })
    }

    /// Standard sector around the positive real axis with vertex 0.
    pub fn sector_at_origin(half_angle: f64) -> Region {
        Region::sector(C64::new(0.0, 0.0), C64::new(1.0, 0.0), half_angle)
    }

    pub fn polygon(vertices: Vec<C64>) -> Result<Region> {
        if vertices.len() < 3 {
            return Err(Error::NonConvex(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let p = PolygonRegion { vertices };
        p.check_convex_ccw()?;
        Ok(Region::Polygon(p))
    }

    pub fn product(a: Region, b: Region) -> Region {
        Region::Product(Box::new(a), Box::new(b))
    }

    /// Signed distance surrogate: negative strictly inside, positive strictly
    /// outside, ~0 on the boundary. Exact for half-plane constraints; the
    /// circular-arc constraint uses |z| - u, which shares sign and zero set.
    pub fn signed_distance(&self, z: C64) -> f64 {
        match self {
            Region::Sector(s) => {
                let up = C64::from_polar(1.0, s.half_angle) * s.axis;
                let lo = C64::from_polar(1.0, -s.half_angle) * s.axis;
                let w = z - s.vertex;
                let d_up = (up.conj() * w).im;
                let d_lo = -(lo.conj() * w).im;
                d_up.max(d_lo)
            }
            Region::Stolz(st) => st.signed_distance(z),
            Region::Polygon(p) => p.signed_distance(z),
            Region::Product(_, _) => panic!("signed_distance of a product region needs a pair"),
        }
    }

    /// Open-region membership with the boundary tie tolerance.
    pub fn contains(&self, z: C64) -> bool {
        self.signed_distance(z) < -MEMBERSHIP_TIE_TOL
    }

    /// Membership in the closure, with slack `tol` outward.
    pub fn contains_closure(&self, z: C64, tol: f64) -> bool {
        self.signed_distance(z) <= tol
    }

    pub fn contains_pair(&self, z1: C64, z2: C64) -> bool {
        match self {
            Region::Product(a, b) => a.contains(z1) && b.contains(z2),
            _ => self.contains(z1) && self.contains(z2),
        }
    }

    /// Oriented boundary (counter-clockwise). Sectors are unbounded; their
    /// boundary needs a truncation radius, see `sector_boundary`.
    pub fn boundary(&self) -> Contour {
        match self {
            Region::Stolz(st) => st.boundary(),
            Region::Polygon(p) => p.boundary(),
            Region::Sector(_) => panic!("sector boundary needs a truncation radius"),
            Region::Product(_, _) => panic!("product regions have no planar boundary"),
        }
    }

    /// Points on the boundary, roughly uniform per piece, `per_piece` each.
    pub fn boundary_samples(&self, per_piece: usize) -> Vec<C64> {
        self.boundary().samples(per_piece)
    }

    /// Interior anchor: centroid-like point guaranteed inside.
    pub fn interior_anchor(&self) -> C64 {
        match self {
            Region::Sector(s) => s.vertex + s.axis,
            Region::Stolz(_) => C64::new(0.0, 0.0),
            Region::Polygon(p) => {
                let n = p.vertices.len() as f64;
                p.vertices.iter().sum::<C64>() / C64::new(n, 0.0)
            }
            Region::Product(_, _) => panic!("no planar anchor for a product region"),
        }
    }

    /// Sample set for sup-norm and decay certification: boundary-weighted
    /// with interior fill, plus geometric clustering (ratio 1/2, `layers`
    /// levels) toward each distinguished corner.
    pub fn sample_points(&self, boundary_per_piece: usize, layers: usize) -> Vec<C64> {
        match self {
            Region::Sector(s) => {
                let mut out = Vec::new();
                let kmax = layers as i32;
                for k in (-6..=kmax).rev() {
                    let rr = 2.0f64.powi(-k);
                    for m in 0..9 {
                        let phi = (m as f64 / 8.0 - 0.5) * 2.0 * (s.half_angle - 0.05);
                        out.push(s.vertex + s.axis * C64::from_polar(rr, phi));
                    }
                }
                out
            }
            Region::Product(a, b) => {
                // Diagonal-ish pairing is handled by callers; return the
                // union of factors for anything that needs raw points.
                let mut out = a.sample_points(boundary_per_piece, layers);
                out.extend(b.sample_points(boundary_per_piece, layers));
                out
            }
            _ => {
                let anchor = self.interior_anchor();
                let boundary = self.boundary_samples(boundary_per_piece);
                let mut out = Vec::new();
                // Interior fill along anchor->boundary chords.
                for &b in &boundary {
                    for t in [0.15, 0.4, 0.65, 0.85, 0.97] {
                        out.push(anchor + (b - anchor) * C64::new(t, 0.0));
                    }
                }
                // Geometric clustering toward the distinguished corners.
                for corner in self.corners() {
                    for k in 1..=layers {
                        let d = 2.0f64.powi(-(k as i32));
                        for &b in boundary.iter().step_by(3) {
                            let target = anchor + (b - anchor) * C64::new(0.5, 0.0);
                            out.push(corner + (target - corner) * C64::new(d, 0.0));
                        }
                    }
                }
                out.retain(|&z| self.contains(z));
                out
            }
        }
    }

    /// Distinguished corner points (the unit-circle vertices for Stolz
    /// domains, all vertices for polygons, the vertex for sectors).
    pub fn corners(&self) -> Vec<C64> {
        match self {
            Region::Sector(s) => vec![s.vertex],
            Region::Stolz(st) => st.points.clone(),
            Region::Polygon(p) => p.vertices.clone(),
            Region::Product(a, b) => {
                let mut v = a.corners();
                v.extend(b.corners());
                v
            }
        }
    }
}

impl StolzRegion {
    fn tangency_half_width(&self) -> f64 {
        self.u.acos()
    }

    fn signed_distance(&self, z: C64) -> f64 {
        let n = self.points.len();
        let delta = self.tangency_half_width();
        let mut d = f64::NEG_INFINITY;
        for j in 0..n {
            let alpha = principal_angle(self.points[j]);
            let t_minus = C64::from_polar(self.u, alpha - delta);
            let t_plus = C64::from_polar(self.u, alpha + delta);
            // CCW edges: t_minus -> xi and xi -> t_plus.
            for (a, b) in [(t_minus, self.points[j]), (self.points[j], t_plus)] {
                let u = (b - a) / (b - a).norm();
                d = d.max(-((u.conj() * (z - a)).im));
            }
        }
        // Arc constraints: active only in the arc's angular span.
        let az = principal_angle(z);
        for j in 0..n {
            let a0 = principal_angle(self.points[j]) + delta;
            let a1 = if n == 1 {
                principal_angle(self.points[0]) - delta + 2.0 * std::f64::consts::PI
            } else {
                let next = (j + 1) % n;
                let mut b = principal_angle(self.points[next]) - delta;
                if b < a0 {
                    b += 2.0 * std::f64::consts::PI;
                }
                b
            };
            for cand in [az, az + 2.0 * std::f64::consts::PI] {
                if cand >= a0 && cand <= a1 {
                    d = d.max(z.norm() - self.u);
                }
            }
        }
        d
    }

    fn boundary(&self) -> Contour {
        let n = self.points.len();
        let delta = self.tangency_half_width();
        let mut pieces = Vec::new();
        for j in 0..n {
            let alpha = principal_angle(self.points[j]);
            let a0 = alpha + delta;
            let a1 = if n == 1 {
                alpha - delta + 2.0 * std::f64::consts::PI
            } else {
                let next = (j + 1) % n;
                let mut b = principal_angle(self.points[next]) - delta;
                if b < a0 {
                    b += 2.0 * std::f64::consts::PI;
                }
                b
            };
            // Arc from this point's + tangency to the next point's -.
            pieces.extend(split_arc(C64::new(0.0, 0.0), self.u, a0, a1));
            let next = (j + 1) % n;
            let beta = principal_angle(self.points[next]);
            let t_minus = C64::from_polar(self.u, beta - delta);
            let t_plus = C64::from_polar(self.u, beta + delta);
            pieces.push(Piece::segment(t_minus, self.points[next]).corner_end());
            pieces.push(Piece::segment(self.points[next], t_plus).corner_start());
        }
        Contour::new(pieces)
    }
}

impl PolygonRegion {
    fn check_convex_ccw(&self) -> Result<()> {
        let n = self.vertices.len();
        let mut signed_area = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            signed_area += a.re * b.im - b.re * a.im;
        }
        if signed_area <= 0.0 {
            return Err(Error::NonConvex(
                "vertex cycle is clockwise or degenerate".into(),
            ));
        }
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            let cross = ((b - a).conj() * (c - b)).im;
            if cross < -1e-12 {
                return Err(Error::NonConvex(format!(
                    "reflex corner at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(())
    }

    fn signed_distance(&self, z: C64) -> f64 {
        let n = self.vertices.len();
        let mut d = f64::NEG_INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let u = (b - a) / (b - a).norm();
            d = d.max(-((u.conj() * (z - a)).im));
        }
        d
    }

    fn boundary(&self) -> Contour {
        let n = self.vertices.len();
        let pieces = (0..n)
            .map(|i| {
                Piece::segment(self.vertices[i], self.vertices[(i + 1) % n])
                    .corner_start()
                    .corner_end()
            })
            .collect();
        Contour::new(pieces)
    }
}

/// Interior of the convex hull of D(0, u) and the points of E: circle arcs
/// joined to each point by its tangent segments, oriented counter-clockwise.
pub fn build_stolz(cfg: &SpectralConfig, u: f64) -> Result<Region> {
    if !(0.0 < u && u < 1.0) {
        return Err(Error::ConfigInvalid(vec![format!(
            "stolz radius must be in (0,1), got {u}"
        )]));
    }
    if cfg.xi.len() > 1 {
        let gap = min_angular_gap(&cfg.xi);
        if gap <= 2.0 * u.acos() {
            return Err(Error::DegenerateHull { radius: u });
        }
    }
    Ok(Region::Stolz(StolzRegion {
        points: cfg.xi.clone(),
        u,
    }))
}

/// Truncated counter-clockwise boundary of a sector: out along the lower
/// ray, cap arc at `r_max`, back along the upper ray. Long rays are pre-split
/// into geometrically growing pieces so quadrature resolves every scale.
pub fn sector_boundary(s: &SectorRegion, r_max: f64) -> Contour {
    assert!(r_max > 0.0);
    let dir_lo = s.axis * C64::from_polar(1.0, -s.half_angle);
    let dir_up = s.axis * C64::from_polar(1.0, s.half_angle);
    let mut pieces = Vec::new();
    // Radial breakpoints 0 -> 1 -> 2 -> 4 ... -> r_max (or a single span when
    // r_max is small).
    let mut radii = vec![0.0, r_max.min(1.0)];
    while *radii.last().unwrap() < r_max {
        let next = (radii.last().unwrap() * 2.0).min(r_max);
        radii.push(next);
    }
    for w in radii.windows(2) {
        let mut p = Piece::segment(s.vertex + dir_lo * C64::new(w[0], 0.0), s.vertex + dir_lo * C64::new(w[1], 0.0));
        if w[0] == 0.0 {
            p = p.corner_start();
        }
        pieces.push(p);
    }
    pieces.extend(split_arc_at(
        s.vertex,
        r_max,
        s.axis.arg() - s.half_angle,
        s.axis.arg() + s.half_angle,
    ));
    for w in radii.windows(2).rev() {
        let mut p = Piece::segment(s.vertex + dir_up * C64::new(w[1], 0.0), s.vertex + dir_up * C64::new(w[0], 0.0));
        if w[0] == 0.0 {
            p = p.corner_end();
        }
        pieces.push(p);
    }
    Contour::new(pieces)
}

pub(crate) use contour::{split_arc, split_arc_at};

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_single() -> SpectralConfig {
        SpectralConfig::from_angles(&[0.0], 0.3, 0.6).unwrap()
    }

    #[test]
    fn stolz_membership_basics() {
        let cfg = cfg_single();
        let e = cfg.stolz(0.5).unwrap();
        assert!(e.contains(C64::new(0.0, 0.0)));
        // The unit-circle point is a boundary vertex of the open region.
        assert!(!e.contains(C64::new(1.0, 0.0)));
        assert!(!e.contains(C64::new(-0.9, 0.0)));
        assert!(e.contains(C64::new(0.7, 0.0)));
    }

    #[test]
    fn stolz_two_points_tangency_geometry() {
        let cfg = SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.5, 0.7).unwrap();
        let region = cfg.stolz(0.5).unwrap();
        let contour = region.boundary();
        let mut arcs = 0;
        let mut segments = 0;
        let mut seg_pieces = Vec::new();
        for p in contour.pieces() {
            match p.geom {
                PieceGeom::Arc { .. } => arcs += 1,
                PieceGeom::Segment { a, b } => {
                    segments += 1;
                    seg_pieces.push((a, b));
                }
            }
        }
        // Long arcs get split for quadrature; count connected arc runs.
        assert_eq!(segments, 4);
        assert!(arcs >= 2);
        // Tangency: each segment with an endpoint on the circle |z| = u is
        // perpendicular to the radius there.
        for (a, b) in seg_pieces {
            let (t, x) = if (a.norm() - 0.5).abs() < 1e-9 { (a, b) } else { (b, a) };
            assert!((t.norm() - 0.5).abs() < 1e-12);
            assert!((x.norm() - 1.0).abs() < 1e-12);
            let dot = ((x - t).conj() * t).re;
            assert!(dot.abs() < 1e-12, "tangent segment not perpendicular to radius");
        }
    }

    #[test]
    fn stolz_monotone_in_radius() {
        let cfg = cfg_single();
        let e1 = cfg.stolz(0.4).unwrap();
        let e2 = cfg.stolz(0.6).unwrap();
        for z in e1.sample_points(16, 8) {
            assert!(e2.contains(z), "{z} in E_0.4 but not E_0.6");
        }
    }

    #[test]
    fn degenerate_hull_detected() {
        let cfg = SpectralConfig::from_angles(&[0.0, 0.8], 0.95, 0.97).unwrap();
        // u = 0.5 gives arccos(u) ~ 1.047, arcs of half-width > 0.4 overlap.
        match cfg.stolz(0.5) {
            Err(Error::DegenerateHull { .. }) => {}
            other => panic!("expected DegenerateHull, got {other:?}"),
        }
    }

    #[test]
    fn config_rejects_small_r_for_close_points() {
        match SpectralConfig::from_angles(&[0.0, 0.5], 0.3, 0.6) {
            Err(Error::ConfigInvalid(_)) => {}
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn membership_boundary_consistency() {
        // Points offset inward/outward along the normal flip membership.
        let cfg = cfg_single();
        let region = cfg.stolz(0.5).unwrap();
        for &z in &region.boundary().samples(7) {
            let d = region.signed_distance(z);
            assert!(d.abs() < 1e-9, "boundary sample has signed distance {d}");
        }
    }

    #[test]
    fn stolz_pullback_into_sector() {
        // Every sample of E_s maps under z -> 1 - conj(xi) z into the sector
        // of half-angle arcsin(s) at the origin.
        let cfg = SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.5, 0.75).unwrap();
        let e_s = cfg.stolz(cfg.s()).unwrap();
        let sector = Region::sector_at_origin(cfg.s().asin() + 1e-9);
        for &xi in cfg.xi() {
            for z in e_s.sample_points(24, 10) {
                let w = C64::new(1.0, 0.0) - xi.conj() * z;
                assert!(
                    sector.contains_closure(w, 1e-9),
                    "xi = {xi}, z = {z} maps to {w} outside the sector"
                );
            }
        }
    }

    #[test]
    fn sector_membership() {
        let s = Region::sector_at_origin(0.7);
        assert!(s.contains(C64::new(1.0, 0.0)));
        assert!(s.contains(C64::new(1.0, 0.5)));
        assert!(!s.contains(C64::new(-1.0, 0.1)));
        assert!(!s.contains(C64::new(1.0, 1.2)));
    }
}
