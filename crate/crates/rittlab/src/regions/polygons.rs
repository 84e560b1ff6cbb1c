use num_complex::Complex64 as C64;

use super::{principal_angle, Region, SpectralConfig};
use crate::error::{Error, Result};

/// The nested convex polygons of the localization construction: an inner
/// polygon with vertices {zeta_1, c_1, ..., zeta_m, c_m} and an outer one
/// with the c_i replaced by d_i = (c_i + c_i/|c_i|)/2. The zeta list holds
/// the points of E (half-angle theta there) interleaved with auxiliary
/// vertices placed on an interior circle.
#[derive(Debug, Clone)]
pub struct TransferPolygons {
    pub inner: Region,
    pub outer: Region,
    pub zeta: Vec<C64>,
    /// For each zeta, the index into the config's E when it is a unit-circle
    /// vertex.
    pub unit_index: Vec<Option<usize>>,
    pub c: Vec<C64>,
    pub d: Vec<C64>,
    pub theta: f64,
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Intersection of the two half-lines p1 + t u1 and p2 + s u2 (t, s > 0).
fn ray_intersection(p1: C64, u1: C64, p2: C64, u2: C64) -> Option<C64> {
    let denom = cross(u1, u2);
    if denom.abs() < 1e-14 {
        return None;
    }
    let rhs = p2 - p1;
    let t = cross(rhs, u2) / denom;
    let s = cross(rhs, u1) / denom;
    if t <= 0.0 || s <= 0.0 {
        return None;
    }
    Some(p1 + u1 * C64::new(t, 0.0))
}

fn inward_axis(z: C64) -> C64 {
    -z / z.norm()
}

/// Build the nested polygons for a given half-angle and per-gap auxiliary
/// vertex count. Auxiliary vertices sit on the circle of radius (1 + r)/2,
/// equally spaced inside each angular gap of E. Errors when adjacent sector
/// boundaries fail to meet inside the punctured disc, when the vertex cycle
/// is not convex, or when the inner polygon misses the closed hull of
/// D(0, r) and E.
pub fn build_transfer_polygons(
    cfg: &SpectralConfig,
    theta: f64,
    aux_per_gap: usize,
) -> Result<TransferPolygons> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::ConfigInvalid(vec![format!(
            "theta must lie in (0, pi/2), got {theta}"
        )]));
    }
    let n = cfg.n_points();
    let aux_radius = 0.5 * (1.0 + cfg.r());
    let tau = 2.0 * std::f64::consts::PI;

    let mut zeta = Vec::new();
    let mut unit_index = Vec::new();
    for j in 0..n {
        zeta.push(cfg.xi()[j]);
        unit_index.push(Some(j));
        let a0 = principal_angle(cfg.xi()[j]);
        let a1 = if j + 1 < n {
            principal_angle(cfg.xi()[j + 1])
        } else {
            principal_angle(cfg.xi()[0]) + tau
        };
        for k in 1..=aux_per_gap {
            let ang = a0 + (a1 - a0) * k as f64 / (aux_per_gap + 1) as f64;
            zeta.push(C64::from_polar(aux_radius, ang));
            unit_index.push(None);
        }
    }
    let m = zeta.len();
    if m < 2 {
        return Err(Error::NonConvex(format!(
            "need at least 2 sector vertices for a polygon, got {m}"
        )));
    }

    let rot_plus = C64::from_polar(1.0, -theta);
    let rot_minus = C64::from_polar(1.0, theta);
    let mut c = Vec::with_capacity(m);
    for i in 0..m {
        let zi = zeta[i];
        let zj = zeta[(i + 1) % m];
        let u1 = inward_axis(zi) * rot_plus;
        let u2 = inward_axis(zj) * rot_minus;
        let ci = ray_intersection(zi, u1, zj, u2).ok_or(Error::MeetOutsideDisc(zi))?;
        if ci.norm() >= 1.0 - 1e-9 || ci.norm() <= 1e-9 {
            return Err(Error::MeetOutsideDisc(ci));
        }
        c.push(ci);
    }
    let d: Vec<C64> = c
        .iter()
        .map(|&ci| (ci + ci / ci.norm()) * C64::new(0.5, 0.0))
        .collect();

    let mut inner_vertices = Vec::with_capacity(2 * m);
    let mut outer_vertices = Vec::with_capacity(2 * m);
    for i in 0..m {
        inner_vertices.push(zeta[i]);
        inner_vertices.push(c[i]);
        outer_vertices.push(zeta[i]);
        outer_vertices.push(d[i]);
    }
    let inner = Region::polygon(inner_vertices)?;
    let outer = Region::polygon(outer_vertices)?;

    // Nesting: by convexity it is enough that every inner vertex lies in the
    // closure of the outer polygon.
    for i in 0..m {
        if !outer.contains_closure(c[i], 1e-10) {
            return Err(Error::NonConvex(format!(
                "inner vertex c_{i} = {} escapes the outer polygon",
                c[i]
            )));
        }
    }
    // The closed hull of D(0, r) and E must sit inside the inner polygon so
    // spectra of the operators under study are enclosed.
    for k in 0..64 {
        let z = C64::from_polar(cfg.r(), tau * k as f64 / 64.0);
        if !inner.contains(z) {
            return Err(Error::ConfigInvalid(vec![format!(
                "inner polygon misses the type disc at {z}; add auxiliary vertices"
            )]));
        }
    }

    Ok(TransferPolygons {
        inner,
        outer,
        zeta,
        unit_index,
        c,
        d,
        theta,
    })
}

/// Deterministic instantiation of the construction: double the per-gap
/// auxiliary count until every validity condition holds.
pub fn auto_transfer_polygons(cfg: &SpectralConfig, theta: f64) -> Result<TransferPolygons> {
    let mut aux = 1usize;
    let mut last_err = None;
    while aux <= 64 {
        match build_transfer_polygons(cfg, theta, aux) {
            Ok(p) => return Ok(p),
            Err(e) => last_err = Some(e),
        }
        aux *= 2;
    }
    Err(last_err.unwrap_or_else(|| {
        Error::ConfigInvalid(vec!["auxiliary vertex search exhausted".into()])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_rule_direct_evaluation() {
        let c = C64::new(0.5, 0.0);
        let d = (c + c / c.norm()) * C64::new(0.5, 0.0);
        assert!((d - C64::new(0.75, 0.0)).norm() < 1e-15);

        let c = C64::new(0.3, 0.4);
        let d = (c + c / c.norm()) * C64::new(0.5, 0.0);
        assert!((d - C64::new(0.45, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn single_point_three_aux() {
        let cfg = SpectralConfig::from_angles(&[0.0], 0.3, 0.6).unwrap();
        let polys = build_transfer_polygons(&cfg, std::f64::consts::FRAC_PI_3, 3).unwrap();
        assert_eq!(polys.zeta.len(), 4);
        for ci in &polys.c {
            assert!(ci.norm() < 1.0 && ci.norm() > 1e-9);
        }
        // Inner polygon nests in the outer one: dense boundary samples of the
        // inner polygon lie in the closure of the outer.
        for z in polys.inner.boundary_samples(13) {
            assert!(polys.outer.contains_closure(z, 1e-9), "{z}");
        }
        // E is among the vertices of both polygons.
        assert!(polys
            .zeta
            .iter()
            .any(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn degenerate_vertex_count_rejected() {
        let cfg = SpectralConfig::from_angles(&[0.0], 0.3, 0.6).unwrap();
        match build_transfer_polygons(&cfg, 1.0, 0) {
            Err(_) => {}
            Ok(p) => panic!("m = 1 should not build, got {} vertices", p.zeta.len()),
        }
    }

    #[test]
    fn auto_search_two_points() {
        let cfg =
            SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.4, 0.7).unwrap();
        let polys = auto_transfer_polygons(&cfg, 1.40).unwrap();
        assert!(polys.zeta.len() >= 4);
        assert_eq!(
            polys.unit_index.iter().filter(|u| u.is_some()).count(),
            2
        );
    }
}
