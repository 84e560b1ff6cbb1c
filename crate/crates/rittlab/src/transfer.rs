//! Localization machinery linking the disc-type and sector-type calculi:
//! Cauchy localization of polynomials over polygon vertex arcs, pullbacks to
//! sector coordinates, the four-way boundary split, the bounded corrector,
//! and the two-sided numerical transfer check.

use std::sync::Mutex;

use num_complex::Complex64 as C64;

use crate::calculus::{
    classify_ritt_e, estimate_fc_constant_pair, estimate_sectorial_constant_pair,
    ConstantEstimate,
};
use crate::error::{Error, Result};
use crate::holofun::{sup_norm2, BivariatePoly, HoloFun2};
use crate::linalg::CMatrix;
use crate::regions::{auto_transfer_polygons, Contour, Piece, SpectralConfig, TransferPolygons};

/// Exclusion zone around contours; evaluation inside it errors.
pub const CONTOUR_EXCLUSION: f64 = 1e-9;
const EVAL_TOL: f64 = 1e-10;

// ---- arc Cauchy transforms ------------------------------------------------------

/// Cached monomial Cauchy transforms along one open contour:
/// I_k(z) = (1/2 pi i) int lambda^k / (lambda - z) d lambda.
pub struct ArcCauchy {
    contour: Contour,
    levels: Mutex<Vec<Option<Vec<(C64, C64)>>>>,
}

impl ArcCauchy {
    pub fn new(contour: Contour) -> ArcCauchy {
        ArcCauchy {
            contour,
            levels: Mutex::new(Vec::new()),
        }
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.contour.distance(z)
    }

    fn with_level<R>(&self, l: usize, f: impl FnOnce(&[(C64, C64)]) -> R) -> R {
        let mut guard = self.levels.lock().unwrap();
        while guard.len() <= l {
            guard.push(None);
        }
        if guard[l].is_none() {
            guard[l] = Some(self.contour.nodes(l));
        }
        f(guard[l].as_ref().unwrap())
    }

    /// All transforms k = 0..=dmax at z, refined together until the worst
    /// component is stable.
    pub fn transforms(&self, dmax: usize, z: C64) -> Result<Vec<C64>> {
        if self.distance(z) < CONTOUR_EXCLUSION {
            return Err(Error::OnContour(z));
        }
        let scale = C64::new(0.0, -0.5 / std::f64::consts::PI);
        let mut prev: Option<Vec<C64>> = None;
        for l in 0..=8usize {
            if self.contour.node_count(l) > 1 << 14 {
                break;
            }
            let acc = self.with_level(l, |nodes| {
                let mut acc = vec![C64::new(0.0, 0.0); dmax + 1];
                for &(lam, w) in nodes {
                    let kernel = w / (lam - z);
                    let mut pow = C64::new(1.0, 0.0);
                    for a in acc.iter_mut() {
                        *a += kernel * pow;
                        pow *= lam;
                    }
                }
                for a in acc.iter_mut() {
                    *a *= scale;
                }
                acc
            });
            if let Some(p) = prev {
                let diff = acc
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if diff < EVAL_TOL {
                    return Ok(acc);
                }
            }
            prev = Some(acc);
        }
        Err(Error::NoConvergence(format!(
            "arc Cauchy transform did not stabilize at {z}"
        )))
    }
}

// ---- localization system ---------------------------------------------------------

/// The polygon pair with its boundary partition: gamma_i is the piece of the
/// outer polygon boundary around vertex zeta_i (split at the midpoint of
/// each edge entering a zeta vertex), and, for unit-circle vertices, the
/// pulled-back arcs in sector coordinates.
pub struct LocalizationSystem {
    pub cfg: SpectralConfig,
    pub polys: TransferPolygons,
    gammas: Vec<ArcCauchy>,
}

impl LocalizationSystem {
    pub fn new(cfg: &SpectralConfig, theta: f64) -> Result<LocalizationSystem> {
        let polys = auto_transfer_polygons(cfg, theta)?;
        let gammas = build_gammas(&polys)
            .into_iter()
            .map(ArcCauchy::new)
            .collect();
        Ok(LocalizationSystem {
            cfg: cfg.clone(),
            polys,
            gammas,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.polys.zeta.len()
    }

    pub fn gamma(&self, i: usize) -> &ArcCauchy {
        &self.gammas[i]
    }

    /// Index into E for a unit-circle vertex.
    pub fn unit_index(&self, i: usize) -> Option<usize> {
        self.polys.unit_index[i]
    }

    /// Pulled-back vertex arc: the image of gamma_i under
    /// w = 1 - conj(xi_p) lambda, a contour through 0.
    pub fn pullback_gamma1(&self, i: usize) -> Result<Contour> {
        let p = self.require_unit(i)?;
        Ok(map_contour(self.gammas[i].contour(), self.cfg.xi()[p]))
    }

    /// The rest of the pulled-back polygon boundary.
    pub fn pullback_gamma2(&self, i: usize) -> Result<Contour> {
        let p = self.require_unit(i)?;
        let m = self.vertex_count();
        let mut pieces = Vec::new();
        for step in 1..m {
            let j = (i + step) % m;
            pieces
                .extend_from_slice(map_contour(self.gammas[j].contour(), self.cfg.xi()[p]).pieces());
        }
        Ok(Contour::new(pieces))
    }

    fn require_unit(&self, i: usize) -> Result<usize> {
        self.unit_index(i).ok_or_else(|| {
            Error::ConfigInvalid(vec![format!(
                "vertex {i} is not a unit-circle vertex; pullback undefined"
            )])
        })
    }
}

/// Affine image of a contour under lambda -> 1 - conj(xi) lambda. Segments
/// map to segments; corner flags carry over.
fn map_contour(c: &Contour, xi: C64) -> Contour {
    let one = C64::new(1.0, 0.0);
    let pieces = c
        .pieces()
        .iter()
        .map(|p| {
            let (a, b) = (p.start(), p.end());
            let mut q = Piece::segment(one - xi.conj() * a, one - xi.conj() * b);
            if p.corner_start {
                q = q.corner_start();
            }
            if p.corner_end {
                q = q.corner_end();
            }
            q
        })
        .collect();
    Contour::new(pieces)
}

/// Partition of the outer polygon boundary into per-vertex arcs. The
/// boundary is split at the midpoint of each edge entering a zeta vertex,
/// so gamma_i runs mid(d_{i-1}, zeta_i) -> zeta_i -> d_i -> mid(d_i,
/// zeta_{i+1}). Corner grading is flagged at the true polygon vertices.
fn build_gammas(polys: &TransferPolygons) -> Vec<Contour> {
    let m = polys.zeta.len();
    let half = C64::new(0.5, 0.0);
    (0..m)
        .map(|i| {
            let prev_d = polys.d[(i + m - 1) % m];
            let zeta = polys.zeta[i];
            let d = polys.d[i];
            let next_zeta = polys.zeta[(i + 1) % m];
            let mid_in = (prev_d + zeta) * half;
            let mid_out = (d + next_zeta) * half;
            Contour::new(vec![
                Piece::segment(mid_in, zeta).corner_end(),
                Piece::segment(zeta, d).corner_start().corner_end(),
                Piece::segment(d, mid_out).corner_start(),
            ])
        })
        .collect()
}

// ---- localized functions -----------------------------------------------------------

/// Double Cauchy transform of a polynomial over a pair of arcs, evaluable
/// off the arcs: a coefficient-weighted sum of per-variable monomial
/// transforms.
pub struct LocalizedFun<'a> {
    coeffs: Vec<Vec<C64>>,
    arc1: &'a ArcCauchy,
    arc2: &'a ArcCauchy,
}

impl<'a> LocalizedFun<'a> {
    pub fn eval(&self, z1: C64, z2: C64) -> Result<C64> {
        let d1 = self.coeffs.len() - 1;
        let d2 = self.coeffs[0].len().saturating_sub(1);
        let u = self.arc1.transforms(d1, z1)?;
        let v = self.arc2.transforms(d2, z2)?;
        let mut acc = C64::new(0.0, 0.0);
        for (k, row) in self.coeffs.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                acc += c * u[k] * v[l];
            }
        }
        Ok(acc)
    }
}

/// Cauchy localization of a polynomial with phi(0,0) = 0 onto the vertex
/// arc pair (i, j).
pub fn localize<'a>(
    phi: &BivariatePoly,
    sys: &'a LocalizationSystem,
    i: usize,
    j: usize,
) -> Result<LocalizedFun<'a>> {
    if phi.eval(C64::new(0.0, 0.0), C64::new(0.0, 0.0)).norm()
        > 1e-12 * phi.max_coeff_abs().max(1.0)
    {
        return Err(Error::ConfigInvalid(vec![
            "localization needs phi(0,0) = 0".into(),
        ]));
    }
    Ok(LocalizedFun {
        coeffs: phi.coeffs.clone(),
        arc1: sys.gamma(i),
        arc2: sys.gamma(j),
    })
}

/// Pullback of a localized piece to sector coordinates at unit vertices
/// (i, j): g(z1, z2) = phi_ij(xi_p (1 - z1), xi_q (1 - z2)).
pub struct PullbackFun<'a> {
    inner: LocalizedFun<'a>,
    xi_p: C64,
    xi_q: C64,
}

impl<'a> PullbackFun<'a> {
    pub fn eval(&self, z1: C64, z2: C64) -> Result<C64> {
        let one = C64::new(1.0, 0.0);
        self.inner
            .eval(self.xi_p * (one - z1), self.xi_q * (one - z2))
    }
}

pub fn pullback_g<'a>(
    phi: &BivariatePoly,
    sys: &'a LocalizationSystem,
    i: usize,
    j: usize,
) -> Result<PullbackFun<'a>> {
    let p = sys.unit_index(i).ok_or_else(|| {
        Error::ConfigInvalid(vec![format!("vertex {i} is not on the unit circle")])
    })?;
    let q = sys.unit_index(j).ok_or_else(|| {
        Error::ConfigInvalid(vec![format!("vertex {j} is not on the unit circle")])
    })?;
    Ok(PullbackFun {
        inner: localize(phi, sys, i, j)?,
        xi_p: sys.cfg.xi()[p],
        xi_q: sys.cfg.xi()[q],
    })
}

/// The four Cauchy pieces of the pulled-back polynomial psi over
/// Gamma^i_{1,2} x Gamma^j_{1,2}. f(0,0,..) is F11, pairing the two vertex
/// arcs.
pub struct BoundarySplit {
    psi: BivariatePoly,
    arcs1: [ArcCauchy; 2],
    arcs2: [ArcCauchy; 2],
}

impl BoundarySplit {
    pub fn f(&self, a: usize, b: usize, z1: C64, z2: C64) -> Result<C64> {
        let d1 = self.psi.coeffs.len() - 1;
        let d2 = self.psi.coeffs[0].len().saturating_sub(1);
        let u = self.arcs1[a].transforms(d1, z1)?;
        let v = self.arcs2[b].transforms(d2, z2)?;
        let mut acc = C64::new(0.0, 0.0);
        for (k, row) in self.psi.coeffs.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                acc += c * u[k] * v[l];
            }
        }
        Ok(acc)
    }

    pub fn psi(&self) -> &BivariatePoly {
        &self.psi
    }

    pub fn sum(&self, z1: C64, z2: C64) -> Result<C64> {
        Ok(self.f(0, 0, z1, z2)?
            + self.f(0, 1, z1, z2)?
            + self.f(1, 0, z1, z2)?
            + self.f(1, 1, z1, z2)?)
    }
}

/// Build the boundary split of psi(z1,z2) = phi(xi_p(1-z1), xi_q(1-z2))
/// over the pulled-back arc pairs at unit vertices (i, j).
pub fn boundary_split_f(
    phi: &BivariatePoly,
    sys: &LocalizationSystem,
    i: usize,
    j: usize,
) -> Result<BoundarySplit> {
    let p = sys.unit_index(i).ok_or_else(|| {
        Error::ConfigInvalid(vec![format!("vertex {i} is not on the unit circle")])
    })?;
    let q = sys.unit_index(j).ok_or_else(|| {
        Error::ConfigInvalid(vec![format!("vertex {j} is not on the unit circle")])
    })?;
    let xi_p = sys.cfg.xi()[p];
    let xi_q = sys.cfg.xi()[q];
    let psi = phi.compose_affine(xi_p, -xi_p, xi_q, -xi_q);
    Ok(BoundarySplit {
        psi,
        arcs1: [
            ArcCauchy::new(sys.pullback_gamma1(i)?),
            ArcCauchy::new(sys.pullback_gamma2(i)?),
        ],
        arcs2: [
            ArcCauchy::new(sys.pullback_gamma1(j)?),
            ArcCauchy::new(sys.pullback_gamma2(j)?),
        ],
    })
}

/// The corrector built from the boundary split:
/// h = F11(z1,z2) - F12(z1,0)/(1+z2) - F21(0,z2)/(1+z1)
///     + F22(0,0)/((1+z1)(1+z2)).
/// The three subtracted terms cancel the single-variable boundary
/// contributions, leaving a function bounded on the sector product.
pub struct CorrectorH<'a> {
    split: &'a BoundarySplit,
    f22_00: C64,
}

impl<'a> CorrectorH<'a> {
    pub fn eval(&self, z1: C64, z2: C64) -> Result<C64> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let f11 = self.split.f(0, 0, z1, z2)?;
        let f12 = self.split.f(0, 1, z1, zero)?;
        let f21 = self.split.f(1, 0, zero, z2)?;
        Ok(f11 - f12 / (one + z2) - f21 / (one + z1)
            + self.f22_00 / ((one + z1) * (one + z2)))
    }
}

pub fn corrector_h(split: &BoundarySplit) -> Result<CorrectorH<'_>> {
    let zero = C64::new(0.0, 0.0);
    let f22_00 = split.f(1, 1, zero, zero)?;
    Ok(CorrectorH { split, f22_00 })
}

/// Empirical certification of the corrector on sector samples: sup of |h|
/// over the truncated sector product, the drift of h near the origin
/// between the two prescribed diagonal offsets, and the empirical constant
/// against a mild sectorial profile.
#[derive(Debug, Clone)]
pub struct CorrectorReport {
    pub sup_h: f64,
    /// sup |h| / sup |phi| over the outer polygon product.
    pub kappa: f64,
    /// |h(1e-4, 1e-4) - h(1e-6, 1e-6)|.
    pub origin_drift: f64,
    /// Empirical constant against the sectorial profile with s = 1/4 per
    /// variable on the truncated sample.
    pub decay_c: f64,
}

pub fn certify_corrector(
    h: &CorrectorH<'_>,
    theta: f64,
    phi_sup_outer: f64,
) -> Result<CorrectorReport> {
    let mut sup_h = 0.0f64;
    let mut decay_c = 0.0f64;
    let profile = |z: C64| -> f64 {
        let m = z.norm().powf(0.25);
        m / (1.0 + m * m)
    };
    let margin = 0.12;
    let mut radii = Vec::new();
    for k in -12i32..=4 {
        radii.push(2.0f64.powi(k));
    }
    for &r1 in &radii {
        for m1 in [-2i32, -1, 0, 1, 2] {
            let phi1 = m1 as f64 / 2.0 * (theta - margin);
            let z1 = C64::from_polar(r1, phi1);
            for &r2 in radii.iter().step_by(2) {
                for m2 in [-1i32, 0, 1] {
                    let phi2 = m2 as f64 * (theta - margin) * 0.7;
                    let z2 = C64::from_polar(r2, phi2);
                    let v = h.eval(z1, z2)?.norm();
                    sup_h = sup_h.max(v);
                    let denom = profile(z1) * profile(z2);
                    if denom > 1e-300 {
                        decay_c = decay_c.max(v / denom);
                    }
                }
            }
        }
    }
    let d1 = C64::new(1e-4, 0.0);
    let d2 = C64::new(1e-6, 0.0);
    let origin_drift = (h.eval(d1, d1)? - h.eval(d2, d2)?).norm();
    Ok(CorrectorReport {
        sup_h,
        kappa: sup_h / phi_sup_outer.max(1e-300),
        origin_drift,
        decay_c,
    })
}

// ---- two-sided transfer check --------------------------------------------------------

/// Numeric check of the transfer equivalence: calculus constants on the
/// disc side for the pair, on the sector side for every shifted pair
/// (I - conj(xi_i) T1, I - conj(xi_j) T2), plus the polynomial route
/// through the interpolation split. The report asserts joint finiteness,
/// not a specific ratio.
#[derive(Debug, Clone)]
pub struct TransferReport {
    pub ritt_classified: (bool, bool),
    pub k_ritt: f64,
    pub k_ritt_witness: String,
    pub k_sect: Vec<Vec<f64>>,
    pub k_poly: f64,
    pub all_finite: bool,
}

pub struct TransferCorpus {
    pub pair_funs: Vec<HoloFun2>,
    pub sector_funs: Vec<HoloFun2>,
    pub polys: Vec<BivariatePoly>,
}

pub fn transfer_verify(
    t1: &CMatrix,
    t2: &CMatrix,
    cfg: &SpectralConfig,
    u: f64,
    theta: f64,
    corpus: &TransferCorpus,
) -> Result<TransferReport> {
    let rep1 = classify_ritt_e(t1, cfg, 12)?;
    let rep2 = classify_ritt_e(t2, cfg, 12)?;
    let ConstantEstimate {
        k_hat: k_ritt,
        witness: k_ritt_witness,
    } = estimate_fc_constant_pair(t1, t2, cfg, u, u, &corpus.pair_funs, &corpus.polys)?;

    let n = cfg.n_points();
    let eye = CMatrix::identity(t1.nrows());
    let mut k_sect = vec![vec![0.0; n]; n];
    for (i, &xi_i) in cfg.xi().iter().enumerate() {
        let a1 = eye.sub(&t1.scale(xi_i.conj()));
        for (j, &xi_j) in cfg.xi().iter().enumerate() {
            let a2 = eye.sub(&t2.scale(xi_j.conj()));
            let est = estimate_sectorial_constant_pair(&a1, &a2, theta, &corpus.sector_funs)?;
            k_sect[i][j] = est.k_hat;
        }
    }

    let domain = cfg.stolz(cfg.s())?;
    let mut k_poly = 0.0f64;
    for phi in &corpus.polys {
        let norm_phi = sup_norm2(&|z1, z2| phi.eval(z1, z2), &domain, &domain);
        if norm_phi <= 1e-14 {
            continue;
        }
        let parts = crate::holofun::polynomial_split(phi, cfg);
        let mut value = CMatrix::zeros(t1.nrows(), t1.nrows());
        for p in &parts {
            value = value.add(&p.eval_matrices(t1, t2));
        }
        k_poly = k_poly.max(crate::linalg::op_norm(&value) / norm_phi);
    }

    let all_finite = k_ritt.is_finite()
        && k_poly.is_finite()
        && k_sect.iter().flatten().all(|v| v.is_finite());
    Ok(TransferReport {
        ritt_classified: (rep1.is_ritt_e, rep2.is_ritt_e),
        k_ritt,
        k_ritt_witness,
        k_sect,
        k_poly,
        all_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cfg1() -> SpectralConfig {
        SpectralConfig::from_angles(&[0.0], 0.3, 0.6).unwrap()
    }

    fn z1z2() -> BivariatePoly {
        BivariatePoly::new(vec![
            vec![c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ])
    }

    fn sys1() -> LocalizationSystem {
        LocalizationSystem::new(&cfg1(), std::f64::consts::FRAC_PI_3).unwrap()
    }

    #[test]
    fn gammas_partition_the_outer_boundary() {
        let sys = sys1();
        let m = sys.vertex_count();
        for i in 0..m {
            let end = sys.gamma(i).contour().pieces().last().unwrap().end();
            let start = sys.gamma((i + 1) % m).contour().pieces()[0].start();
            assert!((end - start).norm() < 1e-12);
        }
        let total: f64 = (0..m)
            .map(|i| {
                sys.gamma(i)
                    .contour()
                    .pieces()
                    .iter()
                    .map(|p| p.length())
                    .sum::<f64>()
            })
            .sum();
        let perimeter: f64 = sys
            .polys
            .outer
            .boundary()
            .pieces()
            .iter()
            .map(|p| p.length())
            .sum();
        assert!((total - perimeter).abs() < 1e-10);
    }

    #[test]
    fn localization_partitions_the_polynomial() {
        // Sum over all vertex pairs of phi_ij reproduces phi at interior
        // points of the inner polygon.
        let sys = sys1();
        let phi = z1z2();
        let m = sys.vertex_count();
        let anchor = sys.polys.inner.interior_anchor();
        let pts: Vec<C64> = sys
            .polys
            .inner
            .boundary_samples(5)
            .into_iter()
            .map(|b| anchor + (b - anchor) * c(0.6, 0.0))
            .collect();
        for &z1 in pts.iter().take(7) {
            for &z2 in pts.iter().rev().take(7) {
                let mut sum = c(0.0, 0.0);
                for i in 0..m {
                    for j in 0..m {
                        sum += localize(&phi, &sys, i, j).unwrap().eval(z1, z2).unwrap();
                    }
                }
                let expect = phi.eval(z1, z2);
                assert!((sum - expect).norm() < 1e-8, "{z1} {z2}: {sum} vs {expect}");
            }
        }
    }

    #[test]
    fn localization_vanishes_outside() {
        let sys = sys1();
        let phi = z1z2();
        let m = sys.vertex_count();
        let z1 = c(1.6, 0.4);
        let z2 = c(-1.3, -0.9);
        let mut sum = c(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                sum += localize(&phi, &sys, i, j).unwrap().eval(z1, z2).unwrap();
            }
        }
        assert!(sum.norm() < 1e-8, "{sum}");
    }

    #[test]
    fn localize_requires_vanishing_at_origin() {
        let sys = sys1();
        let phi = BivariatePoly::new(vec![vec![c(1.0, 0.0)]]);
        assert!(localize(&phi, &sys, 0, 0).is_err());
    }

    #[test]
    fn on_contour_evaluation_rejected() {
        let sys = sys1();
        let phi = z1z2();
        let f = localize(&phi, &sys, 0, 0).unwrap();
        // The unit vertex itself lies on gamma_0.
        match f.eval(c(1.0, 0.0), c(0.3, 0.0)) {
            Err(Error::OnContour(_)) => {}
            other => panic!("expected OnContour, got {other:?}"),
        }
    }

    #[test]
    fn pullback_matches_direct_double_evaluation() {
        let sys = sys1();
        let phi = z1z2();
        let g = pullback_g(&phi, &sys, 0, 0).unwrap();
        let direct = localize(&phi, &sys, 0, 0).unwrap();
        let (w1, w2) = (c(0.2, 0.0), c(0.3, 0.0));
        let via_pullback = g.eval(w1, w2).unwrap();
        let one = c(1.0, 0.0);
        let via_direct = direct.eval(one - w1, one - w2).unwrap();
        assert!((via_pullback - via_direct).norm() < 1e-12);
    }

    #[test]
    fn pullback_at_origin_hits_the_vertex_values() {
        // g(0,0) = phi_ij(xi_p, xi_q) (substitution identity); the vertex is
        // on the arc, so probe just inside instead.
        let sys = sys1();
        let phi = z1z2();
        let g = pullback_g(&phi, &sys, 0, 0).unwrap();
        let direct = localize(&phi, &sys, 0, 0).unwrap();
        let eps = c(1e-4, 0.0);
        let lhs = g.eval(eps, eps).unwrap();
        let one = c(1.0, 0.0);
        let rhs = direct.eval(one - eps, one - eps).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn boundary_split_sums_to_psi_inside() {
        let sys = sys1();
        let phi = z1z2();
        let split = boundary_split_f(&phi, &sys, 0, 0).unwrap();
        // Interior points of the pulled-back inner polygon: image of the
        // inner-polygon grid under w = 1 - lambda (xi = 1).
        let anchor = sys.polys.inner.interior_anchor();
        let pts: Vec<C64> = sys
            .polys
            .inner
            .boundary_samples(4)
            .into_iter()
            .map(|b| {
                let lam = anchor + (b - anchor) * c(0.55, 0.0);
                c(1.0, 0.0) - lam
            })
            .collect();
        for &w1 in pts.iter().take(6) {
            for &w2 in pts.iter().rev().take(6) {
                let sum = split.sum(w1, w2).unwrap();
                let expect = split.psi().eval(w1, w2);
                assert!((sum - expect).norm() < 1e-7, "{w1} {w2}: {sum} vs {expect}");
            }
        }
    }

    #[test]
    fn f11_equals_pullback_of_localization() {
        let sys = sys1();
        let phi = z1z2();
        let split = boundary_split_f(&phi, &sys, 0, 0).unwrap();
        let g = pullback_g(&phi, &sys, 0, 0).unwrap();
        for k in 0..20 {
            let w1 = C64::from_polar(0.08 + 0.012 * k as f64, 0.15 * (k as f64 - 10.0) / 10.0);
            let w2 = C64::from_polar(0.15, -0.2 + 0.02 * k as f64);
            let lhs = split.f(0, 0, w1, w2).unwrap();
            let rhs = g.eval(w1, w2).unwrap();
            assert!((lhs - rhs).norm() < 1e-7, "{w1} {w2}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn zero_polynomial_gives_zero_split_and_corrector() {
        let sys = sys1();
        let phi = BivariatePoly::zero();
        let split = boundary_split_f(&phi, &sys, 0, 0).unwrap();
        let h = corrector_h(&split).unwrap();
        let v = h.eval(c(0.3, 0.05), c(0.2, -0.03)).unwrap();
        assert!(v.norm() < 1e-13);
    }

    #[test]
    fn corrector_bounded_near_origin() {
        let sys = sys1();
        let phi = z1z2();
        let split = boundary_split_f(&phi, &sys, 0, 0).unwrap();
        let h = corrector_h(&split).unwrap();
        let outer_sup = sup_norm2(
            &|l1, l2| phi.eval(l1, l2),
            &sys.polys.outer,
            &sys.polys.outer,
        );
        let report = certify_corrector(&h, sys.polys.theta, outer_sup).unwrap();
        assert!(report.origin_drift < 1e-3, "drift {}", report.origin_drift);
        assert!(report.sup_h.is_finite() && report.sup_h > 0.0);
        assert!(report.decay_c.is_finite());
    }
}
