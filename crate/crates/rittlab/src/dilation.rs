//! Mean-ergodic spectral decompositions, square functions on truncated
//! Rademacher spaces, the explicit isometric factorization T^n = Q V^n J
//! through a discrete block plus a cyclic Rademacher block, the nested
//! joint factorization for commuting pairs, and torus sup-norms of the
//! two-variable shift calculus.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::calculus::classify_ritt_e;
use crate::error::{Error, Result};
use crate::holofun::{reciprocal_coeffs, BivariatePoly};
use crate::linalg::{
    frac_power, op_norm, resolvent, spectrum, vadd, vnorm2, vnorm_p, vscale, vsub, CMatrix, ONE,
    ZERO,
};
use crate::regions::SpectralConfig;

const PROJECTION_TOL: f64 = 1e-10;
const SEMISIMPLE_TOL: f64 = 1e-8;
const POWER_BOUND_CAP: f64 = 1e4;
const POWER_BOUND_STEPS: usize = 200;

// ---- mean-ergodic decomposition --------------------------------------------------

/// Spectral projections P_1..P_N onto the eigenspaces at the points of E
/// plus the complement P_{N+1} onto the range of the product of the
/// shifted operators. All are polynomials in T, so they commute with T and
/// with each other.
#[derive(Debug, Clone)]
pub struct ErgodicDecomposition {
    pub projections: Vec<CMatrix>,
}

impl ErgodicDecomposition {
    pub fn range_projection(&self) -> &CMatrix {
        self.projections.last().unwrap()
    }

    /// Worst deviation from the projection algebra: idempotence, mutual
    /// annihilation, summing to the identity, commutation with T.
    pub fn algebra_deviation(&self, t: &CMatrix) -> f64 {
        let n = t.nrows();
        let mut worst = 0.0f64;
        let mut total = CMatrix::zeros(n, n);
        for (k, p) in self.projections.iter().enumerate() {
            total = total.add(p);
            worst = worst.max(p.matmul(p).max_abs_diff(p));
            for (l, q) in self.projections.iter().enumerate() {
                if k != l {
                    worst = worst.max(p.matmul(q).max_abs());
                }
            }
            worst = worst.max(p.matmul(t).max_abs_diff(&t.matmul(p)));
        }
        worst.max(total.max_abs_diff(&CMatrix::identity(n)))
    }
}

/// Build the decomposition via small resolvent contours around each point
/// of E. Requires power boundedness and semisimple unimodular eigenvalues.
pub fn ergodic_decompose(t: &CMatrix, cfg: &SpectralConfig) -> Result<ErgodicDecomposition> {
    let n = t.nrows();
    // Power-bounded gate: Frobenius dominates the spectral norm, so staying
    // under the cap certifies the sup.
    let mut power = CMatrix::identity(n);
    for _ in 0..POWER_BOUND_STEPS {
        power = t.matmul(&power);
        let norm = power.norm_frobenius();
        if norm > POWER_BOUND_CAP {
            return Err(Error::NotPowerBounded(norm));
        }
    }

    let eigs = spectrum(t)?.eigenvalues;
    let scale = t.norm_inf().max(1.0);
    let eig_tol = 1e-8 * scale;
    let mut projections = Vec::with_capacity(cfg.n_points() + 1);
    let mut sum = CMatrix::zeros(n, n);
    for (j, &xi) in cfg.xi().iter().enumerate() {
        let near: Vec<C64> = eigs
            .iter()
            .cloned()
            .filter(|l| (l - xi).norm() <= eig_tol)
            .collect();
        if near.is_empty() {
            projections.push(CMatrix::zeros(n, n));
            continue;
        }
        // Contour radius: a quarter of the gap to everything else.
        let mut gap = 0.5f64;
        for (k, &other) in cfg.xi().iter().enumerate() {
            if k != j {
                gap = gap.min((other - xi).norm());
            }
        }
        for &l in &eigs {
            if (l - xi).norm() > eig_tol {
                gap = gap.min((l - xi).norm());
            }
        }
        let radius = 0.25 * gap;
        let p = riesz_projection(t, xi, radius)?;
        let defect = t.matmul(&p).sub(&p.scale(xi)).max_abs();
        if defect > SEMISIMPLE_TOL * scale {
            return Err(Error::DefectiveUnimodularEigenvalue(xi));
        }
        sum = sum.add(&p);
        projections.push(p);
    }
    let range = CMatrix::identity(n).sub(&sum);
    projections.push(range);
    let dec = ErgodicDecomposition { projections };
    let dev = dec.algebra_deviation(t);
    if dev > PROJECTION_TOL * scale {
        return Err(Error::InvariantViolation(format!(
            "ergodic projection algebra deviates by {dev:.3e}"
        )));
    }
    Ok(dec)
}

/// Riesz projection (1/2 pi i) of the resolvent around one spectral point,
/// by the trapezoid rule on a circle (spectrally accurate for periodic
/// integrands), doubling nodes until stable.
fn riesz_projection(t: &CMatrix, center: C64, radius: f64) -> Result<CMatrix> {
    let n = t.nrows();
    let mut prev: Option<CMatrix> = None;
    let mut m = 64usize;
    while m <= 4096 {
        let mut acc = CMatrix::zeros(n, n);
        for k in 0..m {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            let z = center + C64::from_polar(radius, ang);
            let r = resolvent(t, z)?;
            acc.axpy(C64::from_polar(radius / m as f64, ang), &r);
        }
        if let Some(p) = prev {
            if acc.max_abs_diff(&p) < 1e-13 {
                return Ok(acc);
            }
        }
        prev = Some(acc);
        m *= 2;
    }
    Err(Error::NoConvergence(
        "spectral projection contour did not stabilize".into(),
    ))
}

// ---- square function ---------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct SquareFunctionValue {
    pub value: f64,
    /// Increase of the truncated value at the final depth; certifies
    /// convergence when below 1e-10.
    pub last_increment: f64,
}

/// Truncated square function in the p = 2 realization:
/// sqrt( sum_{k=1}^{K} k^{2 alpha - 1} || T^{k-1} B^alpha x ||^2 )
/// with B^alpha the product of the per-point fractional powers
/// (I - conj(xi_j) T)^alpha.
pub fn square_function(
    t: &CMatrix,
    cfg: &SpectralConfig,
    x: &[C64],
    alpha: f64,
    depth: usize,
) -> Result<SquareFunctionValue> {
    assert!(alpha > 0.0);
    let n = t.nrows();
    assert_eq!(x.len(), n);
    let mut b_alpha = CMatrix::identity(n);
    for &xi in cfg.xi() {
        let shifted = CMatrix::identity(n).sub(&t.scale(xi.conj()));
        b_alpha = b_alpha.matmul(&frac_power(&shifted, alpha)?);
    }
    let mut y = b_alpha.matvec(x);
    let mut sum = 0.0f64;
    let mut value = 0.0f64;
    let mut last_increment = f64::INFINITY;
    for k in 1..=depth {
        sum += (k as f64).powf(2.0 * alpha - 1.0) * vnorm2(&y).powi(2);
        let new_value = sum.sqrt();
        last_increment = new_value - value;
        value = new_value;
        y = t.matvec(&y);
    }
    if last_increment >= 1e-10 {
        return Err(Error::NotConverged(last_increment));
    }
    Ok(SquareFunctionValue {
        value,
        last_increment,
    })
}

// ---- Rademacher block norms -----------------------------------------------------------

/// Coefficients of a finite Rademacher expansion: `coords[k]` multiplies
/// the k-th sign variable.
#[derive(Debug, Clone)]
pub struct RademacherBlock {
    pub coords: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, Copy)]
pub enum RadMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct RadNorm {
    pub value: f64,
    pub std_err: Option<f64>,
}

/// L^p norm of the sign-variable expansion. p = 2 collapses to the square
/// sum by orthonormality; exact mode averages all 2^M sign patterns (M at
/// most 20); Monte Carlo reports the standard error of the mean.
pub fn rad_norm(block: &RademacherBlock, p: f64, mode: RadMode) -> Result<RadNorm> {
    assert!(p >= 1.0);
    let m = block.coords.len();
    if m == 0 {
        return Ok(RadNorm {
            value: 0.0,
            std_err: None,
        });
    }
    if p == 2.0 {
        let value = block
            .coords
            .iter()
            .map(|x| vnorm2(x).powi(2))
            .sum::<f64>()
            .sqrt();
        return Ok(RadNorm {
            value,
            std_err: None,
        });
    }
    match mode {
        RadMode::Exact => {
            if m > 20 {
                return Err(Error::TooLarge(m));
            }
            let dim = block.coords[0].len();
            let mut acc = 0.0f64;
            for pattern in 0u64..(1u64 << m) {
                let mut s = vec![ZERO; dim];
                for (k, x) in block.coords.iter().enumerate() {
                    let sign = if pattern >> k & 1 == 1 { -1.0 } else { 1.0 };
                    for (si, xi) in s.iter_mut().zip(x) {
                        *si += xi * C64::new(sign, 0.0);
                    }
                }
                acc += vnorm_p(&s, p).powf(p);
            }
            let value = (acc / (1u64 << m) as f64).powf(1.0 / p);
            Ok(RadNorm {
                value,
                std_err: None,
            })
        }
        RadMode::MonteCarlo { samples, seed } => {
            let dim = block.coords[0].len();
            let mut rng = crate::workbench::seeded_rng(seed);
            let mut sum = 0.0f64;
            let mut sum_sq = 0.0f64;
            for _ in 0..samples {
                let mut s = vec![ZERO; dim];
                for x in &block.coords {
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    for (si, xi) in s.iter_mut().zip(x) {
                        *si += xi * C64::new(sign, 0.0);
                    }
                }
                let v = vnorm_p(&s, p).powf(p);
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / samples as f64;
            let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
            let mean_err = (var / samples as f64).sqrt();
            // First-order error propagation through the 1/p-th root.
            let value = mean.powf(1.0 / p);
            let std_err = if mean > 0.0 {
                value / (p * mean) * mean_err
            } else {
                0.0
            };
            Ok(RadNorm {
                value,
                std_err: Some(std_err),
            })
        }
    }
}

// ---- single-operator dilation -----------------------------------------------------------

/// Vector in the truncated dilation space: N discrete fibers plus M cyclic
/// Rademacher fibers, each a copy of the base space.
#[derive(Debug, Clone)]
pub struct DilVec {
    pub disc: Vec<Vec<C64>>,
    pub rad: Vec<Vec<C64>>,
}

impl DilVec {
    pub fn zeros(n_disc: usize, m_cyclic: usize, dim: usize) -> DilVec {
        DilVec {
            disc: vec![vec![ZERO; dim]; n_disc],
            rad: vec![vec![ZERO; dim]; m_cyclic],
        }
    }

    pub fn norm2(&self) -> f64 {
        let d: f64 = self.disc.iter().map(|x| vnorm2(x).powi(2)).sum();
        let r: f64 = self.rad.iter().map(|x| vnorm2(x).powi(2)).sum();
        (d + r).sqrt()
    }
}

/// The truncated dilation model: T^n = Q V^n J up to a certified tail.
///
/// The bi-infinite Rademacher index set is replaced by a cyclic one of
/// even length M so the double shift stays an exact isometry; choosing
/// M >= 2 (K + n_max) + 2 keeps wrap-around contamination inside the tail
/// bound.
pub struct DilationModel {
    pub cfg: SpectralConfig,
    pub t: CMatrix,
    pub decomposition: ErgodicDecomposition,
    /// prod_j (I - conj(xi_j) T)^{1/2}.
    pub a: CMatrix,
    /// a * a, the full shifted product up to fractional-power error.
    pub a_sq: CMatrix,
    pub k_depth: usize,
    pub m_cyclic: usize,
    pub p: f64,
    /// Reciprocal series coefficients a_m, m < m_cyclic.
    pub recip: Vec<C64>,
    /// Operator norm of the embedding J (the square-function bound).
    pub j_norm: f64,
}

pub fn build_dilation(
    t: &CMatrix,
    cfg: &SpectralConfig,
    k_depth: usize,
    m_cyclic: usize,
    p: f64,
) -> Result<DilationModel> {
    if m_cyclic % 2 != 0 || m_cyclic < 2 * k_depth + 4 {
        return Err(Error::ConfigInvalid(vec![format!(
            "cyclic length must be even and at least 2K + 4, got M = {m_cyclic}, K = {k_depth}"
        )]));
    }
    let report = classify_ritt_e(t, cfg, 12)?;
    if !report.is_ritt_e {
        return Err(Error::PreconditionSpectrum(
            "operator failed the resolvent-growth classification".into(),
        ));
    }
    let n = t.nrows();
    let decomposition = ergodic_decompose(t, cfg)?;
    let mut a = CMatrix::identity(n);
    for &xi in cfg.xi() {
        let shifted = CMatrix::identity(n).sub(&t.scale(xi.conj()));
        a = a.matmul(&frac_power(&shifted, 0.5)?);
    }
    let a_sq = a.matmul(&a);
    let recip = reciprocal_coeffs(cfg, m_cyclic)?;
    let mut model = DilationModel {
        cfg: cfg.clone(),
        t: t.clone(),
        decomposition,
        a,
        a_sq,
        k_depth,
        m_cyclic,
        p,
        recip,
        j_norm: 0.0,
    };
    model.j_norm = model.measure_j_norm();
    Ok(model)
}

impl DilationModel {
    pub fn base_dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.cfg.n_points()
    }

    pub fn dil_dim(&self) -> usize {
        (self.n_points() + self.m_cyclic) * self.base_dim()
    }

    /// J x: eigenspace components in the discrete block; the range
    /// component feeds the orbit T^k A x at even slots 2k and T^{k+1} A x
    /// at odd slots 2k+1, for k below the truncation depth.
    pub fn apply_j(&self, x: &[C64]) -> DilVec {
        let n_pts = self.n_points();
        let mut out = DilVec::zeros(n_pts, self.m_cyclic, self.base_dim());
        for j in 0..n_pts {
            out.disc[j] = self.decomposition.projections[j].matvec(x);
        }
        let x_range = self.decomposition.range_projection().matvec(x);
        let mut orbit = self.a.matvec(&x_range); // T^k A x_range, k = 0
        for k in 0..self.k_depth {
            out.rad[2 * k] = orbit.clone();
            orbit = self.t.matvec(&orbit);
            out.rad[2 * k + 1] = orbit.clone();
        }
        out
    }

    /// V = D + U^2: unimodular diagonal on the discrete block, double
    /// cyclic coefficient shift on the Rademacher block.
    pub fn apply_v(&self, v: &DilVec) -> DilVec {
        self.apply_v_pow(v, 1)
    }

    pub fn apply_v_pow(&self, v: &DilVec, n: usize) -> DilVec {
        let m = self.m_cyclic;
        let mut out = DilVec::zeros(self.n_points(), m, self.base_dim());
        for (j, fiber) in v.disc.iter().enumerate() {
            let phase = self.cfg.xi()[j].powu(n as u32);
            out.disc[j] = vscale(fiber, phase);
        }
        for k in 0..m {
            out.rad[k] = v.rad[(k + 2 * n) % m].clone();
        }
        out
    }

    /// Q = the adjoint of the dual embedding: eigenspace projections on the
    /// discrete block, and on the Rademacher block the coefficient-weighted
    /// orbit sum P A sum_k T^k (a_{2k} v_{2k} + a_{2k+1} v_{2k+1}).
    pub fn apply_q(&self, v: &DilVec) -> Vec<C64> {
        let n = self.base_dim();
        let mut out = vec![ZERO; n];
        for (j, fiber) in v.disc.iter().enumerate() {
            out = vadd(&out, &self.decomposition.projections[j].matvec(fiber));
        }
        // Horner over pairs: sum_k T^k u_k with u_k = a_{2k} v_{2k} +
        // a_{2k+1} v_{2k+1}.
        let half = self.m_cyclic / 2;
        let mut acc = vec![ZERO; n];
        for k in (0..half).rev() {
            acc = self.t.matvec(&acc);
            let u = vadd(
                &vscale(&v.rad[2 * k], self.recip[2 * k]),
                &vscale(&v.rad[2 * k + 1], self.recip[2 * k + 1]),
            );
            acc = vadd(&acc, &u);
        }
        let tail = self
            .decomposition
            .range_projection()
            .matvec(&self.a.matvec(&acc));
        vadd(&out, &tail)
    }

    /// Q V^n J assembled as a matrix on the base space.
    pub fn qvnj_matrix(&self, n: usize) -> CMatrix {
        let dim = self.base_dim();
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut e = vec![ZERO; dim];
            e[col] = ONE;
            let y = self.apply_q(&self.apply_v_pow(&self.apply_j(&e), n));
            out.set_col(col, &y);
        }
        out
    }

    fn measure_j_norm(&self) -> f64 {
        let dim = self.base_dim();
        // Gram matrix of J columns; the top eigenvalue gives ||J||^2.
        let cols: Vec<DilVec> = (0..dim)
            .map(|c| {
                let mut e = vec![ZERO; dim];
                e[c] = ONE;
                self.apply_j(&e)
            })
            .collect();
        let mut gram = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut s = ZERO;
                for (a, b) in cols[j].disc.iter().zip(&cols[i].disc) {
                    s += crate::linalg::vdot(a, b);
                }
                for (a, b) in cols[j].rad.iter().zip(&cols[i].rad) {
                    s += crate::linalg::vdot(a, b);
                }
                gram[(i, j)] = s;
            }
        }
        op_norm(&gram).sqrt()
    }

    /// Relative isometry deviation of V over random dilation vectors.
    pub fn isometry_deviation(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = crate::workbench::seeded_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let v = DilVec {
                disc: (0..self.n_points())
                    .map(|_| crate::workbench::random_vector(&mut rng, self.base_dim()))
                    .collect(),
                rad: (0..self.m_cyclic)
                    .map(|_| crate::workbench::random_vector(&mut rng, self.base_dim()))
                    .collect(),
            };
            let before = v.norm2();
            let after = self.apply_v(&v).norm2();
            worst = worst.max((after - before).abs() / before.max(1e-300));
        }
        worst
    }

    /// Fully computed tail bound for || Q V^n J - T^n ||: the truncated
    /// reciprocal-series tail, the cyclic wrap-around terms, the measured
    /// fixed-point defect and projection slacks, plus a floating-point
    /// floor 1e-12 (1 + ||T||)^n.
    pub fn tail_bound(&self, n: usize) -> f64 {
        let p_range = self.decomposition.range_projection();
        let pn = op_norm(p_range);
        let m_hi = self.m_cyclic + 2 * self.k_depth + 16;
        // y_m = || T^m (A^2 P) ||.
        let mut y = Vec::with_capacity(m_hi + 1);
        let mut cur = self.a_sq.matmul(p_range);
        y.push(op_norm(&cur));
        for _ in 0..m_hi {
            cur = self.t.matmul(&cur);
            y.push(op_norm(&cur));
        }
        let b_a = self.cfg.reciprocal_coeff_ceiling();
        let coeff = |m: usize| -> f64 {
            if m < self.recip.len() {
                self.recip[m].norm()
            } else {
                b_a
            }
        };
        // Fixed-point defect: || sum_m a_m T^m A^2 P - P ||, summed to m_hi
        // with a geometric allowance for the remainder.
        let mut fp = self.decomposition.range_projection().scale(-ONE);
        let mut term = self.a_sq.matmul(p_range);
        for m in 0..=m_hi {
            fp.axpy(C64::new(coeff(m).min(b_a), 0.0) * (self.recip.get(m).map_or(ONE, |c| c / c.norm().max(1e-300))), &term);
            term = self.t.matmul(&term);
        }
        let rho_hat = if y[m_hi] > 0.0 && y[m_hi - 10] > 0.0 {
            (y[m_hi] / y[m_hi - 10]).powf(0.1)
        } else {
            0.0
        };
        let series_remainder = if rho_hat < 1.0 {
            b_a * y[m_hi] * rho_hat / (1.0 - rho_hat)
        } else {
            f64::INFINITY
        };
        let delta = op_norm(&fp) + series_remainder;

        // Main truncated tail sum: mu >= 2(K - n).
        let mu0 = 2 * self.k_depth.saturating_sub(n);
        let mut tail = 0.0f64;
        for mu in mu0..=(m_hi.saturating_sub(n)) {
            tail += coeff(mu) * y[n + mu];
        }
        tail += series_remainder;

        // Wrap-around terms of the cyclic shift.
        let half = self.m_cyclic / 2;
        let mut wrap = 0.0f64;
        for k in half.saturating_sub(n)..half {
            let e_even = 2 * k + n - half;
            let e_odd = e_even + 1;
            if e_even <= m_hi {
                wrap += coeff(2 * k) * y[e_even];
            }
            if e_odd <= m_hi {
                wrap += coeff(2 * k + 1) * y[e_odd];
            }
        }

        // Eigen-block slack || T^n P_j - xi_j^n P_j || and the projector
        // commutation slack || P T^n P - T^n P ||.
        let t_pow = self.t.pow(n);
        let mut semi = 0.0f64;
        for (j, p) in self.decomposition.projections.iter().enumerate() {
            if j + 1 == self.decomposition.projections.len() {
                break;
            }
            let xi_n = self.cfg.xi()[j].powu(n as u32);
            semi += op_norm(&t_pow.matmul(p).sub(&p.scale(xi_n)));
        }
        let tp = t_pow.matmul(p_range);
        let pq = op_norm(&p_range.matmul(&tp).sub(&tp));
        let t_norm_n = op_norm(&t_pow);

        let floor = 1e-12 * (1.0 + op_norm(&self.t)).powi(n as i32);
        pn * (tail + wrap + t_norm_n * delta) + semi + pq + floor
    }
}

/// Measured factorization errors against the computed tail bounds.
#[derive(Debug, Clone)]
pub struct DilationReport {
    pub errors_by_n: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    pub isometry_deviation: f64,
    pub dims: (usize, usize),
    pub pass: bool,
}

pub fn verify_dilation(model: &DilationModel, n_max: usize) -> Result<DilationReport> {
    if model.m_cyclic < 2 * (model.k_depth + n_max) + 2 {
        return Err(Error::ConfigInvalid(vec![format!(
            "cyclic length {} is inadmissible for powers up to {n_max}; need at least {}",
            model.m_cyclic,
            2 * (model.k_depth + n_max) + 2
        )]));
    }
    let mut errors_by_n = Vec::with_capacity(n_max + 1);
    let mut tail_bounds = Vec::with_capacity(n_max + 1);
    let mut pass = true;
    for n in 0..=n_max {
        let measured = op_norm(&model.qvnj_matrix(n).sub(&model.t.pow(n)));
        let bound = model.tail_bound(n);
        if measured > bound {
            pass = false;
        }
        errors_by_n.push(measured);
        tail_bounds.push(bound);
    }
    let isometry_deviation = model.isometry_deviation(100, 0x5eed);
    if isometry_deviation > 1e-13 {
        pass = false;
    }
    Ok(DilationReport {
        errors_by_n,
        tail_bounds,
        isometry_deviation,
        dims: (model.base_dim(), model.dil_dim()),
        pass,
    })
}

// ---- joint dilation -------------------------------------------------------------------

/// Vector in the nested joint dilation space: every fiber of the outer
/// model is a full inner dilation vector.
#[derive(Debug, Clone)]
pub struct JointVec {
    pub disc: Vec<DilVec>,
    pub rad: Vec<DilVec>,
}

impl JointVec {
    fn norm2(&self) -> f64 {
        let d: f64 = self.disc.iter().map(|v| v.norm2().powi(2)).sum();
        let r: f64 = self.rad.iter().map(|v| v.norm2().powi(2)).sum();
        (d + r).sqrt()
    }
}

/// Nested factorization T1^{i1} T2^{i2} = Q U1^{i1} U2^{i2} J: the outer
/// model dilates T1 with fibers lifted to the inner dilation space of T2;
/// U1 permutes and scales whole fibers, U2 acts inside each fiber, so they
/// commute by index bookkeeping.
pub struct JointDilationModel {
    pub outer: DilationModel,
    pub inner: DilationModel,
}

pub fn build_joint_dilation(
    t1: &CMatrix,
    t2: &CMatrix,
    cfg: &SpectralConfig,
    k_depth: usize,
    m_cyclic: usize,
    p: f64,
) -> Result<JointDilationModel> {
    let comm = t1.matmul(t2).sub(&t2.matmul(t1)).max_abs();
    let scale = (t1.max_abs() * t2.max_abs()).max(1.0);
    if comm > 1e-10 * scale {
        return Err(Error::NonCommuting(comm));
    }
    let outer = build_dilation(t1, cfg, k_depth, m_cyclic, p)?;
    let inner = build_dilation(t2, cfg, k_depth, m_cyclic, p)?;
    let n = cfg.n_points();
    let nested_dim = (n + m_cyclic) * (n + m_cyclic) * t1.nrows();
    if nested_dim > 80_000_000 {
        return Err(Error::ConfigInvalid(vec![format!(
            "nested dilation dimension {nested_dim} exceeds the resource guard"
        )]));
    }
    Ok(JointDilationModel { outer, inner })
}

impl JointDilationModel {
    pub fn apply_j(&self, x: &[C64]) -> JointVec {
        let shell = self.outer.apply_j(x);
        JointVec {
            disc: shell.disc.iter().map(|f| self.inner.apply_j(f)).collect(),
            rad: shell.rad.iter().map(|f| self.inner.apply_j(f)).collect(),
        }
    }

    /// Lift of the outer V: scales discrete fibers by the unit-circle
    /// phases and double-shifts the cyclic fibers, leaving fiber contents
    /// untouched.
    pub fn apply_u1(&self, v: &JointVec, n: usize) -> JointVec {
        let m = self.outer.m_cyclic;
        let scale_fiber = |f: &DilVec, c: C64| DilVec {
            disc: f.disc.iter().map(|x| vscale(x, c)).collect(),
            rad: f.rad.iter().map(|x| vscale(x, c)).collect(),
        };
        JointVec {
            disc: v
                .disc
                .iter()
                .enumerate()
                .map(|(j, f)| scale_fiber(f, self.outer.cfg.xi()[j].powu(n as u32)))
                .collect(),
            rad: (0..m).map(|k| v.rad[(k + 2 * n) % m].clone()).collect(),
        }
    }

    /// Inner V applied inside every fiber.
    pub fn apply_u2(&self, v: &JointVec, n: usize) -> JointVec {
        JointVec {
            disc: v.disc.iter().map(|f| self.inner.apply_v_pow(f, n)).collect(),
            rad: v.rad.iter().map(|f| self.inner.apply_v_pow(f, n)).collect(),
        }
    }

    pub fn apply_q(&self, v: &JointVec) -> Vec<C64> {
        let shell = DilVec {
            disc: v.disc.iter().map(|f| self.inner.apply_q(f)).collect(),
            rad: v.rad.iter().map(|f| self.inner.apply_q(f)).collect(),
        };
        self.outer.apply_q(&shell)
    }

    /// Q U1^{i1} U2^{i2} J assembled on the base space.
    pub fn op_matrix(&self, i1: usize, i2: usize) -> CMatrix {
        let dim = self.outer.base_dim();
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut e = vec![ZERO; dim];
            e[col] = ONE;
            let w = self.apply_j(&e);
            let w = self.apply_u2(&w, i2);
            let w = self.apply_u1(&w, i1);
            out.set_col(col, &self.apply_q(&w));
        }
        out
    }

    /// Max relative deviation of U1 U2 - U2 U1 on random vectors; exact up
    /// to floating multiplication order.
    pub fn commutation_deviation(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = crate::workbench::seeded_rng(seed);
        let n_pts = self.outer.n_points();
        let dim = self.outer.base_dim();
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let v = JointVec {
                disc: (0..n_pts)
                    .map(|_| random_dilvec(&mut rng, n_pts, self.inner.m_cyclic, dim))
                    .collect(),
                rad: (0..self.outer.m_cyclic)
                    .map(|_| random_dilvec(&mut rng, n_pts, self.inner.m_cyclic, dim))
                    .collect(),
            };
            let a = self.apply_u1(&self.apply_u2(&v, 1), 1);
            let b = self.apply_u2(&self.apply_u1(&v, 1), 1);
            let mut diff = 0.0f64;
            for (fa, fb) in a.disc.iter().zip(&b.disc).chain(a.rad.iter().zip(&b.rad)) {
                for (x, y) in fa.disc.iter().zip(&fb.disc).chain(fa.rad.iter().zip(&fb.rad)) {
                    diff = diff.max(vnorm2(&vsub(x, y)));
                }
            }
            worst = worst.max(diff / v.norm2().max(1e-300));
        }
        worst
    }

    /// Tail bound for the joint factorization: outer bound against the
    /// exact power of T2, the lifted inner error, and a commutation slack
    /// from the measured commutator magnitudes.
    pub fn tail_bound_joint(&self, i1: usize, i2: usize) -> f64 {
        let t2_pow = self.inner.t.pow(i2);
        let t2_norm = op_norm(&t2_pow);
        let inner_err = op_norm(&self.inner.qvnj_matrix(i2).sub(&t2_pow));
        // Lift factor ||Q1|| ||J1|| for the fiberwise inner error.
        let q1_norm = self.measure_q1_norm();
        let lift = q1_norm * self.outer.j_norm;
        // Commutation slack: T2^{i2} must slide through the outer orbit and
        // projections; the measured commutators enter at most B_a K^2 times
        // at orbit amplitude.
        let chi = {
            let c1 = self
                .outer
                .t
                .matmul(&t2_pow)
                .sub(&t2_pow.matmul(&self.outer.t))
                .max_abs();
            let mut c2 = 0.0f64;
            for p in &self.outer.decomposition.projections {
                c2 = c2.max(p.matmul(&t2_pow).sub(&t2_pow.matmul(p)).max_abs());
            }
            let c3 = self
                .outer
                .a
                .matmul(&t2_pow)
                .sub(&t2_pow.matmul(&self.outer.a))
                .max_abs();
            c1.max(c2).max(c3)
        };
        let b_a = self.outer.cfg.reciprocal_coeff_ceiling();
        let amp = (0..=self.outer.k_depth)
            .map(|m| op_norm(&self.outer.t.pow(m)))
            .fold(0.0f64, f64::max)
            * op_norm(&self.outer.a).powi(2);
        let slack = 4.0 * b_a * (self.outer.k_depth as f64).powi(2) * chi * amp.max(1.0);
        self.outer.tail_bound(i1) * t2_norm + lift * inner_err + slack
    }

    fn measure_q1_norm(&self) -> f64 {
        // ||Q1|| via the norm of its adjoint action: assemble Q1 as a matrix
        // on a basis of the outer dilation space restricted to the slots Q1
        // reads; equivalently bound by projections plus the weighted orbit.
        let n = self.outer.base_dim();
        let n_pts = self.outer.n_points();
        let m = self.outer.m_cyclic;
        // Columns of Q1 over the standard basis of the shell space.
        let mut gram = CMatrix::zeros(n, n);
        let add_outer = |y: &[C64], gram: &mut CMatrix| {
            for i in 0..n {
                for j in 0..n {
                    gram[(i, j)] += y[i] * y[j].conj();
                }
            }
        };
        for fiber in 0..(n_pts + m) {
            for comp in 0..n {
                let mut shell = DilVec::zeros(n_pts, m, n);
                if fiber < n_pts {
                    shell.disc[fiber][comp] = ONE;
                } else {
                    shell.rad[fiber - n_pts][comp] = ONE;
                }
                let y = self.outer.apply_q(&shell);
                add_outer(&y, &mut gram);
            }
        }
        op_norm(&gram).sqrt()
    }
}

fn random_dilvec(
    rng: &mut rand_chacha::ChaCha8Rng,
    n_pts: usize,
    m: usize,
    dim: usize,
) -> DilVec {
    DilVec {
        disc: (0..n_pts)
            .map(|_| crate::workbench::random_vector(rng, dim))
            .collect(),
        rad: (0..m)
            .map(|_| crate::workbench::random_vector(rng, dim))
            .collect(),
    }
}

// ---- shift norms -----------------------------------------------------------------------

/// p = 2 norm of the two-variable shift calculus: the sup of |phi| over
/// the torus, computed on a 512 x 512 grid with local refinement to 1e-6
/// relative.
pub fn shift_norm_p2(phi: &BivariatePoly) -> f64 {
    let n = 512usize;
    let tau = 2.0 * std::f64::consts::PI;
    let mut best = 0.0f64;
    let mut arg = (0.0f64, 0.0f64);
    for i in 0..n {
        let t1 = tau * i as f64 / n as f64;
        let z1 = C64::from_polar(1.0, t1);
        for j in 0..n {
            let t2 = tau * j as f64 / n as f64;
            let v = phi.eval(z1, C64::from_polar(1.0, t2)).norm();
            if v > best {
                best = v;
                arg = (t1, t2);
            }
        }
    }
    // Local refinement: shrink a box around the best grid point.
    let mut h = tau / n as f64;
    loop {
        let mut improved = best;
        let mut new_arg = arg;
        for i in -8i32..=8 {
            for j in -8i32..=8 {
                let t1 = arg.0 + h * i as f64 / 8.0;
                let t2 = arg.1 + h * j as f64 / 8.0;
                let v = phi
                    .eval(C64::from_polar(1.0, t1), C64::from_polar(1.0, t2))
                    .norm();
                if v > improved {
                    improved = v;
                    new_arg = (t1, t2);
                }
            }
        }
        let gain = improved - best;
        best = improved;
        arg = new_arg;
        h /= 6.0;
        if gain <= 1e-6 * best.max(1e-300) && h < 1e-7 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cfg1() -> SpectralConfig {
        SpectralConfig::from_angles(&[0.0], 0.3, 0.8).unwrap()
    }

    fn cfg2() -> SpectralConfig {
        SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.4, 0.7).unwrap()
    }

    #[test]
    fn ergodic_diagonal_three_blocks() {
        let cfg = cfg2();
        let t = CMatrix::diag(&[ONE, c(-1.0, 0.0), c(0.5, 0.0)]);
        let dec = ergodic_decompose(&t, &cfg).unwrap();
        assert_eq!(dec.projections.len(), 3);
        assert!(dec.projections[0].approx_eq(&CMatrix::diag(&[ONE, ZERO, ZERO]), 1e-11));
        assert!(dec.projections[1].approx_eq(&CMatrix::diag(&[ZERO, ONE, ZERO]), 1e-11));
        assert!(dec.projections[2].approx_eq(&CMatrix::diag(&[ZERO, ZERO, ONE]), 1e-11));
    }

    #[test]
    fn ergodic_no_unimodular_spectrum() {
        let cfg = cfg1();
        let t = CMatrix::identity(3).scale(c(0.5, 0.0));
        let dec = ergodic_decompose(&t, &cfg).unwrap();
        assert!(dec.projections[0].max_abs() < 1e-12);
        assert!(dec.projections[1].approx_eq(&CMatrix::identity(3), 1e-12));
    }

    #[test]
    fn ergodic_adjoint_orthogonality_for_normal() {
        // For normal T the eigenspace projections are orthogonal:
        // P_i* P_j = 0 for i != j.
        let cfg = cfg2();
        let mut rng = crate::workbench::seeded_rng(5);
        let q = crate::workbench::random_unitary(&mut rng, 4);
        let d = CMatrix::diag(&[ONE, c(-1.0, 0.0), c(0.3, 0.2), c(-0.1, -0.4)]);
        let t = q.matmul(&d).matmul(&q.adjoint());
        let dec = ergodic_decompose(&t, &cfg).unwrap();
        for i in 0..dec.projections.len() {
            for j in 0..dec.projections.len() {
                if i != j {
                    let prod = dec.projections[i].adjoint().matmul(&dec.projections[j]);
                    assert!(prod.max_abs() < 1e-10, "P_{i}* P_{j} = {:.3e}", prod.max_abs());
                }
            }
        }
    }

    #[test]
    fn ergodic_rejects_defective_vertex() {
        let cfg = cfg1();
        let t = CMatrix::from_rows(vec![vec![ONE, ONE], vec![ZERO, ONE]]);
        match ergodic_decompose(&t, &cfg) {
            Err(Error::DefectiveUnimodularEigenvalue(_)) => {}
            other => panic!("expected DefectiveUnimodularEigenvalue, got {other:?}"),
        }
    }

    #[test]
    fn square_function_zero_operator() {
        // T = 0: only k = 1 survives and the value is ||x||.
        let cfg = cfg1();
        let t = CMatrix::zeros(3, 3);
        let x = vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, -0.7)];
        let v = square_function(&t, &cfg, &x, 1.0, 40).unwrap();
        assert!((v.value - vnorm2(&x)).abs() < 1e-12);
    }

    #[test]
    fn square_function_zero_vector() {
        let cfg = cfg1();
        let t = CMatrix::diag(&[c(0.5, 0.0)]);
        let v = square_function(&t, &cfg, &[ZERO], 1.0, 40).unwrap();
        assert!(v.value.abs() < 1e-14);
    }

    #[test]
    fn square_function_geometric_closed_form() {
        // T = diag(0.5), alpha = 1: sum k q^{k-1} = (1-q)^{-2} with q = 1/4
        // gives value (2/3) ||x||.
        let cfg = cfg1();
        let t = CMatrix::diag(&[c(0.5, 0.0)]);
        let x = vec![c(2.0, -1.0)];
        let v = square_function(&t, &cfg, &x, 1.0, 80).unwrap();
        let expect = 2.0 / 3.0 * vnorm2(&x);
        assert!((v.value - expect).abs() < 1e-9, "{} vs {expect}", v.value);
        assert!(v.last_increment < 1e-10);
    }

    #[test]
    fn rad_norm_orthonormality_and_single_coordinate() {
        let e1 = vec![ONE, ZERO];
        let e2 = vec![ZERO, ONE];
        let block = RademacherBlock {
            coords: vec![e1, e2],
        };
        let v = rad_norm(&block, 2.0, RadMode::Exact).unwrap();
        assert!((v.value - 2.0f64.sqrt()).abs() < 1e-14);

        let single = RademacherBlock {
            coords: vec![vec![c(3.0, 4.0)]],
        };
        for p in [1.0, 2.0, 3.0] {
            let v = rad_norm(&single, p, RadMode::Exact).unwrap();
            assert!((v.value - 5.0).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn rad_norm_p4_two_scalars() {
        // E|e0 + e1|^4 = (16 + 0 + 0 + 16)/4 = 8.
        let block = RademacherBlock {
            coords: vec![vec![ONE], vec![ONE]],
        };
        let v = rad_norm(&block, 4.0, RadMode::Exact).unwrap();
        assert!((v.value - 8.0f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn rad_norm_kahane_contraction() {
        // Scaling coordinates by moduli <= 1 never increases the norm.
        let mut rng = crate::workbench::seeded_rng(21);
        for p in [2.0, 4.0] {
            for _ in 0..5 {
                let coords: Vec<Vec<C64>> = (0..6)
                    .map(|_| crate::workbench::random_vector(&mut rng, 3))
                    .collect();
                let block = RademacherBlock {
                    coords: coords.clone(),
                };
                let scaled = RademacherBlock {
                    coords: coords
                        .iter()
                        .enumerate()
                        .map(|(k, x)| vscale(x, c(1.0 / (k as f64 + 1.5), 0.0)))
                        .collect(),
                };
                let v0 = rad_norm(&block, p, RadMode::Exact).unwrap().value;
                let v1 = rad_norm(&scaled, p, RadMode::Exact).unwrap().value;
                assert!(v1 <= v0 * (1.0 + 1e-12), "p = {p}: {v1} vs {v0}");
            }
        }
    }

    #[test]
    fn rad_norm_exact_cap() {
        let block = RademacherBlock {
            coords: vec![vec![ONE]; 21],
        };
        match rad_norm(&block, 4.0, RadMode::Exact) {
            Err(Error::TooLarge(21)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rad_norm_montecarlo_close_to_exact() {
        let block = RademacherBlock {
            coords: vec![vec![ONE], vec![ONE], vec![c(0.5, 0.5)]],
        };
        let exact = rad_norm(&block, 4.0, RadMode::Exact).unwrap().value;
        let mc = rad_norm(
            &block,
            4.0,
            RadMode::MonteCarlo {
                samples: 100_000,
                seed: 7,
            },
        )
        .unwrap();
        let err = mc.std_err.unwrap();
        assert!(
            (mc.value - exact).abs() < 6.0 * err.max(1e-4),
            "{} vs {exact} (err {err})",
            mc.value
        );
    }

    #[test]
    fn dilation_pure_point_mass() {
        // T = diag(xi): everything sits in the kernel block and the
        // factorization is exact.
        let cfg = cfg1();
        let t = CMatrix::diag(&[ONE]);
        let model = build_dilation(&t, &cfg, 20, 64, 2.0).unwrap();
        for n in 0..6 {
            let m = model.qvnj_matrix(n);
            assert!((m[(0, 0)] - ONE).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn dilation_scalar_geometric() {
        let cfg = cfg1();
        let t = CMatrix::diag(&[c(0.5, 0.0)]);
        let model = build_dilation(&t, &cfg, 60, 140, 2.0).unwrap();
        let m3 = model.qvnj_matrix(3);
        assert!(
            (m3[(0, 0)] - c(0.125, 0.0)).norm() < 1e-12,
            "{:?}",
            m3[(0, 0)]
        );
    }

    #[test]
    fn dilation_mixed_spectrum_report() {
        let cfg = cfg2();
        let t = CMatrix::diag(&[ONE, c(-1.0, 0.0), c(0.5, 0.0)]);
        let model = build_dilation(&t, &cfg, 80, 180, 2.0).unwrap();
        let report = verify_dilation(&model, 5).unwrap();
        assert!(report.pass, "{report:?}");
        for (n, err) in report.errors_by_n.iter().enumerate() {
            assert!(*err <= 1e-8, "n = {n}: {err}");
        }
    }

    #[test]
    fn dilation_tail_bound_honest_for_nonnormal() {
        let cfg = cfg1();
        let mut rng = crate::workbench::seeded_rng(33);
        let d = CMatrix::diag(&[c(0.6, 0.1), c(0.2, -0.2), c(-0.1, 0.0)]);
        let (t, _) = crate::workbench::conjugate_by_random(&mut rng, &d, 0.2);
        let model = build_dilation(&t, &cfg, 40, 120, 2.0).unwrap();
        let report = verify_dilation(&model, 8).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn dilation_unitary_diagonal_exact() {
        let cfg = cfg2();
        let t = CMatrix::diag(&[ONE, c(-1.0, 0.0)]);
        let model = build_dilation(&t, &cfg, 20, 64, 2.0).unwrap();
        for n in 0..8 {
            let err = model.qvnj_matrix(n).sub(&t.pow(n)).max_abs();
            assert!(err < 1e-13, "n = {n}: {err}");
        }
    }

    #[test]
    fn joint_dilation_scalars() {
        let cfg = cfg1();
        let t1 = CMatrix::diag(&[c(0.5, 0.0)]);
        let t2 = CMatrix::diag(&[c(0.3, 0.0)]);
        let model = build_joint_dilation(&t1, &t2, &cfg, 60, 140, 2.0).unwrap();
        let m = model.op_matrix(2, 3);
        let expect = 0.25 * 0.027;
        assert!(
            (m[(0, 0)] - c(expect, 0.0)).norm() < 1e-10,
            "{:?} vs {expect}",
            m[(0, 0)]
        );
    }

    #[test]
    fn joint_dilation_pure_point() {
        let cfg = cfg1();
        let t = CMatrix::diag(&[ONE]);
        let model = build_joint_dilation(&t, &t, &cfg, 16, 40, 2.0).unwrap();
        let m = model.op_matrix(3, 2);
        assert!((m[(0, 0)] - ONE).norm() < 1e-11);
    }

    #[test]
    fn joint_commutation_is_machine_exact() {
        let cfg = cfg1();
        let t1 = CMatrix::diag(&[c(0.5, 0.0), c(0.2, 0.1)]);
        let t2 = t1.matmul(&t1);
        let model = build_joint_dilation(&t1, &t2, &cfg, 12, 32, 2.0).unwrap();
        let dev = model.commutation_deviation(20, 3);
        assert!(dev < 1e-15, "{dev}");
    }

    #[test]
    fn joint_reduces_to_single_at_zero_power() {
        let cfg = cfg1();
        let t1 = CMatrix::diag(&[c(0.5, 0.0), c(-0.2, 0.1)]);
        let t2 = t1.scale(c(0.8, 0.0));
        let joint = build_joint_dilation(&t1, &t2, &cfg, 40, 120, 2.0).unwrap();
        for i1 in 0..4 {
            let joint_m = joint.op_matrix(i1, 0);
            let single_m = joint.outer.qvnj_matrix(i1);
            assert!(
                joint_m.max_abs_diff(&single_m) < 1e-10,
                "i1 = {i1}: {:.3e}",
                joint_m.max_abs_diff(&single_m)
            );
        }
    }

    #[test]
    fn shift_norm_closed_forms() {
        // Unimodular monomial.
        let phi = BivariatePoly::new(vec![
            vec![c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ]);
        assert!((shift_norm_p2(&phi) - 1.0).abs() < 1e-6);
        // 1 + z1 peaks at 2.
        let phi = BivariatePoly::new(vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]);
        assert!((shift_norm_p2(&phi) - 2.0).abs() < 1e-6);
        // z1 + z2 aligns phases at 2.
        let phi = BivariatePoly::new(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!((shift_norm_p2(&phi) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn fixed_point_series_on_range_block() {
        // sum_m a_m T^m prod(I - conj(xi) T) x = x for x in the range block.
        let cfg = cfg1();
        let t = CMatrix::diag(&[c(0.5, 0.0), c(-0.3, 0.2)]);
        let a = reciprocal_coeffs(&cfg, 200).unwrap();
        let eye = CMatrix::identity(2);
        let b = eye.sub(&t); // prod over E = {1}
        let x = vec![c(1.0, -0.5), c(0.3, 0.8)];
        let bx = b.matvec(&x);
        let mut acc = vec![ZERO; 2];
        let mut orbit = bx;
        for am in &a {
            acc = vadd(&acc, &vscale(&orbit, *am));
            orbit = t.matvec(&orbit);
        }
        let err = vnorm2(&vsub(&acc, &x));
        assert!(err < 1e-12, "{err}");
    }
}
