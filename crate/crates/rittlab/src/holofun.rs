//! Function-side algebra: one- and two-variable holomorphic function
//! objects with decay certificates, bivariate polynomials, the Lagrange
//! interpolation split, and reciprocal power-series coefficients.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::regions::{Region, SpectralConfig};

// ---- decay profiles and certificates ---------------------------------------

/// Shape of a decay bound. `Points` vanishes at finitely many boundary
/// points with power rates; `Sectorial` is the |z|^s / (1 + |z|^{2s})
/// profile vanishing at 0 and infinity.
#[derive(Debug, Clone)]
pub enum DecayProfile {
    Points {
        points: Vec<C64>,
        exponents: Vec<f64>,
    },
    Sectorial {
        s: f64,
    },
}

impl DecayProfile {
    pub fn points_on(cfg: &SpectralConfig, exponent: f64) -> DecayProfile {
        DecayProfile::Points {
            points: cfg.xi().to_vec(),
            exponents: vec![exponent; cfg.n_points()],
        }
    }

    pub fn eval(&self, z: C64) -> f64 {
        match self {
            DecayProfile::Points { points, exponents } => points
                .iter()
                .zip(exponents)
                .map(|(&p, &s)| (p - z).norm().powf(s))
                .product(),
            DecayProfile::Sectorial { s } => {
                let m = z.norm().powf(*s);
                m / (1.0 + m * m)
            }
        }
    }

    /// Smallest exponent, governing absolute convergence of the calculus.
    pub fn min_exponent(&self) -> f64 {
        match self {
            DecayProfile::Points { exponents, .. } => {
                exponents.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            DecayProfile::Sectorial { s } => *s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecayCertificate {
    pub c: f64,
    pub profile: DecayProfile,
}

/// Bivariate certificate: a product profile, one per variable.
#[derive(Debug, Clone)]
pub struct DecayCertificate2 {
    pub c: f64,
    pub profile1: DecayProfile,
    pub profile2: DecayProfile,
}

// ---- function objects -------------------------------------------------------

/// One-variable holomorphic function object: an evaluation closure, its
/// domain, and an optional decay certificate validated on construction.
#[derive(Clone)]
pub struct HoloFun1 {
    pub label: String,
    pub domain: Region,
    pub decay: Option<DecayCertificate>,
    eval: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl std::fmt::Debug for HoloFun1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HoloFun1")
            .field("label", &self.label)
            .field("decay", &self.decay)
            .finish()
    }
}

impl HoloFun1 {
    pub fn new(
        label: impl Into<String>,
        domain: Region,
        eval: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> HoloFun1 {
        HoloFun1 {
            label: label.into(),
            domain,
            decay: None,
            eval: Arc::new(eval),
        }
    }

    pub fn from_poly(label: impl Into<String>, domain: Region, poly: UniPoly) -> HoloFun1 {
        HoloFun1::new(label, domain, move |z| poly.eval(z))
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.eval)(z)
    }

    /// Attach a decay certificate after validating it on a boundary-weighted
    /// sample of at least 10^3 points (slack factor 1.01).
    pub fn with_decay(mut self, cert: DecayCertificate) -> Result<HoloFun1> {
        let pts = certification_sample(&self.domain);
        for &z in &pts {
            let bound = cert.c * cert.profile.eval(z) * 1.01;
            let v = self.eval(z).norm();
            if v > bound + 1e-14 {
                return Err(Error::DecayRefuted {
                    witness: format!("{z}"),
                    value: v,
                    claim: bound,
                });
            }
        }
        self.decay = Some(cert);
        Ok(self)
    }

    /// Attach the empirically-certified decay: smallest c on the sample.
    pub fn with_measured_decay(mut self, profile: DecayProfile) -> HoloFun1 {
        let me = self.eval.clone();
        let c = match certify_h0_1(&move |z| me(z), &self.domain, &profile, None) {
            CertifyOutcome::Certified { c } => c,
            CertifyOutcome::Refuted { .. } => unreachable!("no claim supplied"),
        };
        self.decay = Some(DecayCertificate { c, profile });
        self
    }
}

/// The additive decomposition f(z1,z2) = f1(z1) + f2(z2) + f12(z1,z2).
#[derive(Debug, Clone, Default)]
pub struct H01Split {
    pub f1: Option<HoloFun1>,
    pub f2: Option<HoloFun1>,
    pub f12: Option<HoloFun2>,
}

#[derive(Clone)]
enum Fun2Body {
    General(Arc<dyn Fn(C64, C64) -> C64 + Send + Sync>),
    Product(Box<HoloFun1>, Box<HoloFun1>),
}

/// Two-variable holomorphic function object. Product structure is kept
/// explicit so the pair calculus can integrate each factor once.
#[derive(Clone)]
pub struct HoloFun2 {
    pub label: String,
    pub domain1: Region,
    pub domain2: Region,
    pub decay: Option<DecayCertificate2>,
    pub split: Option<Box<H01Split>>,
    body: Fun2Body,
}

impl std::fmt::Debug for HoloFun2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HoloFun2")
            .field("label", &self.label)
            .field("decay", &self.decay)
            .finish()
    }
}

impl HoloFun2 {
    pub fn new(
        label: impl Into<String>,
        domain1: Region,
        domain2: Region,
        eval: impl Fn(C64, C64) -> C64 + Send + Sync + 'static,
    ) -> HoloFun2 {
        HoloFun2 {
            label: label.into(),
            domain1,
            domain2,
            decay: None,
            split: None,
            body: Fun2Body::General(Arc::new(eval)),
        }
    }

    pub fn product(label: impl Into<String>, g: HoloFun1, h: HoloFun1) -> HoloFun2 {
        let d1 = g.domain.clone();
        let d2 = h.domain.clone();
        HoloFun2 {
            label: label.into(),
            domain1: d1,
            domain2: d2,
            decay: None,
            split: None,
            body: Fun2Body::Product(Box::new(g), Box::new(h)),
        }
    }

    pub fn eval(&self, z1: C64, z2: C64) -> C64 {
        match &self.body {
            Fun2Body::General(f) => f(z1, z2),
            Fun2Body::Product(g, h) => g.eval(z1) * h.eval(z2),
        }
    }

    pub fn as_product(&self) -> Option<(&HoloFun1, &HoloFun1)> {
        match &self.body {
            Fun2Body::Product(g, h) => Some((g, h)),
            Fun2Body::General(_) => None,
        }
    }

    /// Attach a split after verifying f = f1 + f2 + f12 on a sampled grid
    /// to 1e-10 relative to the grid magnitude.
    pub fn with_split(mut self, split: H01Split) -> Result<HoloFun2> {
        let pts1 = self.domain1.sample_points(6, 6);
        let pts2 = self.domain2.sample_points(6, 6);
        let mut scale = 1.0f64;
        let mut worst = 0.0f64;
        for &z1 in pts1.iter().step_by(3) {
            for &z2 in pts2.iter().step_by(3) {
                let direct = self.eval(z1, z2);
                scale = scale.max(direct.norm());
                let mut s = C64::new(0.0, 0.0);
                if let Some(f1) = &split.f1 {
                    s += f1.eval(z1);
                }
                if let Some(f2) = &split.f2 {
                    s += f2.eval(z2);
                }
                if let Some(f12) = &split.f12 {
                    s += f12.eval(z1, z2);
                }
                worst = worst.max((direct - s).norm());
            }
        }
        if worst > 1e-10 * scale.max(1.0) {
            return Err(Error::InvariantViolation(format!(
                "split parts deviate from the function by {worst:.3e} on the sample grid"
            )));
        }
        self.split = Some(Box::new(split));
        Ok(self)
    }

    /// Treat the whole function as a pure double part: split = (0, 0, self).
    pub fn as_pure_double(self) -> HoloFun2 {
        let clone = HoloFun2 {
            label: self.label.clone(),
            domain1: self.domain1.clone(),
            domain2: self.domain2.clone(),
            decay: self.decay.clone(),
            split: None,
            body: self.body.clone(),
        };
        let mut out = self;
        out.split = Some(Box::new(H01Split {
            f1: None,
            f2: None,
            f12: Some(clone),
        }));
        out
    }

    pub fn with_measured_decay(mut self, profile1: DecayProfile, profile2: DecayProfile) -> HoloFun2 {
        let body = self.body.clone();
        let f = move |z1: C64, z2: C64| match &body {
            Fun2Body::General(g) => g(z1, z2),
            Fun2Body::Product(g, h) => g.eval(z1) * h.eval(z2),
        };
        let c = match certify_h0_2(&f, &self.domain1, &self.domain2, &profile1, &profile2, None) {
            CertifyOutcome2::Certified { c } => c,
            CertifyOutcome2::Refuted { .. } => unreachable!("no claim supplied"),
        };
        self.decay = Some(DecayCertificate2 {
            c,
            profile1,
            profile2,
        });
        self
    }
}

// ---- polynomials ------------------------------------------------------------

/// Dense univariate polynomial, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    pub coeffs: Vec<C64>,
}

impl UniPoly {
    pub fn new(coeffs: Vec<C64>) -> UniPoly {
        let mut p = UniPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> UniPoly {
        UniPoly { coeffs: vec![] }
    }

    pub fn constant(c: C64) -> UniPoly {
        UniPoly::new(vec![c])
    }

    pub fn monomial(n: usize) -> UniPoly {
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = C64::new(1.0, 0.0);
        UniPoly { coeffs }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.norm() == 0.0) {
            self.coeffs.pop();
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_matrix(&self, t: &CMatrix) -> CMatrix {
        t.poly_eval(&self.coeffs)
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        UniPoly::new(out)
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return UniPoly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn from_roots(roots: &[C64]) -> UniPoly {
        let mut p = UniPoly::constant(C64::new(1.0, 0.0));
        for &r in roots {
            p = p.mul(&UniPoly::new(vec![-r, C64::new(1.0, 0.0)]));
        }
        p
    }

    /// Substitute z <- a + b w, returning coefficients in w.
    pub fn compose_affine(&self, a: C64, b: C64) -> UniPoly {
        let lin = UniPoly::new(vec![a, b]);
        let mut acc = UniPoly::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin);
            acc = acc.add(&UniPoly::constant(c));
        }
        acc
    }
}

/// Dense bivariate polynomial; `coeffs[k][l]` multiplies z1^k z2^l.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePoly {
    pub coeffs: Vec<Vec<C64>>,
}

impl BivariatePoly {
    pub fn new(mut coeffs: Vec<Vec<C64>>) -> BivariatePoly {
        let width = coeffs.iter().map(|r| r.len()).max().unwrap_or(0);
        for row in &mut coeffs {
            row.resize(width, C64::new(0.0, 0.0));
        }
        if coeffs.is_empty() {
            coeffs.push(vec![]);
        }
        BivariatePoly { coeffs }
    }

    pub fn zero() -> BivariatePoly {
        BivariatePoly::new(vec![vec![C64::new(0.0, 0.0)]])
    }

    pub fn degrees(&self) -> (usize, usize) {
        (
            self.coeffs.len().saturating_sub(1),
            self.coeffs.first().map_or(0, |r| r.len().saturating_sub(1)),
        )
    }

    /// Outer product of univariate polynomials: u(z1) * v(z2).
    pub fn outer(u: &UniPoly, v: &UniPoly) -> BivariatePoly {
        if u.coeffs.is_empty() || v.coeffs.is_empty() {
            return BivariatePoly::zero();
        }
        BivariatePoly::new(
            u.coeffs
                .iter()
                .map(|&a| v.coeffs.iter().map(|&b| a * b).collect())
                .collect(),
        )
    }

    /// Nested Horner evaluation.
    pub fn eval(&self, z1: C64, z2: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, row| {
            let row_val = row.iter().rev().fold(C64::new(0.0, 0.0), |a, &c| a * z2 + c);
            acc * z1 + row_val
        })
    }

    /// Power-sum evaluation; the oracle the Horner scheme is checked against.
    pub fn eval_naive(&self, z1: C64, z2: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, row) in self.coeffs.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                acc += c * z1.powu(k as u32) * z2.powu(l as u32);
            }
        }
        acc
    }

    /// phi(T1, T2) for commuting arguments, by Horner in T1 with
    /// matrix-valued coefficients s_k(T2).
    pub fn eval_matrices(&self, t1: &CMatrix, t2: &CMatrix) -> CMatrix {
        let n = t1.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for row in self.coeffs.iter().rev() {
            acc = t1.matmul(&acc);
            acc = acc.add(&t2.poly_eval(row));
        }
        acc
    }

    pub fn add(&self, other: &BivariatePoly) -> BivariatePoly {
        let rows = self.coeffs.len().max(other.coeffs.len());
        let cols = self
            .coeffs
            .first()
            .map_or(0, |r| r.len())
            .max(other.coeffs.first().map_or(0, |r| r.len()));
        let mut out = vec![vec![C64::new(0.0, 0.0); cols]; rows];
        for (k, row) in self.coeffs.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                out[k][l] += c;
            }
        }
        for (k, row) in other.coeffs.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                out[k][l] += c;
            }
        }
        BivariatePoly::new(out)
    }

    pub fn sub(&self, other: &BivariatePoly) -> BivariatePoly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> BivariatePoly {
        BivariatePoly::new(
            self.coeffs
                .iter()
                .map(|row| row.iter().map(|&a| a * c).collect())
                .collect(),
        )
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_coeff_diff(&self, other: &BivariatePoly) -> f64 {
        self.sub(other).max_coeff_abs()
    }

    /// Substitute z1 <- a1 + b1 w1 and z2 <- a2 + b2 w2.
    pub fn compose_affine(&self, a1: C64, b1: C64, a2: C64, b2: C64) -> BivariatePoly {
        let rows_sub: Vec<UniPoly> = self
            .coeffs
            .iter()
            .map(|row| UniPoly::new(row.clone()).compose_affine(a2, b2))
            .collect();
        // Horner in w1 with polynomial (in w2) coefficients.
        let mut acc: Vec<UniPoly> = vec![];
        for row in rows_sub.iter().rev() {
            let mut next: Vec<UniPoly> = vec![UniPoly::zero(); acc.len() + 1];
            for (k, p) in acc.iter().enumerate() {
                next[k] = next[k].add(&p.scale(a1));
                next[k + 1] = next[k + 1].add(&p.scale(b1));
            }
            next[0] = next[0].add(row);
            acc = next;
        }
        let width = acc.iter().map(|p| p.coeffs.len()).max().unwrap_or(1).max(1);
        BivariatePoly::new(
            acc.into_iter()
                .map(|mut p| {
                    p.coeffs.resize(width, C64::new(0.0, 0.0));
                    p.coeffs
                })
                .collect(),
        )
    }

    pub fn to_holofun2(
        &self,
        domain1: Region,
        domain2: Region,
        label: impl Into<String>,
    ) -> HoloFun2 {
        let p = self.clone();
        HoloFun2::new(label, domain1, domain2, move |z1, z2| p.eval(z1, z2))
    }
}

// ---- named operations --------------------------------------------------------

/// Lagrange basis on E: degree N-1 polynomials with L_i(xi_j) = delta_ij,
/// built by the product formula with coefficients expanded.
pub fn lagrange_basis(cfg: &SpectralConfig) -> Vec<UniPoly> {
    let xi = cfg.xi();
    let n = xi.len();
    (0..n)
        .map(|i| {
            let mut p = UniPoly::constant(C64::new(1.0, 0.0));
            for j in 0..n {
                if j == i {
                    continue;
                }
                let denom = xi[i] - xi[j];
                p = p.mul(&UniPoly::new(vec![
                    -xi[j] / denom,
                    C64::new(1.0, 0.0) / denom,
                ]));
            }
            p
        })
        .collect()
}

/// The interpolation split of a bivariate polynomial: with a_n(z1) = z1^n
/// and b_n(z2) the n-th coefficient row, each factor splits into its
/// Lagrange interpolant on E plus the remainder, giving
/// phi = P1 + P2 + P3 + P4 where P4 vanishes on E x C and C x E.
pub fn polynomial_split(phi: &BivariatePoly, cfg: &SpectralConfig) -> [BivariatePoly; 4] {
    let basis = lagrange_basis(cfg);
    let xi = cfg.xi();
    let mut p = [
        BivariatePoly::zero(),
        BivariatePoly::zero(),
        BivariatePoly::zero(),
        BivariatePoly::zero(),
    ];
    for (n_idx, row) in phi.coeffs.iter().enumerate() {
        let a = UniPoly::monomial(n_idx);
        let b = UniPoly::new(row.clone());
        if b.coeffs.is_empty() {
            continue;
        }
        let mut a0 = UniPoly::zero();
        let mut b0 = UniPoly::zero();
        for (j, l) in basis.iter().enumerate() {
            a0 = a0.add(&l.scale(a.eval(xi[j])));
            b0 = b0.add(&l.scale(b.eval(xi[j])));
        }
        let a1 = a.sub(&a0);
        let b1 = b.sub(&b0);
        p[0] = p[0].add(&BivariatePoly::outer(&a0, &b0));
        p[1] = p[1].add(&BivariatePoly::outer(&a0, &b1));
        p[2] = p[2].add(&BivariatePoly::outer(&a1, &b0));
        p[3] = p[3].add(&BivariatePoly::outer(&a1, &b1));
    }
    p
}

/// Coefficients of 1 / prod_j (1 - conj(xi_j) z) by the linear recurrence
/// from the denominator polynomial. The computed values are checked against
/// the closed ceiling N (min gap)^{-(N-1)}; exceeding it means precision
/// was lost.
pub fn reciprocal_coeffs(cfg: &SpectralConfig, count: usize) -> Result<Vec<C64>> {
    assert!(count >= 1);
    let q = denominator_poly(cfg);
    let mut a = Vec::with_capacity(count);
    a.push(C64::new(1.0, 0.0) / q.coeffs[0]);
    for m in 1..count {
        let mut s = C64::new(0.0, 0.0);
        for j in 1..q.coeffs.len().min(m + 1) {
            s += q.coeffs[j] * a[m - j];
        }
        a.push(-s / q.coeffs[0]);
    }
    let ceiling = cfg.reciprocal_coeff_ceiling() * (1.0 + 1e-9);
    if let Some(bad) = a.iter().find(|c| c.norm() > ceiling) {
        return Err(Error::InvariantViolation(format!(
            "reciprocal coefficient {bad} exceeds the ceiling {ceiling:.3e}; precision lost"
        )));
    }
    Ok(a)
}

/// prod_j (1 - conj(xi_j) z).
pub fn denominator_poly(cfg: &SpectralConfig) -> UniPoly {
    let mut q = UniPoly::constant(C64::new(1.0, 0.0));
    for &xi in cfg.xi() {
        q = q.mul(&UniPoly::new(vec![C64::new(1.0, 0.0), -xi.conj()]));
    }
    q
}

// ---- certification and sup norms ---------------------------------------------

#[derive(Debug, Clone)]
pub enum CertifyOutcome {
    Certified { c: f64 },
    Refuted { witness: C64, value: f64, claim: f64 },
}

fn certification_sample(region: &Region) -> Vec<C64> {
    // Boundary-weighted, at least 10^3 points, geometric clustering toward
    // the distinguished corners (ratio 1/2, 12 layers).
    let mut pts = region.sample_points(40, 12);
    let mut per_piece = 64;
    while pts.len() < 1000 {
        pts.extend(region.sample_points(per_piece, 12));
        per_piece *= 2;
    }
    pts
}

/// Empirical decay certification for a one-variable function: smallest c on
/// the sample, or the witness violating a supplied claim (slack 1.01).
pub fn certify_h0_1(
    f: &dyn Fn(C64) -> C64,
    region: &Region,
    profile: &DecayProfile,
    claim: Option<f64>,
) -> CertifyOutcome {
    let pts = certification_sample(region);
    let mut c_emp = 0.0f64;
    for &z in &pts {
        let denom = profile.eval(z);
        if denom <= 1e-300 {
            continue;
        }
        let ratio = f(z).norm() / denom;
        if let Some(c_claim) = claim {
            if ratio > c_claim * 1.01 {
                return CertifyOutcome::Refuted {
                    witness: z,
                    value: f(z).norm(),
                    claim: c_claim * denom * 1.01,
                };
            }
        }
        c_emp = c_emp.max(ratio);
    }
    CertifyOutcome::Certified { c: c_emp }
}

#[derive(Debug, Clone)]
pub enum CertifyOutcome2 {
    Certified {
        c: f64,
    },
    Refuted {
        witness: (C64, C64),
        value: f64,
        claim: f64,
    },
}

/// Bivariate analogue over a stratified product sample.
pub fn certify_h0_2(
    f: &dyn Fn(C64, C64) -> C64,
    region1: &Region,
    region2: &Region,
    profile1: &DecayProfile,
    profile2: &DecayProfile,
    claim: Option<f64>,
) -> CertifyOutcome2 {
    let p1 = certification_sample(region1);
    let p2 = certification_sample(region2);
    let stride1 = (p1.len() / 40).max(1);
    let stride2 = (p2.len() / 40).max(1);
    let mut c_emp = 0.0f64;
    for &z1 in p1.iter().step_by(stride1) {
        for &z2 in p2.iter().step_by(stride2) {
            let denom = profile1.eval(z1) * profile2.eval(z2);
            if denom <= 1e-300 {
                continue;
            }
            let v = f(z1, z2).norm();
            let ratio = v / denom;
            if let Some(c_claim) = claim {
                if ratio > c_claim * 1.01 {
                    return CertifyOutcome2::Refuted {
                        witness: (z1, z2),
                        value: v,
                        claim: c_claim * denom * 1.01,
                    };
                }
            }
            c_emp = c_emp.max(ratio);
        }
    }
    CertifyOutcome2::Certified { c: c_emp }
}

/// Sup norm over a region: boundary-dense scan with per-piece local
/// refinement plus interior fill, repeated at doubled density until stable
/// to 1e-4 relative. A lower bound by construction.
pub fn sup_norm1(f: &dyn Fn(C64) -> C64, region: &Region) -> f64 {
    let mut density = 48usize;
    let mut prev = -1.0f64;
    for _ in 0..6 {
        let mut best = scan_boundary_max(f, region, density);
        for z in region.sample_points(16, 10) {
            best = best.max(f(z).norm());
        }
        if prev >= 0.0 && (best - prev).abs() <= 1e-4 * best.max(1e-300) {
            return best.max(prev);
        }
        prev = best;
        density *= 2;
    }
    prev
}

fn scan_boundary_max(f: &dyn Fn(C64) -> C64, region: &Region, per_piece: usize) -> f64 {
    let contour = region.boundary();
    let mut best = 0.0f64;
    for piece in contour.pieces() {
        let mut tbest = 0.0;
        let mut vbest = 0.0;
        for k in 0..=per_piece {
            let t = k as f64 / per_piece as f64;
            let v = f(piece.eval(t).0).norm();
            if v > vbest {
                vbest = v;
                tbest = t;
            }
        }
        // Ternary refinement on the bracketing interval.
        let mut lo = (tbest - 1.0 / per_piece as f64).max(0.0);
        let mut hi = (tbest + 1.0 / per_piece as f64).min(1.0);
        for _ in 0..40 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(piece.eval(m1).0).norm() < f(piece.eval(m2).0).norm() {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        vbest = vbest.max(f(piece.eval(0.5 * (lo + hi)).0).norm());
        best = best.max(vbest);
    }
    best
}

/// Sup norm over a product region: for holomorphic factors the maximum sits
/// on boundary x boundary; coarse product scan plus alternating
/// per-variable refinement.
pub fn sup_norm2(f: &dyn Fn(C64, C64) -> C64, region1: &Region, region2: &Region) -> f64 {
    let b1 = region1.boundary_samples(40);
    let b2 = region2.boundary_samples(40);
    let mut best = 0.0f64;
    let mut arg = (b1[0], b2[0]);
    for &z1 in &b1 {
        for &z2 in &b2 {
            let v = f(z1, z2).norm();
            if v > best {
                best = v;
                arg = (z1, z2);
            }
        }
    }
    for _ in 0..5 {
        let (z1, z2) = arg;
        let g1 = |w: C64| f(w, z2);
        let m1 = scan_boundary_max(&g1, region1, 256);
        let w1 = argmax_on_boundary(&g1, region1, 256);
        let g2 = |w: C64| f(w1, w);
        let m2 = scan_boundary_max(&g2, region2, 256);
        let w2 = argmax_on_boundary(&g2, region2, 256);
        best = best.max(m1).max(m2);
        if (w1 - z1).norm() < 1e-9 && (w2 - z2).norm() < 1e-9 {
            break;
        }
        arg = (w1, w2);
    }
    best
}

fn argmax_on_boundary(f: &dyn Fn(C64) -> C64, region: &Region, per_piece: usize) -> C64 {
    let contour = region.boundary();
    let mut best = -1.0;
    let mut arg = contour.pieces()[0].eval(0.0).0;
    for piece in contour.pieces() {
        for k in 0..=per_piece {
            let t = k as f64 / per_piece as f64;
            let z = piece.eval(t).0;
            let v = f(z).norm();
            if v > best {
                best = v;
                arg = z;
            }
        }
    }
    arg
}

// ---- corpus specification -----------------------------------------------------

/// Function corpus entry as stored in config files: a named built-in key or
/// explicit coefficient arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Builtin { builtin: String },
    Poly { coeffs: Vec<[f64; 2]> },
    Rational { num: Vec<[f64; 2]>, den: Vec<[f64; 2]> },
}

fn coeffs_from(raw: &[[f64; 2]]) -> Vec<C64> {
    raw.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

impl FunctionSpec {
    /// Realize the spec on a region with an empirically measured decay
    /// certificate over E.
    pub fn build(&self, cfg: &SpectralConfig, domain: &Region) -> Result<HoloFun1> {
        match self {
            FunctionSpec::Poly { coeffs } => {
                let p = UniPoly::new(coeffs_from(coeffs));
                Ok(HoloFun1::from_poly("poly", domain.clone(), p)
                    .with_measured_decay(DecayProfile::points_on(cfg, 0.0)))
            }
            FunctionSpec::Rational { num, den } => {
                let n = UniPoly::new(coeffs_from(num));
                let d = UniPoly::new(coeffs_from(den));
                Ok(HoloFun1::new("rational", domain.clone(), move |z| {
                    n.eval(z) / d.eval(z)
                })
                .with_measured_decay(DecayProfile::points_on(cfg, 0.0)))
            }
            FunctionSpec::Builtin { builtin } => build_builtin(builtin, cfg, domain),
        }
    }
}

/// Resolve a named built-in by string key: `one_minus_z^k`,
/// `prod_linear_factors`, or `rational(angle, radius)` (the vanishing
/// product over E divided by a simple pole at the given polar point, which
/// must lie outside the closed unit disc).
pub fn build_builtin(key: &str, cfg: &SpectralConfig, domain: &Region) -> Result<HoloFun1> {
    if let Some(kstr) = key.strip_prefix("one_minus_z^") {
        let k: u32 = kstr
            .parse()
            .map_err(|_| Error::ConfigInvalid(vec![format!("bad exponent in `{key}`")]))?;
        let mut p = UniPoly::constant(C64::new(1.0, 0.0));
        for _ in 0..k {
            p = p.mul(&UniPoly::new(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]));
        }
        let profile = DecayProfile::Points {
            points: vec![C64::new(1.0, 0.0)],
            exponents: vec![k as f64],
        };
        return Ok(HoloFun1::from_poly(key, domain.clone(), p).with_measured_decay(profile));
    }
    if key == "prod_linear_factors" {
        let p = UniPoly::from_roots(cfg.xi());
        return Ok(HoloFun1::from_poly(key, domain.clone(), p)
            .with_measured_decay(DecayProfile::points_on(cfg, 1.0)));
    }
    if let Some(body) = key.strip_prefix("rational(").and_then(|s| s.strip_suffix(')')) {
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::ConfigInvalid(vec![format!(
                "`{key}` needs two arguments"
            )]));
        }
        let angle: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::ConfigInvalid(vec![format!("bad pole angle in `{key}`")]))?;
        let radius: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::ConfigInvalid(vec![format!("bad pole radius in `{key}`")]))?;
        if radius <= 1.0 {
            return Err(Error::ConfigInvalid(vec![format!(
                "pole radius must exceed 1 in `{key}`"
            )]));
        }
        let pole = C64::from_polar(radius, angle);
        let vanish = UniPoly::from_roots(cfg.xi());
        return Ok(HoloFun1::new(key, domain.clone(), move |z| {
            vanish.eval(z) / (z - pole)
        })
        .with_measured_decay(DecayProfile::points_on(cfg, 1.0)));
    }
    Err(Error::ConfigInvalid(vec![format!(
        "unknown built-in function `{key}`"
    )]))
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

    fn cfg2() -> SpectralConfig {
        SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.4, 0.7).unwrap()
    }

    pub(crate) fn random_bivariate(
        rng: &mut rand_chacha::ChaCha8Rng,
        degree: usize,
    ) -> BivariatePoly {
        BivariatePoly::new(
            (0..=degree)
                .map(|_| {
                    (0..=degree)
                        .map(|_| crate::workbench::random_complex(rng, 1.0))
                        .collect()
                })
                .collect(),
        )
    }

    #[test]
    fn lagrange_single_point_is_one() {
        let basis = lagrange_basis(&cfg1());
        assert_eq!(basis.len(), 1);
        assert!((basis[0].eval(c(0.37, 0.2)) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lagrange_two_points() {
        let basis = lagrange_basis(&cfg2());
        // L1 = (1+z)/2 at xi = 1, L2 = (1-z)/2 at xi = -1.
        let z = c(0.3, -0.1);
        assert!((basis[0].eval(z) - (c(1.0, 0.0) + z) * c(0.5, 0.0)).norm() < 1e-14);
        assert!((basis[1].eval(z) - (c(1.0, 0.0) - z) * c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lagrange_three_points_delta_property() {
        let cfg = SpectralConfig::from_angles(
            &[0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
            0.75,
            0.9,
        )
        .unwrap();
        let basis = lagrange_basis(&cfg);
        for (i, l) in basis.iter().enumerate() {
            for (j, &xj) in cfg.xi().iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((l.eval(xj) - c(expect, 0.0)).norm() < 1e-12, "L_{i}(xi_{j})");
            }
        }
    }

    #[test]
    fn split_of_z1z2_single_point() {
        // phi = z1 z2, E = {1}: P4 = (z1 - 1)(z2 - 1).
        let phi = BivariatePoly::new(vec![
            vec![c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ]);
        let [p1, p2, p3, p4] = polynomial_split(&phi, &cfg1());
        let expect_p4 = BivariatePoly::new(vec![
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
        ]);
        assert!(p4.max_coeff_diff(&expect_p4) < 1e-14);
        let total = p1.add(&p2).add(&p3).add(&p4);
        assert!(total.max_coeff_diff(&phi) < 1e-14);
    }

    #[test]
    fn split_of_constant_is_pure_p1() {
        let phi = BivariatePoly::new(vec![vec![c(1.0, 0.0)]]);
        let [p1, p2, p3, p4] = polynomial_split(&phi, &cfg2());
        assert!(p1.max_coeff_diff(&phi) < 1e-14);
        for p in [&p2, &p3, &p4] {
            assert!(p.max_coeff_abs() < 1e-14);
        }
    }

    #[test]
    fn split_p4_vanishes_on_e_lines() {
        let cfg = cfg2();
        let mut rng = crate::workbench::seeded_rng(41);
        for _ in 0..10 {
            let phi = random_bivariate(&mut rng, 5);
            let [p1, p2, p3, p4] = polynomial_split(&phi, &cfg);
            assert!(
                p1.add(&p2).add(&p3).add(&p4).max_coeff_diff(&phi)
                    < 1e-12 * phi.max_coeff_abs().max(1.0)
            );
            for &xi in cfg.xi() {
                for k in 0..12 {
                    let w = C64::from_polar(0.8, k as f64 * 0.5);
                    assert!(p4.eval(xi, w).norm() < 1e-9, "P4({xi}, {w})");
                    assert!(p4.eval(w, xi).norm() < 1e-9, "P4({w}, {xi})");
                }
            }
        }
    }

    #[test]
    fn reciprocal_closed_forms() {
        let a = reciprocal_coeffs(&cfg1(), 12).unwrap();
        for v in &a {
            assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        }
        let a = reciprocal_coeffs(&cfg2(), 12).unwrap();
        for (m, v) in a.iter().enumerate() {
            let expect = if m % 2 == 0 { 1.0 } else { 0.0 };
            assert!((v - c(expect, 0.0)).norm() < 1e-12, "m = {m}: {v}");
        }
        let cfg = SpectralConfig::from_angles(
            &[std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2],
            0.4,
            0.7,
        )
        .unwrap();
        let a = reciprocal_coeffs(&cfg, 12).unwrap();
        for (m, v) in a.iter().enumerate() {
            let expect = match m % 4 {
                0 => 1.0,
                2 => -1.0,
                _ => 0.0,
            };
            assert!((v - c(expect, 0.0)).norm() < 1e-12, "m = {m}: {v}");
        }
    }

    #[test]
    fn reciprocal_convolution_identity() {
        for cfg in [cfg1(), cfg2()] {
            let m = 40;
            let a = reciprocal_coeffs(&cfg, m).unwrap();
            let q = denominator_poly(&cfg);
            for k in 0..=(m - cfg.n_points()) {
                let mut s = c(0.0, 0.0);
                for j in 0..q.coeffs.len().min(k + 1) {
                    s += q.coeffs[j] * a[k - j];
                }
                let expect = if k == 0 { 1.0 } else { 0.0 };
                assert!((s - c(expect, 0.0)).norm() < 1e-12, "k = {k}: {s}");
            }
        }
    }

    #[test]
    fn certify_linear_factor_has_unit_constant() {
        let cfg = cfg1();
        let domain = cfg.stolz(cfg.s()).unwrap();
        let profile = DecayProfile::points_on(&cfg, 1.0);
        match certify_h0_1(&|z| c(1.0, 0.0) - z, &domain, &profile, None) {
            CertifyOutcome::Certified { c } => assert!((c - 1.0).abs() < 1e-9, "c = {c}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certify_refutes_wrong_exponent() {
        // f = (1-z)^2 cannot obey an exponent-3 bound near the vertex.
        let cfg = cfg1();
        let domain = cfg.stolz(cfg.s()).unwrap();
        let profile = DecayProfile::Points {
            points: vec![c(1.0, 0.0)],
            exponents: vec![3.0],
        };
        let f = |z: C64| (c(1.0, 0.0) - z).powu(2);
        match certify_h0_1(&f, &domain, &profile, Some(10.0)) {
            CertifyOutcome::Refuted { witness, .. } => {
                assert!(
                    (witness - c(1.0, 0.0)).norm() < 0.2,
                    "witness {witness} not near the vertex"
                );
            }
            CertifyOutcome::Certified { c } => panic!("spuriously certified with c = {c}"),
        }
    }

    #[test]
    fn certify_bivariate_product_of_linear_factors() {
        let cfg = cfg1();
        let domain = cfg.stolz(cfg.s()).unwrap();
        let p = DecayProfile::points_on(&cfg, 1.0);
        let f = |z1: C64, z2: C64| (c(1.0, 0.0) - z1) * (c(1.0, 0.0) - z2);
        match certify_h0_2(&f, &domain, &domain, &p, &p, None) {
            CertifyOutcome2::Certified { c } => assert!((c - 1.0).abs() < 1e-9, "c = {c}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sup_norm_of_identity_function() {
        let cfg = cfg1();
        let domain = cfg.stolz(0.5).unwrap();
        let v = sup_norm1(&|z| z, &domain);
        assert!((v - 1.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn sup_norm_constant() {
        let cfg = cfg1();
        let domain = cfg.stolz(0.5).unwrap();
        let v = sup_norm1(&|_| c(3.0, 0.0), &domain);
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_one_minus_z_attained_across_from_vertex() {
        // sup |1-z| over E_0.5, E = {1}: attained at z = -0.5, value 1.5.
        let cfg = cfg1();
        let domain = cfg.stolz(0.5).unwrap();
        let v = sup_norm1(&|z| c(1.0, 0.0) - z, &domain);
        assert!((v - 1.5).abs() < 1e-4, "{v}");
    }

    #[test]
    fn horner_matches_naive_oracle() {
        let mut rng = crate::workbench::seeded_rng(3);
        for _ in 0..20 {
            let p = random_bivariate(&mut rng, 4);
            let z1 = crate::workbench::random_complex(&mut rng, 1.2);
            let z2 = crate::workbench::random_complex(&mut rng, 1.2);
            assert!((p.eval(z1, z2) - p.eval_naive(z1, z2)).norm() < 1e-12);
        }
    }

    #[test]
    fn compose_affine_matches_substitution() {
        let mut rng = crate::workbench::seeded_rng(13);
        let p = random_bivariate(&mut rng, 4);
        let (a1, b1) = (c(0.3, -0.2), c(0.0, 1.0));
        let (a2, b2) = (c(-0.1, 0.5), c(0.7, 0.7));
        let q = p.compose_affine(a1, b1, a2, b2);
        for _ in 0..10 {
            let w1 = crate::workbench::random_complex(&mut rng, 1.0);
            let w2 = crate::workbench::random_complex(&mut rng, 1.0);
            let direct = p.eval(a1 + b1 * w1, a2 + b2 * w2);
            assert!((q.eval(w1, w2) - direct).norm() < 1e-11);
        }
    }

    #[test]
    fn builtin_keys_build() {
        let cfg = cfg1();
        let domain = cfg.stolz(cfg.s()).unwrap();
        let f = build_builtin("one_minus_z^2", &cfg, &domain).unwrap();
        assert!((f.eval(c(0.5, 0.0)) - c(0.25, 0.0)).norm() < 1e-14);
        let g = build_builtin("prod_linear_factors", &cfg, &domain).unwrap();
        assert!((g.eval(c(0.5, 0.0)) - c(-0.5, 0.0)).norm() < 1e-14);
        let r = build_builtin("rational(0.5, 2.0)", &cfg, &domain).unwrap();
        assert!(r.decay.is_some());
        assert!(build_builtin("nope", &cfg, &domain).is_err());
    }

    #[test]
    fn split_validation_rejects_wrong_parts() {
        let cfg = cfg1();
        let domain = cfg.stolz(cfg.s()).unwrap();
        let f = HoloFun2::new("f", domain.clone(), domain.clone(), |z1, z2| z1 * z2);
        let bad = H01Split {
            f1: Some(HoloFun1::new("wrong", domain, |z| z)),
            f2: None,
            f12: None,
        };
        assert!(f.with_split(bad).is_err());
    }

    #[test]
    fn matrix_evaluation_of_bivariate_matches_scalar() {
        let mut rng = crate::workbench::seeded_rng(8);
        let p = random_bivariate(&mut rng, 3);
        let d1 = CMatrix::diag(&[c(0.5, 0.0), c(-0.2, 0.1)]);
        let d2 = CMatrix::diag(&[c(0.1, 0.3), c(0.4, 0.0)]);
        let m = p.eval_matrices(&d1, &d2);
        for i in 0..2 {
            let expect = p.eval(d1[(i, i)], d2[(i, i)]);
            assert!((m[(i, i)] - expect).norm() < 1e-12);
        }
    }
}
