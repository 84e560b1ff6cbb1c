//! The verification battery: every gate the workbench promises, each with
//! its tolerance pinned in code. `run_suite` drives all of them; the
//! `acceptance` integration test and the `suite` CLI command both dispatch
//! here.

use num_complex::Complex64 as C64;

use crate::calculus::{
    a_rho, classify_ritt_e, fc_sectorial, sectorial_sup1, PairCalculus,
    RittCalculus, SectorialCalculus, SectorialPairCalculus,
};
use crate::dilation::{
    build_dilation, build_joint_dilation, ergodic_decompose, rad_norm, shift_norm_p2,
    square_function, verify_dilation, RadMode, RademacherBlock,
};
use crate::error::Result;
use crate::holofun::{
    denominator_poly, polynomial_split, reciprocal_coeffs, sup_norm2, DecayProfile, HoloFun1,
    HoloFun2,
};
use crate::linalg::{op_norm, vnorm2, CMatrix, ONE, ZERO};
use crate::regions::SpectralConfig;
use crate::transfer::{
    boundary_split_f, certify_corrector, corrector_h, localize, transfer_verify,
    LocalizationSystem,
};
use crate::workbench::{
    self, bivariate_poly_corpus, default_transfer_corpus, h0_corpus, random_commuting_pair,
    random_ritt_false, random_ritt_true, random_unitary, sectorial_corpus, seeded_rng,
};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
}

fn criterion(
    id: usize,
    name: &'static str,
    body: impl FnOnce() -> Result<String>,
) -> CriterionResult {
    match body() {
        Ok(details) => CriterionResult {
            id,
            name,
            pass: true,
            details,
        },
        Err(e) => CriterionResult {
            id,
            name,
            pass: false,
            details: format!("{e}"),
        },
    }
}

fn fail(msg: String) -> crate::error::Error {
    crate::error::Error::InvariantViolation(msg)
}

fn cfg_single() -> SpectralConfig {
    SpectralConfig::from_angles(&[0.0], 0.3, 0.8).unwrap()
}

fn cfg_two() -> SpectralConfig {
    SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.4, 0.75).unwrap()
}

pub fn run_suite(seed: u64) -> Vec<CriterionResult> {
    vec![
        criterion_oracle_calculus(seed),
        criterion_homomorphism(seed),
        criterion_cauchy_partitions(seed),
        criterion_corrector(seed),
        criterion_polynomial_split(seed),
        criterion_reciprocal_series(),
        criterion_ergodic(seed),
        criterion_square_function(),
        criterion_dilation(seed),
        criterion_shift_norms(seed),
        criterion_transfer_coherence(seed),
        criterion_classifier(seed),
    ]
}

/// Gate 1: contour calculus against the eigendecomposition oracle, for the
/// single and pair calculus on both domain types.
pub fn criterion_oracle_calculus(seed: u64) -> CriterionResult {
    criterion(1, "oracle calculus", || {
        let cfg = cfg_single();
        let funs = h0_corpus(&cfg, 14, 6, seed)?;
        let mut rng = seeded_rng(seed ^ 0x01);
        let mut worst = 0.0f64;
        for k in 0..50 {
            let op = random_ritt_true(&mut rng, &cfg, 5, k % 2 == 0);
            let mut calc = RittCalculus::new(&op.t, &cfg, 0.55, 1e-9)?;
            for f in &funs {
                let got = calc.apply(f)?.value;
                let fd = CMatrix::diag(&op.eigs.iter().map(|&l| f.eval(l)).collect::<Vec<_>>());
                let oracle = op.p.matmul(&fd).matmul(&op.p_inv);
                let err = got.max_abs_diff(&oracle);
                let tol = 1e-7 * op.cond_p;
                if err > tol {
                    return Err(fail(format!(
                        "single fc vs oracle: {err:.3e} > {tol:.3e} ({})",
                        f.label
                    )));
                }
                worst = worst.max(err / op.cond_p);
            }
        }

        // Sectorial single against the same oracle.
        let sect_funs = sectorial_corpus(1.0, 6, seed ^ 0x02);
        let mut worst_sect = 0.0f64;
        for k in 0..10 {
            let n = 4;
            let eigs: Vec<C64> = (0..n)
                .map(|_| {
                    C64::from_polar(
                        rng.gen_range_f(0.3, 2.5),
                        rng.gen_range_f(-0.4, 0.4),
                    )
                })
                .collect();
            let p = if k % 2 == 0 {
                random_unitary(&mut rng, n)
            } else {
                workbench::random_well_conditioned(&mut rng, n, 0.3)
            };
            let p_inv = crate::linalg::solve(&p, &CMatrix::identity(n))?;
            let a = p.matmul(&CMatrix::diag(&eigs)).matmul(&p_inv);
            for f in &sect_funs {
                let got = fc_sectorial(f, &a, 1.0, 1e-8)?.value;
                let fd = CMatrix::diag(&eigs.iter().map(|&l| f.eval(l)).collect::<Vec<_>>());
                let oracle = p.matmul(&fd).matmul(&p_inv);
                let err = got.max_abs_diff(&oracle);
                if err > 1e-6 {
                    return Err(fail(format!(
                        "sectorial fc vs oracle: {err:.3e} > 1e-6 ({})",
                        f.label
                    )));
                }
                worst_sect = worst_sect.max(err);
            }
        }

        // Pair calculus, separable oracle, on commuting diagonalizable pairs.
        let singles = h0_corpus(&cfg, 4, 2, seed ^ 0x03)?;
        for k in 0..10 {
            let op = random_ritt_true(&mut rng, &cfg, 4, k % 2 == 0);
            let scale = C64::new(0.8, 0.05);
            let t2 = op.p.matmul(&CMatrix::diag(
                &op.eigs.iter().map(|&l| l * scale).collect::<Vec<_>>(),
            ))
            .matmul(&op.p_inv);
            let mut pair = PairCalculus::new(&op.t, &t2, &cfg, 0.55, 0.55, 1e-7)?;
            for (gi, g) in singles.iter().enumerate() {
                let h = &singles[(gi + 1) % singles.len()];
                let f = HoloFun2::product("pair", g.clone(), h.clone()).as_pure_double();
                let got = pair.apply(&f)?.value;
                let fd = CMatrix::diag(
                    &op.eigs
                        .iter()
                        .map(|&l| g.eval(l) * h.eval(l * scale))
                        .collect::<Vec<_>>(),
                );
                let oracle = op.p.matmul(&fd).matmul(&op.p_inv);
                let err = got.max_abs_diff(&oracle);
                let tol = 1e-6 * op.cond_p.max(1.0);
                if err > tol {
                    return Err(fail(format!("pair fc vs oracle: {err:.3e} > {tol:.3e}")));
                }
            }
        }

        // Sectorial pair, separable oracle.
        let mut a_eigs = Vec::new();
        for _ in 0..3 {
            a_eigs.push(C64::from_polar(
                rng.gen_range_f(0.4, 2.0),
                rng.gen_range_f(-0.3, 0.3),
            ));
        }
        let q = random_unitary(&mut rng, 3);
        let a1 = q.matmul(&CMatrix::diag(&a_eigs)).matmul(&q.adjoint());
        let a2_eigs: Vec<C64> = a_eigs.iter().map(|&l| l * C64::new(1.3, 0.1)).collect();
        let a2 = q.matmul(&CMatrix::diag(&a2_eigs)).matmul(&q.adjoint());
        let mut spc = SectorialPairCalculus::new(&a1, &a2, 1.0, 1.0, 1e-7, 1e8)?;
        for (gi, g) in sect_funs.iter().take(4).enumerate() {
            let h = &sect_funs[(gi + 1) % sect_funs.len()];
            let f = HoloFun2::product("spair", g.clone(), h.clone()).as_pure_double();
            let got = spc.apply(&f)?.value;
            let fd = CMatrix::diag(
                &a_eigs
                    .iter()
                    .zip(&a2_eigs)
                    .map(|(&l1, &l2)| g.eval(l1) * h.eval(l2))
                    .collect::<Vec<_>>(),
            );
            let oracle = q.matmul(&fd).matmul(&q.adjoint());
            let err = got.max_abs_diff(&oracle);
            if err > 1e-6 {
                return Err(fail(format!("sectorial pair vs oracle: {err:.3e} > 1e-6")));
            }
        }

        Ok(format!(
            "worst single {worst:.2e} (cond-scaled), worst sectorial {worst_sect:.2e}"
        ))
    })
}

/// Gate 2: the calculus is an algebra homomorphism and contour-radius
/// independent.
pub fn criterion_homomorphism(seed: u64) -> CriterionResult {
    criterion(2, "algebra homomorphism", || {
        let cfg = cfg_single();
        let funs = h0_corpus(&cfg, 6, 3, seed ^ 0x11)?;
        let mut rng = seeded_rng(seed ^ 0x12);
        let mut worst = 0.0f64;
        let mut worst_indep = 0.0f64;
        for k in 0..10 {
            // Spectra strictly inside so every product stays well certified.
            let mut op = random_ritt_true(&mut rng, &cfg, 4, k % 2 == 0);
            while op.eigs.iter().any(|l| (l - ONE).norm() < 0.05) {
                op = random_ritt_true(&mut rng, &cfg, 4, k % 2 == 0);
            }
            let mut calc = RittCalculus::new(&op.t, &cfg, 0.5, 1e-9)?;
            let mut calc_prime = RittCalculus::new(&op.t, &cfg, 0.62, 1e-9)?;
            for (gi, g) in funs.iter().enumerate() {
                let h = &funs[(gi + 1) % funs.len()];
                let gh = product_fun(&cfg, g, h)?;
                let rg = calc.apply(g)?.value;
                let rh = calc.apply(h)?.value;
                let rgh = calc.apply(&gh)?.value;
                let err = rgh.max_abs_diff(&rg.matmul(&rh));
                if err > 1e-7 {
                    return Err(fail(format!("homomorphism defect {err:.3e} > 1e-7")));
                }
                worst = worst.max(err);
                let r_prime = calc_prime.apply(g)?.value;
                let indep = rg.max_abs_diff(&r_prime);
                if indep > 2.0 * 1e-9 {
                    return Err(fail(format!("radius dependence {indep:.3e} > 2e-9")));
                }
                worst_indep = worst_indep.max(indep);
            }
        }
        Ok(format!(
            "worst homomorphism defect {worst:.2e}, worst radius dependence {worst_indep:.2e}"
        ))
    })
}

fn product_fun(cfg: &SpectralConfig, g: &HoloFun1, h: &HoloFun1) -> Result<HoloFun1> {
    let domain = cfg.stolz(cfg.s())?;
    let (gc, hc) = (g.clone(), h.clone());
    Ok(
        HoloFun1::new(format!("{}*{}", g.label, h.label), domain, move |z| {
            gc.eval(z) * hc.eval(z)
        })
        .with_measured_decay(DecayProfile::points_on(cfg, 2.0)),
    )
}

/// Gate 3: Cauchy localization partitions the polynomial and the pulled
/// back boundary split partitions psi.
pub fn criterion_cauchy_partitions(seed: u64) -> CriterionResult {
    criterion(3, "cauchy partitions", || {
        let cfg = cfg_single();
        let sys = LocalizationSystem::new(&cfg, std::f64::consts::FRAC_PI_3)?;
        let polys = bivariate_poly_corpus(20, 3, seed ^ 0x21, true);
        let m = sys.vertex_count();
        let anchor = sys.polys.inner.interior_anchor();
        let pts: Vec<C64> = sys
            .polys
            .inner
            .boundary_samples(13)
            .into_iter()
            .map(|b| anchor + (b - anchor) * C64::new(0.6, 0.0))
            .take(50)
            .collect();
        let mut worst_part = 0.0f64;
        let mut worst_fsum = 0.0f64;
        for phi in &polys {
            let pieces: Vec<Vec<_>> = (0..m)
                .map(|i| (0..m).map(|j| localize(phi, &sys, i, j).unwrap()).collect())
                .collect();
            for (pi, &z1) in pts.iter().enumerate() {
                let z2 = pts[(pi + 17) % pts.len()];
                let mut sum = ZERO;
                for row in &pieces {
                    for f in row {
                        sum += f.eval(z1, z2)?;
                    }
                }
                let err = (sum - phi.eval(z1, z2)).norm();
                if err > 1e-7 {
                    return Err(fail(format!("localization partition defect {err:.3e}")));
                }
                worst_part = worst_part.max(err);
            }
            let split = boundary_split_f(phi, &sys, 0, 0)?;
            for (pi, &z1) in pts.iter().enumerate().take(25) {
                let z2 = pts[(pi + 7) % pts.len()];
                let (w1, w2) = (ONE - z1, ONE - z2);
                let err = (split.sum(w1, w2)? - split.psi().eval(w1, w2)).norm();
                if err > 1e-7 {
                    return Err(fail(format!("boundary split partition defect {err:.3e}")));
                }
                worst_fsum = worst_fsum.max(err);
            }
        }
        Ok(format!(
            "worst localization defect {worst_part:.2e}, worst split defect {worst_fsum:.2e}"
        ))
    })
}

/// Gate 4: the corrector is certified on sector samples, bounded near the
/// origin, and its constant is stable across the corpus.
pub fn criterion_corrector(seed: u64) -> CriterionResult {
    criterion(4, "corrector decay and stability", || {
        let cfg = cfg_single();
        let theta = std::f64::consts::FRAC_PI_3;
        let sys = LocalizationSystem::new(&cfg, theta)?;
        let polys = bivariate_poly_corpus(20, 3, seed ^ 0x31, true);
        let mut kappas = Vec::new();
        let mut worst_drift = 0.0f64;
        for phi in &polys {
            let split = boundary_split_f(phi, &sys, 0, 0)?;
            let h = corrector_h(&split)?;
            let sup_phi = sup_norm2(
                &|l1, l2| phi.eval(l1, l2),
                &sys.polys.outer,
                &sys.polys.outer,
            );
            let report = certify_corrector(&h, theta, sup_phi)?;
            if !report.decay_c.is_finite() {
                return Err(fail("corrector decay constant not finite".into()));
            }
            if report.origin_drift >= 1e-3 {
                return Err(fail(format!(
                    "origin drift {:.3e} >= 1e-3",
                    report.origin_drift
                )));
            }
            worst_drift = worst_drift.max(report.origin_drift);
            kappas.push(report.kappa);
        }
        let mut sorted = kappas.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let max = *sorted.last().unwrap();
        if max > 3.0 * median {
            return Err(fail(format!(
                "corrector constant unstable: max {max:.3} vs median {median:.3}"
            )));
        }
        Ok(format!(
            "kappa max/median {:.3}, worst origin drift {worst_drift:.2e}",
            max / median
        ))
    })
}

/// Gate 5: the interpolation split partitions exactly and its double
/// remainder vanishes on the E-lines.
pub fn criterion_polynomial_split(seed: u64) -> CriterionResult {
    criterion(5, "interpolation split", || {
        let configs = [
            cfg_two(),
            SpectralConfig::from_angles(
                &[0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
                0.75,
                0.9,
            )?,
        ];
        let mut worst_sum = 0.0f64;
        let mut worst_line = 0.0f64;
        for cfg in &configs {
            let polys = bivariate_poly_corpus(20, 5, seed ^ 0x41, false);
            for phi in &polys {
                let [p1, p2, p3, p4] = polynomial_split(phi, cfg);
                let total = p1.add(&p2).add(&p3).add(&p4);
                let err = total.max_coeff_diff(phi);
                let scale = phi.max_coeff_abs().max(1.0);
                if err > 1e-12 * scale {
                    return Err(fail(format!("split sum defect {err:.3e}")));
                }
                worst_sum = worst_sum.max(err / scale);
                for &xi in cfg.xi() {
                    for k in 0..15 {
                        let w = C64::from_polar(0.85, 0.41 * k as f64);
                        let v1 = p4.eval(xi, w).norm();
                        let v2 = p4.eval(w, xi).norm();
                        if v1.max(v2) > 1e-9 {
                            return Err(fail(format!(
                                "double remainder fails to vanish on E-lines: {:.3e}",
                                v1.max(v2)
                            )));
                        }
                        worst_line = worst_line.max(v1.max(v2));
                    }
                }
            }
        }
        Ok(format!(
            "worst sum defect {worst_sum:.2e}, worst E-line value {worst_line:.2e}"
        ))
    })
}

/// Gate 6: reciprocal power-series coefficients satisfy the convolution
/// identity and the closed forms.
pub fn criterion_reciprocal_series() -> CriterionResult {
    criterion(6, "reciprocal series", || {
        let configs = [
            cfg_single(),
            cfg_two(),
            SpectralConfig::from_angles(
                &[std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2],
                0.4,
                0.7,
            )?,
        ];
        let mut worst = 0.0f64;
        for cfg in &configs {
            let m = 60;
            let a = reciprocal_coeffs(cfg, m)?;
            let q = denominator_poly(cfg);
            for k in 0..=(m - cfg.n_points()) {
                let mut s = ZERO;
                for j in 0..q.coeffs.len().min(k + 1) {
                    s += q.coeffs[j] * a[k - j];
                }
                let expect = if k == 0 { ONE } else { ZERO };
                let err = (s - expect).norm();
                if err > 1e-12 {
                    return Err(fail(format!("convolution defect {err:.3e} at index {k}")));
                }
                worst = worst.max(err);
            }
        }
        // Closed forms.
        let a = reciprocal_coeffs(&cfg_single(), 10)?;
        if a.iter().any(|v| (v - ONE).norm() > 1e-12) {
            return Err(fail("geometric closed form failed".into()));
        }
        let a = reciprocal_coeffs(&cfg_two(), 10)?;
        for (m, v) in a.iter().enumerate() {
            let expect = if m % 2 == 0 { 1.0 } else { 0.0 };
            if (v - C64::new(expect, 0.0)).norm() > 1e-12 {
                return Err(fail(format!("even/odd closed form failed at {m}")));
            }
        }
        let cfg_i = SpectralConfig::from_angles(
            &[std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2],
            0.4,
            0.7,
        )?;
        let a = reciprocal_coeffs(&cfg_i, 10)?;
        for (m, v) in a.iter().enumerate() {
            let expect = match m % 4 {
                0 => 1.0,
                2 => -1.0,
                _ => 0.0,
            };
            if (v - C64::new(expect, 0.0)).norm() > 1e-12 {
                return Err(fail(format!("alternating closed form failed at {m}")));
            }
        }
        Ok(format!("worst convolution defect {worst:.2e}"))
    })
}

/// Gate 7: the ergodic projection algebra holds at 1e-10 across the corpus,
/// including non-normal semisimple cases.
pub fn criterion_ergodic(seed: u64) -> CriterionResult {
    criterion(7, "ergodic decomposition", || {
        let cfg = cfg_two();
        let mut rng = seeded_rng(seed ^ 0x51);
        let mut worst = 0.0f64;
        for k in 0..30 {
            let op = random_ritt_true(&mut rng, &cfg, 4, k % 2 == 0);
            let dec = ergodic_decompose(&op.t, &cfg)?;
            let dev = dec.algebra_deviation(&op.t);
            let scale = op.t.norm_inf().max(1.0);
            if dev > 1e-10 * scale {
                return Err(fail(format!("projection algebra defect {dev:.3e}")));
            }
            worst = worst.max(dev / scale);
        }
        Ok(format!("worst projection algebra defect {worst:.2e}"))
    })
}

/// Gate 8: square-function closed forms and convergence certification.
pub fn criterion_square_function() -> CriterionResult {
    criterion(8, "square function", || {
        let cfg = cfg_single();
        let x = vec![C64::new(0.8, -0.4), C64::new(0.1, 0.9), C64::new(-0.5, 0.2)];
        let v = square_function(&CMatrix::zeros(3, 3), &cfg, &x, 1.0, 40)?;
        let err0 = (v.value - vnorm2(&x)).abs();
        if err0 > 1e-12 {
            return Err(fail(format!("zero-operator value off by {err0:.3e}")));
        }
        let t = CMatrix::diag(&[C64::new(0.5, 0.0)]);
        let y = vec![C64::new(1.5, -2.0)];
        let v = square_function(&t, &cfg, &y, 1.0, 90)?;
        let expect = 2.0 / 3.0 * vnorm2(&y);
        let err1 = (v.value - expect).abs();
        if err1 > 1e-9 {
            return Err(fail(format!("geometric closed form off by {err1:.3e}")));
        }
        if v.last_increment >= 1e-10 {
            return Err(fail(format!(
                "truncation increment {:.3e} not certified",
                v.last_increment
            )));
        }
        Ok(format!(
            "closed-form errors {err0:.2e}, {err1:.2e}; last increment {:.2e}",
            v.last_increment
        ))
    })
}

/// Gate 9: dilation identity within the computed tail bound, exact
/// isometry, joint recovery and reduction to the single model.
pub fn criterion_dilation(seed: u64) -> CriterionResult {
    criterion(9, "dilation identity", || {
        let cfg = cfg_single();
        let cfg2 = cfg_two();
        let mut rng = seeded_rng(seed ^ 0x61);
        // Single-operator corpus: diagonal mixtures and mild non-normal.
        let mut singles: Vec<(CMatrix, &SpectralConfig)> = vec![
            (CMatrix::diag(&[C64::new(0.5, 0.0)]), &cfg),
            (
                CMatrix::diag(&[ONE, C64::new(-1.0, 0.0), C64::new(0.5, 0.0)]),
                &cfg2,
            ),
            (CMatrix::diag(&[ONE, C64::new(0.3, 0.1)]), &cfg),
        ];
        let d = CMatrix::diag(&[C64::new(0.55, 0.1), C64::new(-0.15, 0.05), C64::new(0.2, 0.0)]);
        let (t_nn, _) = workbench::conjugate_by_random(&mut rng, &d, 0.25);
        singles.push((t_nn, &cfg));
        let mut worst_iso = 0.0f64;
        for (t, c) in &singles {
            let model = build_dilation(t, c, 60, 138, 2.0)?;
            let report = verify_dilation(&model, 8)?;
            if !report.pass {
                return Err(fail(format!(
                    "dilation verify failed: errors {:?} bounds {:?}",
                    report.errors_by_n, report.tail_bounds
                )));
            }
            worst_iso = worst_iso.max(report.isometry_deviation);
        }

        // Joint models on commuting pairs with modest spectral radius.
        let pairs = vec![
            (
                CMatrix::diag(&[C64::new(0.5, 0.0)]),
                CMatrix::diag(&[C64::new(0.3, 0.0)]),
            ),
            {
                let t1 = CMatrix::diag(&[C64::new(0.45, 0.1), C64::new(-0.2, 0.0)]);
                let t2 = t1.matmul(&t1);
                (t1, t2)
            },
        ];
        for (t1, t2) in &pairs {
            let model = build_joint_dilation(t1, t2, &cfg, 40, 98, 2.0)?;
            for i1 in 0..=8usize {
                for i2 in 0..=(8 - i1) {
                    let direct = t1.pow(i1).matmul(&t2.pow(i2));
                    let measured = op_norm(&model.op_matrix(i1, i2).sub(&direct));
                    let bound = model.tail_bound_joint(i1, i2);
                    if measured > bound {
                        return Err(fail(format!(
                            "joint error {measured:.3e} above bound {bound:.3e} at ({i1},{i2})"
                        )));
                    }
                }
            }
            for i1 in 0..=4usize {
                let red = model
                    .op_matrix(i1, 0)
                    .max_abs_diff(&model.outer.qvnj_matrix(i1));
                if red > 1e-10 {
                    return Err(fail(format!(
                        "joint does not reduce to single at i2 = 0: {red:.3e}"
                    )));
                }
            }
        }
        Ok(format!("worst isometry deviation {worst_iso:.2e}"))
    })
}

/// Gate 10: torus sup norms of the shift calculus and the contraction
/// inequality on normal commuting pairs.
pub fn criterion_shift_norms(seed: u64) -> CriterionResult {
    criterion(10, "shift norms", || {
        use crate::holofun::BivariatePoly;
        let monomial = BivariatePoly::new(vec![
            vec![ZERO, ZERO],
            vec![ZERO, ONE],
        ]);
        let err_mono = (shift_norm_p2(&monomial) - 1.0).abs();
        let one_plus = BivariatePoly::new(vec![vec![ONE], vec![ONE]]);
        let err_affine = (shift_norm_p2(&one_plus) - 2.0).abs();
        if err_mono > 1e-6 || err_affine > 1e-6 {
            return Err(fail(format!(
                "analytic shift norms off: {err_mono:.3e}, {err_affine:.3e}"
            )));
        }
        let mut rng = seeded_rng(seed ^ 0x71);
        let n = 4;
        let q = random_unitary(&mut rng, n);
        let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range_f(0.0, 6.28)).collect();
        let betas: Vec<f64> = (0..n).map(|_| rng.gen_range_f(0.0, 6.28)).collect();
        let t1 = q
            .matmul(&CMatrix::diag(
                &alphas.iter().map(|&a| C64::from_polar(1.0, a)).collect::<Vec<_>>(),
            ))
            .matmul(&q.adjoint());
        let t2 = q
            .matmul(&CMatrix::diag(
                &betas.iter().map(|&b| C64::from_polar(1.0, b)).collect::<Vec<_>>(),
            ))
            .matmul(&q.adjoint());
        let polys = bivariate_poly_corpus(20, 3, seed ^ 0x72, false);
        let mut worst_ratio = 0.0f64;
        for phi in &polys {
            let norm_op = op_norm(&phi.eval_matrices(&t1, &t2));
            let shift = shift_norm_p2(phi);
            if norm_op > shift * (1.0 + 1e-6) {
                return Err(fail(format!(
                    "contraction inequality violated: {norm_op:.6} > {shift:.6}"
                )));
            }
            worst_ratio = worst_ratio.max(norm_op / shift);
        }
        Ok(format!("worst operator/shift ratio {worst_ratio:.6}"))
    })
}

/// Gate 11: transfer coherence. Normal commuting pairs have all constants
/// within 1.05 of the spectral value on both sides; the pinned non-normal
/// corpus stays within 5% of its committed baselines.
pub fn criterion_transfer_coherence(seed: u64) -> CriterionResult {
    criterion(11, "transfer coherence", || {
        let theta = 1.40;
        let cases: Vec<(SpectralConfig, f64)> = vec![
            (SpectralConfig::from_angles(&[0.0], 0.4, 0.8)?, 0.55),
            (
                SpectralConfig::from_angles(&[0.0, std::f64::consts::PI], 0.45, 0.75)?,
                0.55,
            ),
        ];
        let mut details = String::new();
        for (case_idx, (cfg, u)) in cases.iter().enumerate() {
            let mut rng = seeded_rng(seed ^ (0x81 + case_idx as u64));
            let (t1, t2) = random_commuting_pair(&mut rng, cfg, 4, true);
            let corpus = default_transfer_corpus(cfg, theta, 8, seed ^ 0x82)?;
            let report = transfer_verify(&t1, &t2, cfg, *u, theta, &corpus)?;
            if report.k_ritt > 1.05 {
                return Err(fail(format!(
                    "normal pair: disc-side constant {:.4} > 1.05",
                    report.k_ritt
                )));
            }
            for (i, row) in report.k_sect.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if *v > 1.05 {
                        return Err(fail(format!(
                            "normal pair: sector constant [{i}][{j}] = {v:.4} > 1.05"
                        )));
                    }
                }
            }
            details.push_str(&format!(
                "case {case_idx}: ritt {:.4}, sect max {:.4}; ",
                report.k_ritt,
                report
                    .k_sect
                    .iter()
                    .flatten()
                    .cloned()
                    .fold(0.0f64, f64::max)
            ));
        }

        // Pinned non-normal corpus.
        let report = pinned_transfer_case(seed)?;
        if !report.all_finite {
            return Err(fail("non-normal pair produced non-finite constants".into()));
        }
        let pin_path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../configs/pins.json");
        if pin_path.exists() {
            let pins: crate::workbench::TransferPins =
                serde_json::from_str(&std::fs::read_to_string(&pin_path)?)?;
            let diffs =
                crate::workbench::compare_pins(&pins, report.k_ritt, &report.k_sect, report.k_poly);
            if !diffs.is_empty() {
                return Err(fail(format!("pinned baselines drifted: {diffs:?}")));
            }
            details.push_str("pins matched within 5%");
        } else {
            return Err(fail(format!(
                "pinned baselines missing at {}; run `rittlab transfer --pin` to create them",
                pin_path.display()
            )));
        }
        Ok(details)
    })
}

/// The frozen non-normal pair whose constants are pinned as regression
/// baselines; gate 11 and the baseline writer must agree on it exactly.
pub fn pinned_transfer_case(seed: u64) -> Result<crate::transfer::TransferReport> {
    let theta = 1.40;
    let cfg = SpectralConfig::from_angles(&[0.0], 0.4, 0.8)?;
    let mut rng = seeded_rng(seed ^ 0x8f);
    let (t1, t2) = random_commuting_pair(&mut rng, &cfg, 4, false);
    let corpus = default_transfer_corpus(&cfg, theta, 8, seed ^ 0x8e)?;
    transfer_verify(&t1, &t2, &cfg, 0.55, theta, &corpus)
}

/// Gate 12: constructed members pass classification, constructed
/// non-members fail it, without exception.
pub fn criterion_classifier(seed: u64) -> CriterionResult {
    criterion(12, "classifier discrimination", || {
        let configs = [cfg_single(), cfg_two()];
        let mut rng = seeded_rng(seed ^ 0x91);
        let mut count = 0;
        for cfg in &configs {
            for k in 0..25 {
                let op = random_ritt_true(&mut rng, cfg, 4, k % 2 == 0);
                let rep = classify_ritt_e(&op.t, cfg, 12)?;
                if !rep.is_ritt_e {
                    return Err(fail(format!("constructed member misclassified (case {count})")));
                }
                let bad = random_ritt_false(&mut rng, cfg, 4);
                let rep = classify_ritt_e(&bad, cfg, 12)?;
                if rep.is_ritt_e {
                    return Err(fail(format!(
                        "constructed non-member misclassified (case {count})"
                    )));
                }
                count += 2;
            }
        }
        Ok(format!("{count} constructed cases classified correctly"))
    })
}

// Small extension trait so the suite reads naturally with ChaCha8Rng.
trait RangeExt {
    fn gen_range_f(&mut self, lo: f64, hi: f64) -> f64;
}

impl RangeExt for rand_chacha::ChaCha8Rng {
    fn gen_range_f(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.gen_range(lo..hi)
    }
}

/// Extra stability properties exercised alongside the gates: uniformity of
/// the calculus under the spectral-shift homotopy.
pub fn homotopy_uniformity(seed: u64) -> Result<(f64, f64)> {
    let theta = 1.0;
    let mut rng = seeded_rng(seed);
    let q = random_unitary(&mut rng, 3);
    let eigs = [
        C64::from_polar(0.8, 0.2),
        C64::from_polar(1.5, -0.3),
        C64::from_polar(0.4, 0.1),
    ];
    let a = q.matmul(&CMatrix::diag(&eigs)).matmul(&q.adjoint());
    let funs = sectorial_corpus(theta, 5, seed ^ 0x99);
    let ratio_at = |rho: f64| -> Result<f64> {
        let a_r = a_rho(&a, rho);
        let mut calc = SectorialCalculus::new(&a_r, theta, 1e-8, 1e9)?;
        let mut worst = 0.0f64;
        for f in &funs {
            let v = op_norm(&calc.apply(f)?.value);
            let norm_f = sectorial_sup1(&|z| f.eval(z), theta);
            worst = worst.max(v / norm_f);
        }
        Ok(worst)
    };
    let fine: Vec<f64> = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        .iter()
        .map(|&r| ratio_at(r))
        .collect::<Result<_>>()?;
    let coarse: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&r| ratio_at(r))
        .collect::<Result<_>>()?;
    let max_fine = fine.iter().cloned().fold(0.0f64, f64::max);
    let max_coarse = coarse.iter().cloned().fold(0.0f64, f64::max);
    Ok((max_fine, max_coarse))
}

/// Pair version of the homotopy uniformity measurement.
pub fn homotopy_uniformity_pair(seed: u64) -> Result<(f64, f64)> {
    let theta = 1.0;
    let mut rng = seeded_rng(seed);
    let q = random_unitary(&mut rng, 3);
    let eigs1 = [
        C64::from_polar(0.9, 0.15),
        C64::from_polar(1.4, -0.2),
        C64::from_polar(0.5, 0.05),
    ];
    let eigs2: Vec<C64> = eigs1.iter().map(|&l| l * C64::new(1.2, 0.05)).collect();
    let a1 = q.matmul(&CMatrix::diag(&eigs1)).matmul(&q.adjoint());
    let a2 = q.matmul(&CMatrix::diag(&eigs2)).matmul(&q.adjoint());
    let funs = crate::workbench::sectorial_pair_corpus(theta, 4, seed ^ 0x9a);
    let ratio_at = |rho: f64| -> Result<f64> {
        let a1r = a_rho(&a1, rho);
        let a2r = a_rho(&a2, rho);
        let mut calc = SectorialPairCalculus::new(&a1r, &a2r, theta, theta, 1e-7, 1e8)?;
        let mut worst = 0.0f64;
        for f in &funs {
            let v = op_norm(&calc.apply(f)?.value);
            let norm_f = crate::calculus::sectorial_sup2(&|z1, z2| f.eval(z1, z2), theta);
            worst = worst.max(v / norm_f);
        }
        Ok(worst)
    };
    let fine: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&r| ratio_at(r))
        .collect::<Result<_>>()?;
    let coarse: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&r| ratio_at(r))
        .collect::<Result<_>>()?;
    Ok((
        fine.iter().cloned().fold(0.0f64, f64::max),
        coarse.iter().cloned().fold(0.0f64, f64::max),
    ))
}

/// Kahane-type contraction sanity used by the docs and tests.
pub fn kahane_contraction_holds(seed: u64) -> Result<bool> {
    let mut rng = seeded_rng(seed);
    for p in [2.0, 4.0] {
        for _ in 0..4 {
            let coords: Vec<Vec<C64>> = (0..5)
                .map(|_| crate::workbench::random_vector(&mut rng, 2))
                .collect();
            let block = RademacherBlock {
                coords: coords.clone(),
            };
            let scaled = RademacherBlock {
                coords: coords
                    .iter()
                    .map(|x| x.iter().map(|z| z * C64::new(0.6, 0.0)).collect())
                    .collect(),
            };
            let v0 = rad_norm(&block, p, RadMode::Exact)?.value;
            let v1 = rad_norm(&scaled, p, RadMode::Exact)?.value;
            if v1 > v0 * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
