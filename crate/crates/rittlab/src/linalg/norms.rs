use super::{vnorm2, vnorm_p, vscale, CMatrix, C64, ZERO};

/// Spectral norm (p = 2): largest singular value by power iteration on T*T
/// to relative tolerance 1e-10.
pub fn op_norm(t: &CMatrix) -> f64 {
    if t.nrows() == 0 || t.ncols() == 0 {
        return 0.0;
    }
    let gram = t.adjoint().matmul(t);
    let n = gram.nrows();
    // Deterministic start with energy in every direction.
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0, 0.17 * ((i % 5) as f64 - 2.0)))
        .collect();
    let nv = vnorm2(&v);
    v = vscale(&v, C64::new(1.0 / nv, 0.0));
    let mut lambda = 0.0f64;
    for _ in 0..20_000 {
        let w = gram.matvec(&v);
        let nw = vnorm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let new_lambda = nw; // Rayleigh quotient for normalized v against PSD gram
        v = vscale(&w, C64::new(1.0 / nw, 0.0));
        if (new_lambda - lambda).abs() <= 1e-10 * new_lambda.max(1e-300) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.sqrt()
}

/// Certified lower bound for the operator p-norm (finite p >= 1), maximizing
/// ||Tx||_p / ||x||_p over coordinate starts, mixed starts and nonlinear
/// power iterations. Every candidate evaluated is feasible, so the returned
/// value never exceeds the true norm.
pub fn op_norm_lower_bound_p(t: &CMatrix, p: f64) -> f64 {
    assert!(p >= 1.0 && p.is_finite());
    if p == 2.0 {
        return op_norm(t);
    }
    let n = t.ncols();
    let q = if p > 1.0 { p / (p - 1.0) } else { f64::INFINITY };
    let ratio = |x: &[C64]| -> f64 {
        let nx = vnorm_p(x, p);
        if nx == 0.0 {
            0.0
        } else {
            vnorm_p(&t.matvec(x), p) / nx
        }
    };
    // Duality map J_r(v)_i = |v_i|^{r-1} * phase(v_i).
    let dual_map = |v: &[C64], r: f64| -> Vec<C64> {
        v.iter()
            .map(|z| {
                let m = z.norm();
                if m == 0.0 {
                    ZERO
                } else {
                    (z / m) * m.powf(r - 1.0)
                }
            })
            .collect()
    };
    let mut best = 0.0f64;
    let mut starts: Vec<Vec<C64>> = Vec::new();
    for j in 0..n {
        let mut e = vec![ZERO; n];
        e[j] = C64::new(1.0, 0.0);
        starts.push(e);
    }
    let mut rng = crate::workbench::seeded_rng(0x9e3779b9);
    for _ in 0..8 {
        starts.push(crate::workbench::random_vector(&mut rng, n));
    }
    for start in starts {
        let mut x = start;
        let mut last = 0.0;
        // Nonlinear power iteration for p-norms; each step stays feasible.
        for _ in 0..60 {
            let r = ratio(&x);
            best = best.max(r);
            if (r - last).abs() <= 1e-9 * r.max(1e-300) {
                break;
            }
            last = r;
            let y = t.matvec(&x);
            let jy = dual_map(&y, p);
            let g = t.adjoint().matvec(&jy);
            let xnew = if q.is_finite() {
                dual_map(&g, q)
            } else {
                // p = 1: steer all mass onto the largest coordinate.
                let (jmax, _) = g
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |acc, (j, z)| {
                        if z.norm() > acc.1 {
                            (j, z.norm())
                        } else {
                            acc
                        }
                    });
                let mut e = vec![ZERO; n];
                e[jmax] = if g[jmax] == ZERO {
                    C64::new(1.0, 0.0)
                } else {
                    g[jmax] / g[jmax].norm()
                };
                e
            };
            let nx = vnorm_p(&xnew, p);
            if nx == 0.0 {
                break;
            }
            x = vscale(&xnew, C64::new(1.0 / nx, 0.0));
        }
        best = best.max(ratio(&x));
    }
    best
}
