use super::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Unitary Schur decomposition A = Q T Q^* with T upper triangular.
#[derive(Debug, Clone)]
pub struct SchurDecomposition {
    pub t: CMatrix,
    pub q: CMatrix,
}

/// Reduce to upper Hessenberg form by Householder reflectors: returns (H, Q)
/// with Q^* A Q = H.
pub fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    assert!(a.is_square());
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        // Reflector annihilating h[k+2.., k].
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = super::vnorm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let mut v = x;
        let phase = if v[0] == ZERO { ONE } else { v[0] / v[0].norm() };
        v[0] += phase * xnorm;
        let vsq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vsq == 0.0 {
            continue;
        }
        let beta = 2.0 / vsq;
        // h <- P h, rows k+1..n
        for j in 0..n {
            let mut dot = ZERO;
            for i in k + 1..n {
                dot += v[i - k - 1].conj() * h[(i, j)];
            }
            dot *= C64::new(beta, 0.0);
            for i in k + 1..n {
                let t = v[i - k - 1];
                h[(i, j)] -= dot * t;
            }
        }
        // h <- h P, columns k+1..n
        for i in 0..n {
            let mut dot = ZERO;
            for j in k + 1..n {
                dot += h[(i, j)] * v[j - k - 1];
            }
            dot *= C64::new(beta, 0.0);
            for j in k + 1..n {
                let t = v[j - k - 1].conj();
                h[(i, j)] -= dot * t;
            }
        }
        // q <- q P
        for i in 0..n {
            let mut dot = ZERO;
            for j in k + 1..n {
                dot += q[(i, j)] * v[j - k - 1];
            }
            dot *= C64::new(beta, 0.0);
            for j in k + 1..n {
                let t = v[j - k - 1].conj();
                q[(i, j)] -= dot * t;
            }
        }
        // Clean the annihilated entries.
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Complex Givens rotation G = [[c, s], [-conj(s), c]] (c real) with
/// G [a; b] = [r; 0].
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let h = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.norm() / h;
    let s = (a / a.norm()) * b.conj() / h;
    (c, s)
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> C64 {
    if hi < 2 {
        return h[(hi - 1, hi - 1)];
    }
    let a = h[(hi - 2, hi - 2)];
    let b = h[(hi - 2, hi - 1)];
    let c = h[(hi - 1, hi - 2)];
    let d = h[(hi - 1, hi - 1)];
    let tr = a + d;
    let disc = (tr * tr - (a * d - b * c) * C64::new(4.0, 0.0)).sqrt();
    let l1 = (tr + disc) * C64::new(0.5, 0.0);
    let l2 = (tr - disc) * C64::new(0.5, 0.0);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Schur form by explicitly shifted QR iteration with deflation.
/// `max_iter_per_eig` caps the sweeps spent on any single eigenvalue.
pub fn schur(a: &CMatrix, max_iter_per_eig: usize) -> Result<SchurDecomposition> {
    assert!(a.is_square());
    let n = a.nrows();
    let (mut h, mut q) = hessenberg(a);
    let eps = f64::EPSILON;
    let scale = h.norm_inf().max(1e-300);
    let mut hi = n;
    let mut stalled = 0usize;
    while hi > 1 {
        // Deflate negligible subdiagonals.
        for k in 1..hi {
            let mag = h[(k, k - 1)].norm();
            let local = h[(k - 1, k - 1)].norm() + h[(k, k)].norm();
            if mag <= eps * local.max(eps * scale) {
                h[(k, k - 1)] = ZERO;
            }
        }
        if h[(hi - 1, hi - 2)] == ZERO {
            hi -= 1;
            stalled = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && h[(lo, lo - 1)] != ZERO {
            lo -= 1;
        }
        let mu = if stalled > 0 && stalled % 12 == 0 {
            // Exceptional shift to break slow cycles.
            h[(hi - 1, hi - 1)] + C64::new(1.5 * h[(hi - 1, hi - 2)].norm(), 0.0)
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_step(&mut h, &mut q, lo, hi, mu);
        stalled += 1;
        if stalled > max_iter_per_eig {
            return Err(Error::NoConvergence(format!(
                "QR iteration cap {max_iter_per_eig} exceeded at block ending {hi}"
            )));
        }
    }
    // Zero the strict lower triangle (rounding residue below deflation tol).
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(SchurDecomposition { t: h, q })
}

/// One explicitly shifted QR sweep on the active window [lo, hi).
fn qr_step(h: &mut CMatrix, q: &mut CMatrix, lo: usize, hi: usize, mu: C64) {
    let n = h.nrows();
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
    let mut x = h[(lo, lo)] - mu;
    let mut y = h[(lo + 1, lo)];
    for k in lo..hi - 1 {
        let (c, s) = givens(x, y);
        rots.push((c, s));
        let cc = C64::new(c, 0.0);
        // Earlier rotations of this sweep spread fill across the whole lower
        // window; the right pass cancels it, so rotate full window rows.
        for col in lo..n {
            let a = h[(k, col)];
            let b = h[(k + 1, col)];
            h[(k, col)] = cc * a + s * b;
            h[(k + 1, col)] = -s.conj() * a + cc * b;
        }
        if k + 2 < hi {
            // Next pair in the shifted matrix: the diagonal of (H - mu I)
            // after this row rotation carries the shift scaled by c.
            x = h[(k + 1, k + 1)] - cc * mu;
            y = h[(k + 2, k + 1)];
        }
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let cc = C64::new(c, 0.0);
        for row in 0..hi {
            let a = h[(row, k)];
            let b = h[(row, k + 1)];
            h[(row, k)] = cc * a + s.conj() * b;
            h[(row, k + 1)] = -s * a + cc * b;
        }
        for row in 0..n {
            let a = q[(row, k)];
            let b = q[(row, k + 1)];
            q[(row, k)] = cc * a + s.conj() * b;
            q[(row, k + 1)] = -s * a + cc * b;
        }
    }
    // Rounding residue below the first subdiagonal; the iteration never
    // reads it, discard to keep the array Hessenberg.
    for i in lo + 2..hi {
        for j in lo..i - 1 {
            h[(i, j)] = ZERO;
        }
    }
}

/// Swap the adjacent diagonal entries k, k+1 of a triangular T by a unitary
/// similarity, updating Q alongside.
pub(crate) fn swap_adjacent(t: &mut CMatrix, q: &mut CMatrix, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    // Eigenvector of [[a, b], [0, d]] for eigenvalue d is [b, d - a].
    let x0 = b;
    let x1 = d - a;
    let nx = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if nx == 0.0 {
        return; // identical entries; nothing to move
    }
    let u0 = x0 / nx;
    let u1 = x1 / nx;
    // Unitary U = [[u0, -conj(u1)], [u1, conj(u0)]]; U^* B U is triangular
    // with the diagonal swapped.
    let n = t.nrows();
    // t <- U^* t (rows k, k+1) then t <- t U (cols k, k+1); same for q cols.
    for col in 0..n {
        let r0 = t[(k, col)];
        let r1 = t[(k + 1, col)];
        t[(k, col)] = u0.conj() * r0 + u1.conj() * r1;
        t[(k + 1, col)] = -u1 * r0 + u0 * r1;
    }
    for row in 0..n {
        let c0 = t[(row, k)];
        let c1 = t[(row, k + 1)];
        t[(row, k)] = c0 * u0 + c1 * u1;
        t[(row, k + 1)] = -c0 * u1.conj() + c1 * u0.conj();
    }
    for row in 0..q.nrows() {
        let c0 = q[(row, k)];
        let c1 = q[(row, k + 1)];
        q[(row, k)] = c0 * u0 + c1 * u1;
        q[(row, k + 1)] = -c0 * u1.conj() + c1 * u0.conj();
    }
    t[(k + 1, k)] = ZERO;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(dec: &SchurDecomposition) -> CMatrix {
        dec.q.matmul(&dec.t).matmul(&dec.q.adjoint())
    }

    fn unitary_defect(q: &CMatrix) -> f64 {
        q.adjoint()
            .matmul(q)
            .max_abs_diff(&CMatrix::identity(q.nrows()))
    }

    #[test]
    fn schur_reconstructs_random() {
        let mut rng = crate::workbench::seeded_rng(11);
        for n in [1usize, 2, 3, 6, 10] {
            let a = crate::workbench::random_matrix(&mut rng, n, 1.0);
            let dec = schur(&a, 100 * n.max(1)).unwrap();
            assert!(unitary_defect(&dec.q) < 1e-12, "n = {n}");
            assert!(
                reconstruct(&dec).max_abs_diff(&a) < 1e-10 * a.norm_inf().max(1.0),
                "n = {n}"
            );
            // Strictly lower part is zero.
            for i in 0..n {
                for j in 0..i {
                    assert_eq!(dec.t[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn schur_similarity_invariance_of_eigenvalues() {
        let mut rng = crate::workbench::seeded_rng(5);
        let a = crate::workbench::random_matrix(&mut rng, 5, 1.0);
        let p = crate::workbench::random_well_conditioned(&mut rng, 5, 0.3);
        let pinv = crate::linalg::solve(&p, &CMatrix::identity(5)).unwrap();
        let b = p.matmul(&a).matmul(&pinv);
        let mut ea = schur(&a, 500).unwrap().t.diagonal();
        let mut eb = schur(&b, 500).unwrap().t.diagonal();
        let key = |z: &C64| (z.re * 1e6).round() as i64;
        ea.sort_by_key(key);
        eb.sort_by_key(key);
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).norm() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn swap_moves_eigenvalues() {
        let mut t = CMatrix::from_rows(vec![
            vec![C64::new(2.0, 0.0), C64::new(5.0, 1.0)],
            vec![ZERO, C64::new(-1.0, 0.5)],
        ]);
        let orig = t.clone();
        let mut q = CMatrix::identity(2);
        swap_adjacent(&mut t, &mut q, 0);
        assert!((t[(0, 0)] - C64::new(-1.0, 0.5)).norm() < 1e-12);
        assert!((t[(1, 1)] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(t[(1, 0)], ZERO);
        let back = q.matmul(&t).matmul(&q.adjoint());
        assert!(back.max_abs_diff(&orig) < 1e-12);
    }
}
