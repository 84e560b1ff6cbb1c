use super::schur::swap_adjacent;
use super::{rank, schur, CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Principal-branch fractional power A^alpha via Schur form, with the
/// triangular factor handled by a blocked Parlett recurrence. Eigenvalues
/// within 1e-8 of each other are grouped into one block; inside a block the
/// power is evaluated by a binomial series around the cluster mean, which
/// also covers defective (Jordan-type) clusters.
pub fn frac_power(a: &CMatrix, alpha: f64) -> Result<CMatrix> {
    assert!(a.is_square());
    assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive");
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let scale = a.norm_inf().max(1e-300);
    let dec = schur(a, 100 * n)?;
    let mut t = dec.t;
    let mut q = dec.q;
    let zero_tol = 1e-12 * scale.max(1.0);

    for lam in t.diagonal() {
        if lam.norm() > zero_tol && lam.re < 0.0 && lam.im.abs() <= 1e-12 * lam.norm() {
            return Err(Error::BranchViolation(lam));
        }
    }
    if t.diagonal().iter().any(|z| z.norm() <= zero_tol) {
        // Zero must be semisimple: rank(A) == rank(A^2).
        let r1 = rank(a, 1e-10);
        let r2 = rank(&a.matmul(a), 1e-10);
        if r1 != r2 {
            return Err(Error::DefectiveZero);
        }
    }

    let blocks = cluster_and_reorder(&mut t, &mut q, 1e-8 * scale.max(1.0));

    // Diagonal blocks.
    let mut f = CMatrix::zeros(n, n);
    for &(lo, hi) in &blocks {
        let block = sub_block(&t, lo, hi, lo, hi);
        let fb = power_of_cluster_block(&block, alpha, zero_tol)?;
        for i in lo..hi {
            for j in lo..hi {
                f[(i, j)] = fb[(i - lo, j - lo)];
            }
        }
    }

    // Cross blocks by the Parlett recurrence, one superdiagonal of blocks at
    // a time. Divisors are at least the clustering threshold apart.
    let nb = blocks.len();
    for offset in 1..nb {
        for bi in 0..nb - offset {
            let bj = bi + offset;
            let (ilo, ihi) = blocks[bi];
            let (jlo, jhi) = blocks[bj];
            // C = F_II T_IJ - T_IJ F_JJ + sum_{I<K<J} (F_IK T_KJ - T_IK F_KJ)
            let tij = sub_block(&t, ilo, ihi, jlo, jhi);
            let fii = sub_block(&f, ilo, ihi, ilo, ihi);
            let fjj = sub_block(&f, jlo, jhi, jlo, jhi);
            let mut c = fii.matmul(&tij).sub(&tij.matmul(&fjj));
            for bk in bi + 1..bj {
                let (klo, khi) = blocks[bk];
                let fik = sub_block(&f, ilo, ihi, klo, khi);
                let tkj = sub_block(&t, klo, khi, jlo, jhi);
                let tik = sub_block(&t, ilo, ihi, klo, khi);
                let fkj = sub_block(&f, klo, khi, jlo, jhi);
                c = c.add(&fik.matmul(&tkj)).sub(&tik.matmul(&fkj));
            }
            let x = solve_triangular_sylvester(
                &sub_block(&t, ilo, ihi, ilo, ihi),
                &sub_block(&t, jlo, jhi, jlo, jhi),
                &c,
            );
            for i in 0..ihi - ilo {
                for j in 0..jhi - jlo {
                    f[(ilo + i, jlo + j)] = x[(i, j)];
                }
            }
        }
    }

    Ok(q.matmul(&f).matmul(&q.adjoint()))
}

fn sub_block(m: &CMatrix, rlo: usize, rhi: usize, clo: usize, chi: usize) -> CMatrix {
    CMatrix::from_fn(rhi - rlo, chi - clo, |i, j| m[(rlo + i, clo + j)])
}

/// Group the diagonal of a triangular Schur factor into clusters (absolute
/// gap below `tol` chains entries together) and reorder so clusters are
/// contiguous. Returns the block ranges in diagonal order.
fn cluster_and_reorder(t: &mut CMatrix, q: &mut CMatrix, tol: f64) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let eigs = t.diagonal();
    // Union-find over eigenvalue indices.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != c {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    // Rank clusters by first appearance along the diagonal.
    let mut rank_of_root: Vec<Option<usize>> = vec![None; n];
    let mut next_rank = 0usize;
    let mut rank: Vec<usize> = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        let rk = *rank_of_root[r].get_or_insert_with(|| {
            let v = next_rank;
            next_rank += 1;
            v
        });
        rank[i] = rk;
    }
    // Bubble clusters into contiguous position with unitary adjacent swaps.
    loop {
        let mut swapped = false;
        for k in 0..n.saturating_sub(1) {
            if rank[k] > rank[k + 1] {
                swap_adjacent(t, q, k);
                rank.swap(k, k + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let mut blocks = Vec::new();
    let mut lo = 0;
    for k in 1..=n {
        if k == n || rank[k] != rank[lo] {
            blocks.push((lo, k));
            lo = k;
        }
    }
    blocks
}

/// z^alpha on a triangular block whose eigenvalues all sit within the
/// clustering tolerance of each other.
fn power_of_cluster_block(block: &CMatrix, alpha: f64, zero_tol: f64) -> Result<CMatrix> {
    let p = block.nrows();
    let mu = block
        .diagonal()
        .iter()
        .fold(ZERO, |acc, z| acc + z)
        / C64::new(p as f64, 0.0);
    if mu.norm() <= zero_tol {
        // Semisimple zero cluster: the block itself must vanish.
        let mut off = 0.0f64;
        for i in 0..p {
            for j in 0..p {
                off = off.max(block[(i, j)].norm());
            }
        }
        if off > 1e-8_f64.max(10.0 * zero_tol) {
            return Err(Error::DefectiveZero);
        }
        return Ok(CMatrix::zeros(p, p));
    }
    // (mu I + M)^alpha = mu^alpha * sum_k binom(alpha, k) (M / mu)^k.
    // M/mu is "tiny diagonal + nilpotent": its spectral radius is below
    // tol/|mu| so the series converges; transients die after p terms.
    let minv = C64::new(1.0, 0.0) / mu;
    let mut ratio = block.clone();
    for i in 0..p {
        ratio[(i, i)] -= mu;
    }
    let ratio = ratio.scale(minv);
    let mut term = CMatrix::identity(p);
    let mut acc = CMatrix::identity(p);
    let mut coeff = C64::new(1.0, 0.0);
    let mut k = 0usize;
    loop {
        coeff *= C64::new((alpha - k as f64) / (k as f64 + 1.0), 0.0);
        term = term.matmul(&ratio);
        k += 1;
        let upd = term.scale(coeff);
        acc = acc.add(&upd);
        let small = upd.max_abs() <= 1e-17 * acc.max_abs().max(1.0);
        if small && k > p {
            break;
        }
        if k > 500 {
            return Err(Error::NoConvergence(
                "cluster-block binomial series for the fractional power".into(),
            ));
        }
    }
    Ok(acc.scale(mu.powf(alpha)))
}

/// Solve T1 X - X T2 = C with T1, T2 upper triangular and spectra separated.
fn solve_triangular_sylvester(t1: &CMatrix, t2: &CMatrix, c: &CMatrix) -> CMatrix {
    let p = t1.nrows();
    let r = t2.nrows();
    let mut x = CMatrix::zeros(p, r);
    for i in (0..p).rev() {
        for j in 0..r {
            let mut rhs = c[(i, j)];
            for k in i + 1..p {
                rhs -= t1[(i, k)] * x[(k, j)];
            }
            for k in 0..j {
                rhs += x[(i, k)] * t2[(k, j)];
            }
            x[(i, j)] = rhs / (t1[(i, i)] - t2[(j, j)]);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{resolvent, ONE};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_sqrt() {
        let f = frac_power(&CMatrix::identity(3), 0.5).unwrap();
        assert!(f.approx_eq(&CMatrix::identity(3), 1e-13));
    }

    #[test]
    fn scalar_sqrt() {
        let f = frac_power(&CMatrix::diag(&[c(4.0, 0.0)]), 0.5).unwrap();
        assert!((f[(0, 0)] - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn jordan_block_sqrt() {
        let a = CMatrix::from_rows(vec![vec![ONE, ONE], vec![ZERO, ONE]]);
        let f = frac_power(&a, 0.5).unwrap();
        let expect = CMatrix::from_rows(vec![vec![ONE, c(0.5, 0.0)], vec![ZERO, ONE]]);
        assert!(f.approx_eq(&expect, 1e-12), "{f:?}");
        assert!(f.matmul(&f).approx_eq(&a, 1e-12));
    }

    #[test]
    fn semigroup_law() {
        let mut rng = crate::workbench::seeded_rng(31);
        for _ in 0..5 {
            // Shift spectra well into the right half plane.
            let mut a = crate::workbench::random_matrix(&mut rng, 4, 0.3);
            for i in 0..4 {
                a[(i, i)] += c(2.0, 0.0);
            }
            let f1 = frac_power(&a, 0.4).unwrap();
            let f2 = frac_power(&a, 0.9).unwrap();
            let f3 = frac_power(&a, 1.3).unwrap();
            assert!(f1.matmul(&f2).approx_eq(&f3, 1e-8));
        }
    }

    #[test]
    fn branch_violation_detected() {
        let a = CMatrix::diag(&[c(-1.0, 0.0), c(2.0, 0.0)]);
        match frac_power(&a, 0.5) {
            Err(Error::BranchViolation(_)) => {}
            other => panic!("expected BranchViolation, got {other:?}"),
        }
    }

    #[test]
    fn defective_zero_detected() {
        let a = CMatrix::from_rows(vec![vec![ZERO, ONE], vec![ZERO, ZERO]]);
        match frac_power(&a, 0.5) {
            Err(Error::DefectiveZero) => {}
            other => panic!("expected DefectiveZero, got {other:?}"),
        }
    }

    #[test]
    fn semisimple_zero_allowed() {
        // diag(0, 0.7) conjugated: zero eigenvalue, semisimple.
        let mut rng = crate::workbench::seeded_rng(77);
        let p = crate::workbench::random_well_conditioned(&mut rng, 2, 0.2);
        let pinv = crate::linalg::solve(&p, &CMatrix::identity(2)).unwrap();
        let a = p.matmul(&CMatrix::diag(&[ZERO, c(0.7, 0.0)])).matmul(&pinv);
        let f = frac_power(&a, 0.5).unwrap();
        assert!(f.matmul(&f).approx_eq(&a, 1e-9));
    }

    #[test]
    fn balakrishnan_integral_cross_check() {
        // A^alpha = sin(alpha pi)/pi * int_0^inf t^{alpha-1} (tI + A)^{-1} A dt
        // for 0 < alpha < 1, quadrature over geometric panels.
        let alpha = 0.5;
        let a = CMatrix::from_rows(vec![
            vec![c(1.2, 0.1), c(0.3, -0.2)],
            vec![ZERO, c(0.8, 0.0)],
        ]);
        let direct = frac_power(&a, alpha).unwrap();

        let (nodes, weights) = gauss_legendre_16();
        let mut acc = CMatrix::zeros(2, 2);
        let mut lo = 1e-16f64;
        while lo < 1e14 {
            let hi = lo * 2.0;
            for (x, w) in nodes.iter().zip(&weights) {
                let t = lo + (hi - lo) * 0.5 * (x + 1.0);
                let wt = w * (hi - lo) * 0.5;
                let r = resolvent(&a.scale(-ONE), c(t, 0.0)).unwrap(); // (tI + A)^{-1}
                acc.axpy(c(wt * t.powf(alpha - 1.0), 0.0), &r.matmul(&a));
            }
            lo = hi;
        }
        let integral = acc.scale(c((alpha * std::f64::consts::PI).sin() / std::f64::consts::PI, 0.0));
        assert!(
            direct.max_abs_diff(&integral) < 1e-6,
            "{}",
            direct.max_abs_diff(&integral)
        );
    }

    fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
        let (n, w) = crate::regions::gauss_legendre_nodes(16);
        (n, w)
    }
}
