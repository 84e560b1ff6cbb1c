use super::{CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, PA = LU packed in one matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

/// Factor a square matrix. `pivot_threshold` is an absolute floor on pivot
/// magnitude; a pivot below it aborts with `SingularResolvent` (callers pick
/// the scale). Pass 0.0 to only reject exactly-zero pivots.
pub fn lu_factor(a: &CMatrix, pivot_threshold: f64) -> Result<LuFactors> {
    assert!(a.is_square());
    let n = a.nrows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut swaps = 0;
    for k in 0..n {
        // Partial pivot on column k.
        let mut best = k;
        let mut best_mag = lu[(k, k)].norm();
        for i in k + 1..n {
            let mag = lu[(i, k)].norm();
            if mag > best_mag {
                best = i;
                best_mag = mag;
            }
        }
        if best_mag <= pivot_threshold || best_mag == 0.0 {
            return Err(Error::SingularResolvent {
                pivot: best_mag,
                threshold: pivot_threshold,
            });
        }
        if best != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(best, j)];
                lu[(best, j)] = tmp;
            }
            perm.swap(k, best);
            swaps += 1;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let m = lu[(i, k)] / pivot;
            lu[(i, k)] = m;
            if m == ZERO {
                continue;
            }
            for j in k + 1..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= m * t;
            }
        }
    }
    Ok(LuFactors { lu, perm, swaps })
}

impl LuFactors {
    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.nrows();
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward substitution (unit lower).
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &CMatrix) -> CMatrix {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n);
        let mut out = CMatrix::zeros(n, b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve_vec(&b.col(j));
            out.set_col(j, &col);
        }
        out
    }

    pub fn determinant(&self) -> C64 {
        let mut d = if self.swaps % 2 == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        };
        for i in 0..self.lu.nrows() {
            d *= self.lu[(i, i)];
        }
        d
    }
}

pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let scale = a.norm_inf().max(1e-300);
    Ok(lu_factor(a, 1e-15 * scale)?.solve_mat(b))
}

pub fn det(a: &CMatrix) -> Result<C64> {
    match lu_factor(a, 0.0) {
        Ok(lu) => Ok(lu.determinant()),
        Err(Error::SingularResolvent { .. }) => Ok(ZERO),
        Err(e) => Err(e),
    }
}

/// Numerical rank via Householder QR with column pivoting; threshold is
/// relative to the largest diagonal of R.
pub fn rank(a: &CMatrix, rel_tol: f64) -> usize {
    let m = a.nrows();
    let n = a.ncols();
    let mut r = a.clone();
    let mut col_norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| r[(i, j)].norm_sqr()).sum::<f64>())
        .collect();
    let kmax = m.min(n);
    let mut diag = Vec::with_capacity(kmax);
    for k in 0..kmax {
        // Pivot the column with the largest remaining norm to position k.
        let (jbest, _) = col_norms
            .iter()
            .enumerate()
            .skip(k)
            .fold((k, -1.0), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        if jbest != k {
            for i in 0..m {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, jbest)];
                r[(i, jbest)] = tmp;
            }
            col_norms.swap(k, jbest);
        }
        // Householder reflector for column k below row k.
        let x: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        let xnorm = super::vnorm2(&x);
        if xnorm == 0.0 {
            diag.push(0.0);
            continue;
        }
        let mut v = x.clone();
        let phase = if v[0] == ZERO {
            C64::new(1.0, 0.0)
        } else {
            v[0] / v[0].norm()
        };
        v[0] += phase * xnorm;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vnorm2 > 0.0 {
            let beta = 2.0 / vnorm2;
            for j in k..n {
                let mut dot = ZERO;
                for i in k..m {
                    dot += v[i - k].conj() * r[(i, j)];
                }
                dot *= C64::new(beta, 0.0);
                for i in k..m {
                    let t = v[i - k];
                    r[(i, j)] -= dot * t;
                }
            }
        }
        diag.push(r[(k, k)].norm());
        for (j, cn) in col_norms.iter_mut().enumerate().skip(k + 1) {
            *cn -= r[(k, j)].norm_sqr();
            if *cn < 0.0 {
                *cn = 0.0;
            }
        }
    }
    let top = diag.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    diag.iter().filter(|&&d| d > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    #[test]
    fn solve_small_system() {
        let a = CMatrix::from_rows(vec![
            vec![C64::new(2.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(5.0, 0.0), C64::new(3.0, 0.0)],
        ]);
        let b = CMatrix::from_rows(vec![vec![C64::new(4.0, 0.0)], vec![C64::new(11.0, 0.0)]]);
        let x = solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - ONE).norm() < 1e-12);
        assert!((x[(1, 0)] - C64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn determinant_diag() {
        let a = CMatrix::diag(&[C64::new(2.0, 0.0), C64::new(0.0, 3.0)]);
        let d = det(&a).unwrap();
        assert!((d - C64::new(0.0, 6.0)).norm() < 1e-14);
    }

    #[test]
    fn rank_of_projector_like() {
        let a = CMatrix::from_rows(vec![
            vec![ONE, ONE, ZERO],
            vec![ZERO, ZERO, ZERO],
            vec![ONE, ONE, ZERO],
        ]);
        assert_eq!(rank(&a, 1e-10), 1);
        assert_eq!(rank(&CMatrix::identity(3), 1e-10), 3);
        assert_eq!(rank(&CMatrix::zeros(3, 3), 1e-10), 0);
    }
}
