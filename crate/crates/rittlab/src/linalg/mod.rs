//! Dense complex linear algebra: the oracle layer everything else is
//! checked against.
//!
//! All routines are pure functions of their inputs; scratch space is
//! per-call, so everything here is safe to drive from parallel workers.

mod funm;
mod lu;
mod norms;
mod schur;

pub use funm::frac_power;
pub use lu::{det, lu_factor, rank, solve, LuFactors};
pub use norms::{op_norm, op_norm_lower_bound_p};
pub use schur::{hessenberg, schur, SchurDecomposition};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense row-major complex matrix. Square in most public contracts, but
/// rectangular internally (dilation embeddings are tall).
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// self += c * other, in place.
    pub fn axpy(&mut self, c: C64, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * out.cols..(i + 1) * out.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .fold(ZERO, |acc, t| acc + t)
            })
            .collect()
    }

    /// Matrix power by repeated multiplication; exact for k = 0, 1.
    pub fn pow(&self, k: usize) -> CMatrix {
        assert!(self.is_square());
        let mut out = CMatrix::identity(self.rows);
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }

    /// Max absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max absolute row sum (operator infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Tolerance-based equality; matrices are never compared bitwise.
    pub fn approx_eq(&self, other: &CMatrix, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Evaluate a polynomial with complex coefficients (ascending powers) at
    /// this matrix, by Horner.
    pub fn poly_eval(&self, coeffs: &[C64]) -> CMatrix {
        assert!(self.is_square());
        let n = self.rows;
        let mut acc = CMatrix::zeros(n, n);
        for &c in coeffs.iter().rev() {
            acc = acc.matmul(self);
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// On-disk matrix format: `{ "n": int, "entries": [[[re, im], ...], ...] }`,
/// row-major with `[re, im]` pairs. Shared by every command that reads or
/// writes matrices.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl CMatrix {
    pub fn to_json(&self) -> MatrixJson {
        assert!(self.is_square(), "matrix files hold square matrices");
        MatrixJson {
            n: self.rows,
            entries: (0..self.rows)
                .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &MatrixJson) -> Result<CMatrix> {
        if j.entries.len() != j.n || j.entries.iter().any(|r| r.len() != j.n) {
            return Err(Error::Dimension(format!(
                "matrix file declares n = {} but entries are {}x{:?}",
                j.n,
                j.entries.len(),
                j.entries.first().map(|r| r.len())
            )));
        }
        let m = CMatrix::from_fn(j.n, j.n, |i, k| C64::new(j.entries[i][k][0], j.entries[i][k][1]));
        if !m.is_finite() {
            return Err(Error::InvariantViolation(
                "matrix file contains non-finite entries".into(),
            ));
        }
        Ok(m)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        crate::workbench::write_atomic(path, text.as_bytes())
    }

    pub fn read_file(path: &std::path::Path) -> Result<CMatrix> {
        let text = std::fs::read_to_string(path)?;
        let j: MatrixJson = serde_json::from_str(&text)?;
        CMatrix::from_json(&j)
    }
}

// ---- vector helpers -------------------------------------------------------

pub fn vnorm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm_p(v: &[C64], p: f64) -> f64 {
    if p == 2.0 {
        return vnorm2(v);
    }
    v.iter().map(|z| z.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    // Sesquilinear in the second slot: <a, b> = sum a_i conj(b_i).
    a.iter().zip(b).map(|(x, y)| x * y.conj()).fold(ZERO, |s, t| s + t)
}

pub fn vscale(v: &[C64], c: C64) -> Vec<C64> {
    v.iter().map(|z| z * c).collect()
}

pub fn vadd(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vsub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

// ---- spectra ---------------------------------------------------------------

/// Computed spectrum with a backward-error style residual certificate.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// max over computed pairs of ||Tv - lambda v|| / ||v||, eigenvectors by
    /// inverse iteration.
    pub residual: f64,
}

/// Options for the eigensolver. The iteration cap is per eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub max_iter_per_eig_factor: usize,
    pub residual_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            max_iter_per_eig_factor: 100,
            residual_tol: 1e-7,
        }
    }
}

/// Eigenvalues via Hessenberg reduction + shifted QR, residuals via inverse
/// iteration on the original matrix.
pub fn spectrum(t: &CMatrix) -> Result<Spectrum> {
    spectrum_with(t, EigOptions::default())
}

pub fn spectrum_with(t: &CMatrix, opts: EigOptions) -> Result<Spectrum> {
    assert!(t.is_square(), "spectrum of a non-square matrix");
    let n = t.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
            residual: 0.0,
        });
    }
    let dec = schur(t, opts.max_iter_per_eig_factor * n)?;
    let eigenvalues = dec.t.diagonal();
    let mut residual: f64 = 0.0;
    let scale = t.norm_inf().max(1e-300);
    for &lam in &eigenvalues {
        let v = inverse_iteration_vector(t, lam)?;
        let tv = t.matvec(&v);
        let r = vnorm2(&vsub(&tv, &vscale(&v, lam))) / vnorm2(&v).max(1e-300);
        residual = residual.max(r / scale.max(1.0));
    }
    Ok(Spectrum {
        eigenvalues,
        residual,
    })
}

fn inverse_iteration_vector(t: &CMatrix, lam: C64) -> Result<Vec<C64>> {
    let n = t.nrows();
    // Shift slightly off the eigenvalue so the solve stays well posed.
    let scale = t.norm_inf().max(1.0);
    let shift = lam + C64::new(1e-11 * scale, 1e-12 * scale);
    let mut m = t.scale(-ONE);
    for i in 0..n {
        m[(i, i)] += shift;
    }
    let lu = match lu_factor(&m, 0.0) {
        Ok(lu) => lu,
        Err(_) => {
            // Exactly singular even with the offset; nudge harder.
            let mut m2 = t.scale(-ONE);
            for i in 0..n {
                m2[(i, i)] += lam + C64::new(1e-8 * scale, 1e-8 * scale);
            }
            lu_factor(&m2, 0.0)?
        }
    };
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0, 0.3 * ((i % 7) as f64 - 3.0)))
        .collect();
    for _ in 0..3 {
        let w = lu.solve_vec(&v);
        let nw = vnorm2(&w);
        if !nw.is_finite() || nw == 0.0 {
            break;
        }
        v = vscale(&w, C64::new(1.0 / nw, 0.0));
    }
    Ok(v)
}

/// Resolvent R(z, T) = (zI - T)^{-1} by pivoted LU factorization.
pub fn resolvent(t: &CMatrix, z: C64) -> Result<CMatrix> {
    assert!(t.is_square());
    let n = t.nrows();
    let mut m = t.scale(-ONE);
    for i in 0..n {
        m[(i, i)] += z;
    }
    // Pivot threshold relative to the operator scale distinguishes "z in the
    // spectrum" from benign near-singularity.
    let threshold = 1e-13 * m.norm_inf().max(t.norm_inf()).max(1e-300);
    let lu = lu_factor(&m, threshold)?;
    Ok(lu.solve_mat(&CMatrix::identity(n)))
}
