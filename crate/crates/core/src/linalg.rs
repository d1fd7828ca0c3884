//! Small dense helpers shared by the algebraic modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `Re Tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Worst `|M_ij - conj(M_ji)|` and where it occurs.
pub fn hermitian_deviation(m: &CMatrix) -> (f64, usize, usize) {
    let n = m.nrows();
    let mut worst = (0.0, 0, 0);
    for i in 0..n {
        for j in i..n {
            let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
            if dev > worst.0 {
                worst = (dev, i, j);
            }
        }
    }
    worst
}

/// Validates Hermiticity against `rel_tol * max|M|` and returns `(M + M^dagger)/2`.
pub fn symmetrized_hermitian(m: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    ensure_square(m)?;
    let (dev, row, col) = hermitian_deviation(m);
    if dev > rel_tol * max_abs(m) {
        return Err(Error::NotHermitian {
            row,
            col,
            deviation: dev,
        });
    }
    Ok((m + m.adjoint()).scale(0.5))
}

pub fn is_positive_semidefinite(m: &CMatrix, tol: f64) -> bool {
    let shifted = m + identity(m.nrows()).scale(tol);
    shifted.cholesky().is_some()
}

/// Power sums `Tr(M^j)` for `j = 1..=count`.
pub fn power_traces(m: &CMatrix, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut power = m.clone();
    for j in 1..=count {
        out.push(trace(&power).re);
        if j < count {
            power = &power * m;
        }
    }
    out
}
