//! Independent reference computations for verification: a cyclic Jacobi
//! eigensolver and brute-force permutation bounds. Nothing on the main
//! extremal path calls into this module.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::su_algebra::HERMITICITY_TOL;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
    /// `max_i |H v_i - e_i v_i|`.
    pub residual: f64,
}

/// Cyclic Jacobi on a real symmetric matrix. Returns eigenvalues and the
/// accumulated rotation, or the off-diagonal norm on failure.
fn jacobi_symmetric(mut a: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let off = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..MAX_SWEEPS {
        if off(&a) <= f64::EPSILON * scale * 1e-2 {
            return Ok((a.diagonal(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let off_diagonal = off(&a);
    if off_diagonal <= 1e-12 * scale {
        Ok((a.diagonal(), v))
    } else {
        Err(Error::NoConvergence { off_diagonal })
    }
}

/// Full spectrum of a Hermitian matrix through its real embedding
/// `[[A, -B], [B, A]]`, in which every eigenvalue appears twice.
pub fn eigen_oracle(m: &CMatrix) -> Result<OracleSpectrum> {
    let h = linalg::symmetrized_hermitian(m, HERMITICITY_TOL)?;
    let d = h.nrows();
    let embed = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let (values, vectors) = jacobi_symmetric(embed)?;
    let mut order: Vec<usize> = (0..2 * d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for &idx in &order {
        if basis.len() == d {
            break;
        }
        let col = vectors.column(idx);
        let mut z = DVector::from_fn(d, |i, _| Complex64::new(col[i], col[i + d]));
        for _ in 0..2 {
            for u in &basis {
                let p = u.dotc(&z);
                z -= u * p;
            }
        }
        let norm = z.norm();
        if norm > 0.5 {
            basis.push(z / Complex64::new(norm, 0.0));
            eigenvalues.push(values[idx]);
        }
    }
    let eigenvectors = CMatrix::from_columns(&basis);
    let residual = (0..d)
        .map(|i| {
            let v = eigenvectors.column(i);
            (&h * v - v * Complex64::new(eigenvalues[i], 0.0)).norm()
        })
        .fold(0.0, f64::max);
    Ok(OracleSpectrum {
        eigenvalues,
        eigenvectors,
        residual,
    })
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

fn check_probability(gamma: &[f64]) -> Result<()> {
    let sum: f64 = gamma.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidProbabilityVector(format!("entries sum to {sum}")));
    }
    if let Some(neg) = gamma.iter().find(|&&g| g < -1e-10) {
        return Err(Error::InvalidProbabilityVector(format!("negative entry {neg}")));
    }
    Ok(())
}

/// Bounds on `Tr(H rho)` over states with spectrum `rho_spec`: pairing the
/// spectra in opposite and in equal order.
pub fn trace_bounds(h_spec: &[f64], rho_spec: &[f64]) -> Result<(f64, f64)> {
    if h_spec.len() != rho_spec.len() {
        return Err(Error::DimensionMismatch {
            expected: h_spec.len(),
            found: rho_spec.len(),
        });
    }
    check_probability(rho_spec)?;
    let eps = sorted_desc(h_spec);
    let gamma = sorted_desc(rho_spec);
    let upper = eps.iter().zip(&gamma).map(|(e, g)| e * g).sum();
    let lower = eps.iter().rev().zip(&gamma).map(|(e, g)| e * g).sum();
    Ok((lower, upper))
}

/// Every `sum_i e_i g_pi(i)` over permutations `pi`, ascending.
pub fn all_permutation_means(h_spec: &[f64], rho_spec: &[f64]) -> Result<Vec<f64>> {
    if h_spec.len() != rho_spec.len() {
        return Err(Error::DimensionMismatch {
            expected: h_spec.len(),
            found: rho_spec.len(),
        });
    }
    let mut out: Vec<f64> = rho_spec
        .iter()
        .permutations(rho_spec.len())
        .map(|p| h_spec.iter().zip(p).map(|(e, g)| e * g).sum())
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Distinct values of [`all_permutation_means`], merged within a relative
/// `1e-12`.
pub fn permutation_means(h_spec: &[f64], rho_spec: &[f64]) -> Result<Vec<f64>> {
    let all = all_permutation_means(h_spec, rho_spec)?;
    let scale = h_spec.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        if out.last().is_none_or(|last| (v - last).abs() > 1e-12 * scale) {
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn real(d: usize, entries: &[f64]) -> CMatrix {
        CMatrix::from_iterator(d, d, entries.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    #[test]
    fn diagonal_matrix() {
        let s = eigen_oracle(&real(2, &[1.0, 0.0, 0.0, 3.0])).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn complex_entries() {
        let mut m = real(2, &[0.0; 4]);
        m[(0, 1)] = Complex64::new(0.0, -1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        let s = eigen_oracle(&m).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], -1.0, epsilon = 1e-14);
        assert!(s.residual < 1e-13);
        let u = &s.eigenvectors;
        assert!(linalg::max_abs(&(u.adjoint() * u - linalg::identity(2))) < 1e-13);
    }

    #[test]
    fn degenerate_spectrum_keeps_a_unitary_basis() {
        let s = eigen_oracle(&linalg::identity(3)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0; 3]);
        let u = &s.eigenvectors;
        assert!(linalg::max_abs(&(u.adjoint() * u - linalg::identity(3))) < 1e-13);
    }

    #[test]
    fn bounds() {
        assert_eq!(trace_bounds(&[2.0, 1.0], &[1.0, 0.0]).unwrap(), (1.0, 2.0));
        let (lo, hi) = trace_bounds(&[3.0, 2.0, 1.0], &[1.0 / 3.0; 3]).unwrap();
        assert_abs_diff_eq!(lo, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-15);
        let (lo, hi) = trace_bounds(&[3.0, 1.0], &[0.7, 0.3]).unwrap();
        assert_abs_diff_eq!(lo, 1.6, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 2.4, epsilon = 1e-14);
        assert!(trace_bounds(&[1.0, 0.0], &[0.5, 0.4]).is_err());
    }

    #[test]
    fn permutations() {
        assert_eq!(permutation_means(&[2.0, 0.0], &[1.0, 0.0]).unwrap(), vec![0.0, 2.0]);
        assert_eq!(permutation_means(&[3.0, 2.0, 1.0], &[1.0 / 3.0; 3]).unwrap().len(), 1);
        assert_eq!(all_permutation_means(&[3.0, 2.0, 1.0], &[0.5, 0.3, 0.2]).unwrap().len(), 6);
    }
}
