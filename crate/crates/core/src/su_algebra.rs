//! Generalized Gell-Mann generators of su(d), their structure constants and
//! the Bloch coordinates of Hermitian operators.
//!
//! Generators are ordered in three blocks: the symmetric matrices
//! `P_jk + P_kj`, the antisymmetric matrices `-i(P_jk - P_kj)` (both over
//! pairs `j < k` in lexicographic order) and finally the `d - 1` diagonal
//! matrices. Every index in this crate is zero-based, so the Bloch component
//! usually written `lambda_1` lives at index `0`.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 6;

/// Relative Hermiticity tolerance applied to operator input.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Structure constants below this magnitude are stored as exact zeros.
pub const STRUCTURE_THRESHOLD: f64 = 1e-13;
pub const UNITARITY_TOL: f64 = 1e-10;

pub fn check_dimension(d: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension {
            d,
            min: MIN_DIM,
            max: MAX_DIM,
        });
    }
    Ok(())
}

/// Number of generators, `d^2 - 1`.
pub fn algebra_dim(d: usize) -> usize {
    d * d - 1
}

#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    d: usize,
    pairs: Vec<(usize, usize)>,
    matrices: Vec<CMatrix>,
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn generator(&self, k: usize) -> &CMatrix {
        &self.matrices[k]
    }

    pub fn symmetric_indices(&self) -> Range<usize> {
        0..self.pairs.len()
    }

    pub fn antisymmetric_indices(&self) -> Range<usize> {
        self.pairs.len()..2 * self.pairs.len()
    }

    pub fn diagonal_indices(&self) -> Range<usize> {
        2 * self.pairs.len()..self.matrices.len()
    }

    pub fn is_diagonal(&self, k: usize) -> bool {
        self.diagonal_indices().contains(&k)
    }

    /// Matrix positions `(j, k)` touched by an off-diagonal generator.
    pub fn pair(&self, k: usize) -> Option<(usize, usize)> {
        let p = self.pairs.len();
        if k < 2 * p {
            Some(self.pairs[k % p])
        } else {
            None
        }
    }

    /// `coeff0 * I + 1/2 sum_k coeffs_k lambda_k`.
    pub fn expand(&self, coeff0: f64, coeffs: &DVector<f64>) -> CMatrix {
        let mut out = linalg::identity(self.d).scale(coeff0);
        for (c, g) in coeffs.iter().zip(&self.matrices) {
            if *c != 0.0 {
                out += g.scale(0.5 * c);
            }
        }
        out
    }

    /// `Tr(M lambda_k)` for every generator, real parts only.
    pub fn coordinates(&self, m: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.matrices.iter().map(|g| linalg::trace_product_re(m, g)),
        )
    }
}

pub fn build_generators(d: usize) -> Result<GeneratorBasis> {
    check_dimension(d)?;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect();
    let mut matrices = Vec::with_capacity(algebra_dim(d));
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = ONE;
        m[(k, j)] = ONE;
        matrices.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = Complex64::new(0.0, -1.0);
        m[(k, j)] = Complex64::new(0.0, 1.0);
        matrices.push(m);
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..l {
            m[(i, i)] = Complex64::new(norm, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        matrices.push(m);
    }
    Ok(GeneratorBasis { d, pairs, matrices })
}

/// Antisymmetric (`f`) and symmetric (`d`) structure constants, stored
/// sparsely with every index permutation present.
#[derive(Debug, Clone)]
pub struct StructureTensor {
    d: usize,
    f: BTreeMap<(usize, usize, usize), f64>,
    dsym: BTreeMap<(usize, usize, usize), f64>,
}

impl StructureTensor {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn f(&self, j: usize, k: usize, q: usize) -> f64 {
        self.f.get(&(j, k, q)).copied().unwrap_or(0.0)
    }

    pub fn d_sym(&self, j: usize, k: usize, q: usize) -> f64 {
        self.dsym.get(&(j, k, q)).copied().unwrap_or(0.0)
    }

    pub fn f_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.f.iter().map(|(k, v)| (*k, *v))
    }

    pub fn d_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.dsym.iter().map(|(k, v)| (*k, *v))
    }

    /// Worst elementwise deviation of `lambda_j lambda_k` from
    /// `(2/d) delta_jk I + sum_q (d_jkq + i f_jkq) lambda_q` over all pairs.
    pub fn multiplication_residual(&self, basis: &GeneratorBasis) -> f64 {
        let n = basis.len();
        let d = basis.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let product = basis.generator(j) * basis.generator(k);
                let mut expected = CMatrix::zeros(d, d);
                if j == k {
                    expected += linalg::identity(d).scale(2.0 / d as f64);
                }
                for q in 0..n {
                    let coeff = Complex64::new(self.d_sym(j, k, q), self.f(j, k, q));
                    if coeff != ZERO {
                        expected += basis.generator(q) * coeff;
                    }
                }
                worst = worst.max(linalg::max_abs(&(product - expected)));
            }
        }
        worst
    }
}

fn permutations_with_sign(j: usize, k: usize, q: usize) -> [((usize, usize, usize), f64); 6] {
    [
        ((j, k, q), 1.0),
        ((k, q, j), 1.0),
        ((q, j, k), 1.0),
        ((k, j, q), -1.0),
        ((j, q, k), -1.0),
        ((q, k, j), -1.0),
    ]
}

pub fn build_structure_tensor(basis: &GeneratorBasis) -> Result<StructureTensor> {
    let n = basis.len();
    let g = basis.matrices();
    let mut f = BTreeMap::new();
    let mut dsym = BTreeMap::new();
    for j in 0..n {
        for k in j..n {
            let prod_jk = &g[j] * &g[k];
            let prod_kj = &g[k] * &g[j];
            let comm = &prod_jk - &prod_kj;
            let anti = &prod_jk + &prod_kj;
            for (q, gq) in g.iter().enumerate().skip(k) {
                // f_jkq = Tr([l_j, l_k] l_q) / 4i, d_jkq = Tr({l_j, l_k} l_q) / 4
                let tc = linalg::trace(&(&comm * gq));
                let ta = linalg::trace(&(&anti * gq));
                let f_val = tc / Complex64::new(0.0, 4.0);
                let d_val = ta / 4.0;
                let residue = f_val.im.abs().max(d_val.im.abs());
                if residue > STRUCTURE_THRESHOLD {
                    return Err(Error::BrokenBasis { j, k, q, residue });
                }
                if j < k && k < q && f_val.re.abs() > STRUCTURE_THRESHOLD {
                    for (key, sign) in permutations_with_sign(j, k, q) {
                        f.insert(key, sign * f_val.re);
                    }
                }
                if d_val.re.abs() > STRUCTURE_THRESHOLD {
                    for (key, _) in permutations_with_sign(j, k, q) {
                        dsym.insert(key, d_val.re);
                    }
                }
            }
        }
    }
    Ok(StructureTensor {
        d: basis.dim(),
        f,
        dsym,
    })
}

static BASES: [OnceLock<GeneratorBasis>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
static TENSORS: [OnceLock<Result<StructureTensor>>; MAX_DIM + 1] =
    [const { OnceLock::new() }; MAX_DIM + 1];

/// Shared generator basis for dimension `d`, built on first use.
pub fn basis(d: usize) -> Result<&'static GeneratorBasis> {
    check_dimension(d)?;
    Ok(BASES[d].get_or_init(|| build_generators(d).expect("dimension already validated")))
}

/// Shared structure tensor for dimension `d`, built on first use.
pub fn structure_tensor(d: usize) -> Result<&'static StructureTensor> {
    let b = basis(d)?;
    TENSORS[d]
        .get_or_init(|| build_structure_tensor(b))
        .as_ref()
        .map_err(Clone::clone)
}

/// Bloch coordinates of a Hermitian operator: `H = (h0/d) I + 1/2 sum h_k lambda_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    pub d: usize,
    pub h0: f64,
    pub h: DVector<f64>,
}

impl HermitianOperator {
    pub fn new(d: usize, h0: f64, h: DVector<f64>) -> Result<Self> {
        check_dimension(d)?;
        if h.len() != algebra_dim(d) {
            return Err(Error::DimensionMismatch {
                expected: algebra_dim(d),
                found: h.len(),
            });
        }
        Ok(Self { d, h0, h })
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        decompose(m)
    }

    pub fn matrix(&self) -> CMatrix {
        reconstruct(self).expect("lengths validated on construction")
    }

    /// Scalar operators have a vanishing Bloch vector.
    pub fn is_scalar(&self, tol: f64) -> bool {
        self.h.amax() <= tol * self.h0.abs().max(1.0)
    }
}

pub fn decompose(m: &CMatrix) -> Result<HermitianOperator> {
    let d = linalg::ensure_square(m)?;
    let b = basis(d)?;
    let herm = linalg::symmetrized_hermitian(m, HERMITICITY_TOL)?;
    let h0 = linalg::trace(&herm).re;
    let h = b.coordinates(&herm);
    Ok(HermitianOperator { d, h0, h })
}

pub fn reconstruct(op: &HermitianOperator) -> Result<CMatrix> {
    let b = basis(op.d)?;
    if op.h.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: op.h.len(),
        });
    }
    Ok(b.expand(op.h0 / op.d as f64, &op.h))
}

/// `O_kj = 1/2 Tr(lambda_k U lambda_j U^dagger)`, the adjoint action of `U`
/// on Bloch vectors.
pub fn adjoint_rotation(u: &CMatrix, basis: &GeneratorBasis) -> Result<DMatrix<f64>> {
    let d = linalg::ensure_square(u)?;
    if d != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: d,
        });
    }
    let deviation = linalg::max_abs(&(u * u.adjoint() - linalg::identity(d)));
    if deviation > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let n = basis.len();
    let u_adj = u.adjoint();
    let rotated: Vec<CMatrix> = basis
        .matrices()
        .iter()
        .map(|g| u * g * &u_adj)
        .collect();
    Ok(DMatrix::from_fn(n, n, |k, j| {
        0.5 * linalg::trace_product_re(basis.generator(k), &rotated[j])
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PurityClass {
    Pure,
    Mixed,
    Unconstrained,
}

/// Generalized Bloch vector of a state, `rho = I/d + 1/2 sum lambda_k lambda_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub d: usize,
    pub lambda: DVector<f64>,
    pub purity_class: PurityClass,
}

impl BlochVector {
    /// Tolerance on the Bloch-ball radius for vectors accepted as states.
    pub const NORM_TOL: f64 = 1e-9;

    pub fn new(d: usize, lambda: DVector<f64>, purity_class: PurityClass) -> Result<Self> {
        check_dimension(d)?;
        if lambda.len() != algebra_dim(d) {
            return Err(Error::DimensionMismatch {
                expected: algebra_dim(d),
                found: lambda.len(),
            });
        }
        if purity_class != PurityClass::Unconstrained
            && lambda.norm() > Self::max_norm(d) + Self::NORM_TOL
        {
            return Err(Error::InvalidTraceVector(format!(
                "Bloch vector norm {} exceeds the state bound {}",
                lambda.norm(),
                Self::max_norm(d)
            )));
        }
        Ok(Self {
            d,
            lambda,
            purity_class,
        })
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::new(d, DVector::zeros(algebra_dim(d)), PurityClass::Mixed)
    }

    pub fn from_density(rho: &CMatrix, purity_class: PurityClass) -> Result<Self> {
        let op = decompose(rho)?;
        Self::new(op.d, op.h, purity_class)
    }

    /// Radius of the sphere holding every pure state, `sqrt(2(d-1)/d)`.
    pub fn max_norm(d: usize) -> f64 {
        (2.0 * (d as f64 - 1.0) / d as f64).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.lambda.norm()
    }

    pub fn density_matrix(&self) -> CMatrix {
        basis(self.d)
            .expect("dimension validated on construction")
            .expand(1.0 / self.d as f64, &self.lambda)
    }
}
