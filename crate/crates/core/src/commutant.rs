//! The commutant of a Hermitian operator in Bloch coordinates.
//!
//! A state `rho` commutes with `H` iff its Bloch vector lies in the kernel of
//! the skew-symmetric matrix `M_ij = sum_k f_ijk h_k`. The rank of `M` is the
//! dimension of the unitary orbit of `H` and so encodes its degeneracy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su_algebra::{self, GeneratorBasis, HermitianOperator, StructureTensor};

/// Relative singular-value threshold deciding the rank.
pub const RANK_TOL: f64 = 1e-10;
/// Relative bound on `|M lambda|` for vectors produced by a parametrization.
pub const NULL_TOL: f64 = 1e-9;
// Columns whose Gram-Schmidt residual falls below this fraction of the
// largest singular value are not used as pivots when avoidable.
const PIVOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CommutantMatrix {
    pub d: usize,
    pub m: DMatrix<f64>,
    pub source: HermitianOperator,
}

impl CommutantMatrix {
    pub fn len(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.m.nrows() == 0
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.m.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn rank(&self) -> usize {
        numeric_rank(&self.singular_values())
    }

    /// `|M lambda|_inf / max(|M|_inf, 1e-300)`.
    pub fn relative_residual(&self, lambda: &DVector<f64>) -> f64 {
        let scale = self.m.amax().max(f64::MIN_POSITIVE);
        (&self.m * lambda).amax() / scale
    }
}

fn numeric_rank(sorted_desc: &[f64]) -> usize {
    match sorted_desc.first() {
        Some(&smax) if smax > 0.0 => sorted_desc.iter().filter(|&&s| s > RANK_TOL * smax).count(),
        _ => 0,
    }
}

pub fn build_commutant(op: &HermitianOperator, f: &StructureTensor) -> Result<CommutantMatrix> {
    if op.d != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: op.d,
        });
    }
    let n = op.h.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for ((i, j, k), v) in f.f_entries() {
        if i < j {
            m[(i, j)] += v * op.h[k];
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = -m[(j, i)];
        }
    }
    Ok(CommutantMatrix {
        d: op.d,
        m,
        source: op.clone(),
    })
}

/// Convenience wrapper using the cached structure tensor.
pub fn commutant_of(op: &HermitianOperator) -> Result<CommutantMatrix> {
    build_commutant(op, su_algebra::structure_tensor(op.d)?)
}

/// `G_qp = 4 sum_j A_qj A_pj` with `A_qj = sum_k f_qkj h_k`, built directly
/// from the structure constants.
pub fn gram_matrix(op: &HermitianOperator, f: &StructureTensor) -> Result<DMatrix<f64>> {
    if op.d != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: op.d,
        });
    }
    let n = op.h.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for ((q, k, j), v) in f.f_entries() {
        a[(q, j)] += v * op.h[k];
    }
    let g = (&a * a.transpose()).scale(4.0);
    Ok((&g + g.transpose()).scale(0.5))
}

/// Kernel of `M` written as bound components expressed through free ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceParametrization {
    pub d: usize,
    pub rank: usize,
    pub free_indices: Vec<usize>,
    pub bound_indices: Vec<usize>,
    /// Row `i` gives bound component `bound_indices[i]` as a combination of
    /// the free components.
    pub expressing_map: DMatrix<f64>,
    /// Set when the rank decision sits within a decade of the threshold.
    pub near_degenerate: bool,
}

impl NullSpaceParametrization {
    pub fn free_count(&self) -> usize {
        self.free_indices.len()
    }

    /// Full Bloch vector for the given free-variable values.
    pub fn lambda(&self, free: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.free_indices.len() + self.bound_indices.len());
        for (slot, &idx) in self.free_indices.iter().enumerate() {
            out[idx] = free[slot];
        }
        let bound = &self.expressing_map * free;
        for (slot, &idx) in self.bound_indices.iter().enumerate() {
            out[idx] = bound[slot];
        }
        out
    }

    /// Columns span the kernel; column `i` is the Bloch vector obtained by
    /// setting free variable `i` to one and the others to zero.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        let n = self.free_count();
        let mut basis = DMatrix::zeros(self.free_indices.len() + self.bound_indices.len(), n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            basis.set_column(i, &self.lambda(&e));
        }
        basis
    }
}

/// Pivot preference: off-diagonal generators in ascending order, then the
/// diagonal block ascending. Free variables are what remains, so diagonal and
/// high-index components stay free whenever the kernel allows it.
fn pivot_order(basis: &GeneratorBasis) -> Vec<usize> {
    let mut order: Vec<usize> = (0..basis.len()).filter(|&k| !basis.is_diagonal(k)).collect();
    order.extend(basis.diagonal_indices());
    order
}

/// Greedy column selection by Gram-Schmidt residual in the given order,
/// filling up to `rank` with the strongest remaining columns if the ordered
/// pass comes up short.
fn select_pivots(a: &DMatrix<f64>, order: &[usize], rank: usize, tol: f64) -> Vec<usize> {
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(rank);
    let mut chosen = Vec::with_capacity(rank);
    let residual = |q: &[DVector<f64>], col: usize| {
        let mut v = a.column(col).into_owned();
        for _ in 0..2 {
            for u in q {
                let p = u.dot(&v);
                v.axpy(-p, u, 1.0);
            }
        }
        v
    };
    for &col in order {
        if chosen.len() == rank {
            break;
        }
        let v = residual(&q, col);
        let norm = v.norm();
        if norm > tol {
            q.push(v / norm);
            chosen.push(col);
        }
    }
    while chosen.len() < rank {
        let best = order
            .iter()
            .filter(|c| !chosen.contains(*c))
            .map(|&c| (c, residual(&q, c).norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((c, norm)) if norm > 0.0 => {
                let v = residual(&q, c);
                q.push(v / norm);
                chosen.push(c);
            }
            _ => break,
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Least-squares expression of the pivot columns' coefficients through the
/// free ones: `x_P = -(A_P^+) A_F x_F`.
fn express(a: &DMatrix<f64>, pivots: &[usize], free: &[usize]) -> DMatrix<f64> {
    let ap = a.select_columns(pivots);
    let af = a.select_columns(free);
    if pivots.is_empty() {
        return DMatrix::zeros(0, free.len());
    }
    if free.is_empty() {
        return DMatrix::zeros(pivots.len(), 0);
    }
    let svd = ap.svd(true, true);
    let smax = svd.singular_values.max();
    -svd.solve(&af, RANK_TOL * smax).expect("U and V were computed")
}

fn complement(n: usize, picked: &[usize]) -> Vec<usize> {
    (0..n).filter(|k| !picked.contains(k)).collect()
}

pub fn rank_and_nullspace(cm: &CommutantMatrix) -> Result<NullSpaceParametrization> {
    let basis = su_algebra::basis(cm.d)?;
    let s = cm.singular_values();
    let rank = numeric_rank(&s);
    let smax = s.first().copied().unwrap_or(0.0);
    let near_degenerate = smax > 0.0 && {
        let tau = RANK_TOL;
        let last_kept = if rank > 0 { s[rank - 1] / smax } else { 1.0 };
        let first_dropped = s.get(rank).map_or(0.0, |x| x / smax);
        last_kept < 10.0 * tau || first_dropped > tau / 10.0
    };
    let pivots = select_pivots(&cm.m, &pivot_order(basis), rank, PIVOT_TOL * smax);
    let free = complement(cm.len(), &pivots);
    Ok(NullSpaceParametrization {
        d: cm.d,
        rank,
        expressing_map: express(&cm.m, &pivots, &free),
        free_indices: free,
        bound_indices: pivots,
        near_degenerate,
    })
}

/// Parametrization with a caller-chosen free set; the complementary columns
/// of `M` must be linearly independent.
pub fn with_free_indices(cm: &CommutantMatrix, free: &[usize]) -> Result<NullSpaceParametrization> {
    let n = cm.len();
    let s = cm.singular_values();
    let rank = numeric_rank(&s);
    let mut free = free.to_vec();
    free.sort_unstable();
    free.dedup();
    if let Some(&bad) = free.iter().find(|&&k| k >= n) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            min: 0,
            max: n.saturating_sub(1),
        });
    }
    if free.len() != n - rank {
        return Err(Error::InvalidFreeSet(format!(
            "kernel has dimension {}, {} indices given",
            n - rank,
            free.len()
        )));
    }
    let pivots = complement(n, &free);
    let ap = cm.m.select_columns(&pivots);
    let sp = ap.singular_values();
    let smax = s.first().copied().unwrap_or(0.0);
    if sp.iter().filter(|&&x| x > PIVOT_TOL * smax).count() < rank {
        return Err(Error::InvalidFreeSet(format!(
            "columns {pivots:?} of the commutant are dependent"
        )));
    }
    Ok(NullSpaceParametrization {
        d: cm.d,
        rank,
        expressing_map: express(&cm.m, &pivots, &free),
        free_indices: free,
        bound_indices: pivots,
        near_degenerate: false,
    })
}

/// Degeneracy information for an orbit of rank `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitInfo {
    pub d: usize,
    pub rank: usize,
    /// Every eigenvalue multiplicity pattern (descending) whose flag manifold
    /// has dimension `rank`. More than one pattern can occur from `d = 6` on.
    pub patterns: Vec<Vec<usize>>,
    pub is_nondegenerate: bool,
}

impl OrbitInfo {
    pub fn free_count(&self) -> usize {
        self.d * self.d - 1 - self.rank
    }
}

fn partitions(n: usize, max_part: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=n.min(max_part)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The orbit of an operator with multiplicities `m_i` has real dimension
/// `d^2 - sum m_i^2`; this inverts that relation.
pub fn classify_orbit(rank: usize, d: usize) -> Result<OrbitInfo> {
    su_algebra::check_dimension(d)?;
    let patterns: Vec<Vec<usize>> = partitions(d, d)
        .into_iter()
        .filter(|p| d * d - p.iter().map(|m| m * m).sum::<usize>() == rank)
        .collect();
    if patterns.is_empty() {
        return Err(Error::OrbitNotTabulated { d, rank });
    }
    Ok(OrbitInfo {
        d,
        rank,
        patterns,
        is_nondegenerate: rank == d * (d - 1),
    })
}

/// Affine family `lambda = offset + basis x` of Bloch vectors. Each column of
/// `basis` carries the Bloch index of the free component it came from, which
/// the surplus-zeroing rule keys on.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParametrization {
    pub d: usize,
    pub offset: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub labels: Vec<usize>,
}

impl AffineParametrization {
    pub fn from_nullspace(ns: &NullSpaceParametrization) -> Self {
        let basis = ns.kernel_basis();
        Self {
            d: ns.d,
            offset: DVector::zeros(basis.nrows()),
            basis,
            labels: ns.free_indices.clone(),
        }
    }

    pub fn arity(&self) -> usize {
        self.basis.ncols()
    }

    pub fn lambda(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.offset + &self.basis * x
    }

    /// Drops the variables at the given positions, i.e. fixes them to zero.
    pub fn fix_zero(&self, positions: &[usize]) -> Self {
        let keep: Vec<usize> = complement(self.arity(), positions);
        Self {
            d: self.d,
            offset: self.offset.clone(),
            basis: self.basis.select_columns(&keep),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Restricts to `rows * lambda = rhs`, eliminating one variable per
    /// independent row. Variables with diagonal-generator or high Bloch
    /// labels are kept free when possible.
    pub fn constrain(&self, rows: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<Self> {
        let a = rows * &self.basis;
        let b = rhs - rows * &self.offset;
        let sv = a.singular_values();
        let smax = sv.max();
        let rank = if smax > 0.0 {
            sv.iter().filter(|&&s| s > RANK_TOL * smax.max(1.0)).count()
        } else {
            0
        };
        let basis = su_algebra::basis(self.d)?;
        let preference = pivot_order(basis);
        let mut order: Vec<usize> = (0..self.arity()).collect();
        order.sort_by_key(|&i| preference.iter().position(|&k| k == self.labels[i]));
        let pivots = select_pivots(&a, &order, rank, PIVOT_TOL * smax);
        let free = complement(self.arity(), &pivots);

        let ap = a.select_columns(&pivots);
        let particular = if pivots.is_empty() {
            DVector::zeros(0)
        } else {
            ap.clone()
                .svd(true, true)
                .solve(&b, RANK_TOL * smax)
                .expect("U and V were computed")
        };
        let inconsistency = (&ap * &particular - &b).amax();
        if inconsistency > 1e-8 * (1.0 + b.amax()) {
            return Err(Error::InvalidFreeSet(format!(
                "linear constraints are inconsistent (residual {inconsistency:e})"
            )));
        }
        let map = express(&a, &pivots, &free);

        // x_P = particular + map x_F
        let mut x0 = DVector::zeros(self.arity());
        for (slot, &p) in pivots.iter().enumerate() {
            x0[p] = particular[slot];
        }
        let mut lift = DMatrix::zeros(self.arity(), free.len());
        for (col, &f) in free.iter().enumerate() {
            lift[(f, col)] = 1.0;
            for (slot, &p) in pivots.iter().enumerate() {
                lift[(p, col)] = map[(slot, col)];
            }
        }
        Ok(Self {
            d: self.d,
            offset: self.lambda(&x0),
            basis: &self.basis * lift,
            labels: free.iter().map(|&i| self.labels[i]).collect(),
        })
    }

    /// Coefficients of `<H> = h0/d + c0 + sum_i g_i x_i` on this family:
    /// returns `(h0/d + h.offset/2, g)`.
    pub fn mean_value_affine(&self, op: &HermitianOperator) -> (f64, DVector<f64>) {
        let c0 = op.h0 / op.d as f64 + 0.5 * op.h.dot(&self.offset);
        let g = self.basis.tr_mul(&op.h) * 0.5;
        (c0, g)
    }
}
