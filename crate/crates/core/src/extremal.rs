//! Extremal states of `Tr(H rho)` at fixed purity, and the spectrum of `H`
//! assembled from pure extremals.
//!
//! The flow: restrict Bloch vectors to the commutant of `H`, zero surplus
//! free components until the purity system is square, and solve it. When `H`
//! is degenerate a single pass may not reach every eigenprojector, so the
//! spectrum is collected over rounds, each one constraining the family to be
//! orthogonal to the projectors already accepted.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::commutant::{commutant_of, rank_and_nullspace, AffineParametrization, NullSpaceParametrization};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::poly_solver::{self, ConstraintSystem, SolveOptions};
use crate::positivity::PurityConstraints;
use crate::su_algebra::{self, BlochVector, HermitianOperator, PurityClass};

/// Two projectors with `Tr(P Q)` below this are treated as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
const SCALAR_TOL: f64 = 1e-12;
const MAX_ZERO_ALTERNATIVES: usize = 12;
/// Critical values closer than this (relative) are one value.
const MEAN_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSolution {
    /// 1-based position in the sorted output.
    pub label: usize,
    pub bloch: BlochVector,
    pub rho: CMatrix,
    pub mean_value: f64,
    /// `max |[H, rho]|`.
    pub commutator_residual: f64,
    /// Characteristic coefficients of the returned `rho`.
    pub purity: PurityConstraints,
}

impl CriticalSolution {
    fn new(op: &HermitianOperator, h: &CMatrix, lambda: DVector<f64>, class: PurityClass) -> Result<Self> {
        let bloch = BlochVector {
            d: op.d,
            lambda,
            purity_class: class,
        };
        let rho = bloch.density_matrix();
        let mean_value = mean_value(op, &bloch)?;
        let commutator_residual = linalg::max_abs(&linalg::commutator(h, &rho));
        let purity = PurityConstraints::from_density(&rho)?;
        Ok(Self {
            label: 0,
            bloch,
            rho,
            mean_value,
            commutator_residual,
            purity,
        })
    }

    /// `Tr(rho sigma)` for another solution of the same dimension.
    pub fn overlap(&self, other: &CriticalSolution) -> f64 {
        linalg::trace_product_re(&self.rho, &other.rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Rank-one projectors, one per eigenvalue counted with multiplicity,
    /// ordered like `eigenvalues`.
    pub projectors: Vec<CriticalSolution>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `max |sum_k P_k - I|`.
    pub completeness_residual: f64,
    /// Solve rounds that contributed at least one projector.
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDecomposition {
    pub weights: Vec<f64>,
    pub basis: SpectralResult,
    /// `max |sum_i p_i P_i - rho|`.
    pub reconstruction_residual: f64,
}

/// `h0/d + 1/2 h . lambda`.
pub fn mean_value(op: &HermitianOperator, bloch: &BlochVector) -> Result<f64> {
    if op.d != bloch.d {
        return Err(Error::DimensionMismatch {
            expected: op.d,
            found: bloch.d,
        });
    }
    Ok(op.h0 / op.d as f64 + 0.5 * op.h.dot(&bloch.lambda))
}

fn is_scalar(op: &HermitianOperator) -> bool {
    op.is_scalar(SCALAR_TOL)
}

/// Candidate zero sets of size `count`, best first. Variables absent from
/// the mean value are zeroed before those it depends on; within each group
/// lower Bloch indices go first.
fn zero_sets(fam: &AffineParametrization, op: &HermitianOperator, count: usize) -> Vec<Vec<usize>> {
    if count == 0 {
        return vec![vec![]];
    }
    let (_, g) = fam.mean_value_affine(op);
    let tol = 1e-12 * op.h.amax().max(1.0);
    let mut ranking: Vec<usize> = (0..fam.arity()).collect();
    ranking.sort_by_key(|&i| (g[i].abs() > tol, fam.labels[i]));
    ranking
        .into_iter()
        .combinations(count)
        .take(MAX_ZERO_ALTERNATIVES)
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect()
}

struct Pipeline<'a> {
    op: &'a HermitianOperator,
    h: CMatrix,
    nullspace: NullSpaceParametrization,
}

impl<'a> Pipeline<'a> {
    fn new(op: &'a HermitianOperator) -> Result<Self> {
        let nullspace = rank_and_nullspace(&commutant_of(op)?)?;
        Ok(Self {
            op,
            h: op.matrix(),
            nullspace,
        })
    }

    fn is_nondegenerate(&self) -> bool {
        self.nullspace.rank == self.op.d * (self.op.d - 1)
    }

    fn family(&self) -> AffineParametrization {
        AffineParametrization::from_nullspace(&self.nullspace)
    }

    /// Solves on `fam` after zeroing surplus variables down to `target`
    /// unknowns, walking through alternative zero sets until one yields
    /// solutions accepted by `keep`. The last resort solves the unreduced
    /// family.
    fn solve_reduced<F>(
        &self,
        fam: &AffineParametrization,
        c: &PurityConstraints,
        target: usize,
        options: SolveOptions,
        mut keep: F,
    ) -> Result<Vec<DVector<f64>>>
    where
        F: FnMut(&[DVector<f64>]) -> bool,
    {
        let surplus = fam.arity().saturating_sub(target);
        let mut last_err = None;
        let mut attempts: Vec<AffineParametrization> =
            zero_sets(fam, self.op, surplus).iter().map(|z| fam.fix_zero(z)).collect();
        if surplus > 0 {
            attempts.push(fam.clone());
        }
        for reduced in attempts {
            let sys = if reduced.arity() == self.op.d - 1 {
                ConstraintSystem::new(reduced, c.clone())?
            } else {
                ConstraintSystem::general(reduced, c.clone())?
            };
            match poly_solver::solve(&sys, options) {
                Ok(set) => {
                    let lambdas: Vec<DVector<f64>> = set.solutions.iter().map(|x| sys.lambda(x)).collect();
                    if keep(&lambdas) {
                        return Ok(lambdas);
                    }
                }
                Err(e @ Error::SolverExhausted { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap_or(Error::SolverExhausted {
            starts: options.starts.unwrap_or(0),
        }))
    }

    fn solution(&self, lambda: DVector<f64>, class: PurityClass) -> Result<CriticalSolution> {
        CriticalSolution::new(self.op, &self.h, lambda, class)
    }

    /// Orthogonality imposed through `Tr(rho P) = 0` is quadratic in the
    /// state vectors, so projectors from later rounds overlap at the square
    /// root of the working precision. A Newton-Schulz iteration towards the
    /// nearest unitary restores orthonormality; it only mixes vectors that
    /// are already nearly orthogonal, which stay inside their eigenspaces.
    fn orthonormalize(&self, projectors: Vec<CriticalSolution>) -> Result<Vec<CriticalSolution>> {
        let d = self.op.d;
        let columns: Vec<_> = projectors
            .iter()
            .map(|p| {
                let j = (0..d)
                    .max_by(|&a, &b| p.rho[(a, a)].re.total_cmp(&p.rho[(b, b)].re))
                    .expect("d >= 2");
                p.rho.column(j).unscale(p.rho[(j, j)].re.sqrt())
            })
            .collect();
        let mut x = CMatrix::from_columns(&columns);
        let eye = linalg::identity(d);
        for _ in 0..30 {
            let gram = x.adjoint() * &x;
            if linalg::max_abs(&(&gram - &eye)) < 1e-15 {
                break;
            }
            x = (&x * (eye.scale(3.0) - gram)).scale(0.5);
        }
        let basis = su_algebra::basis(d)?;
        (0..d)
            .map(|k| {
                let v = x.column(k);
                let rho = v * v.adjoint();
                self.solution(basis.coordinates(&rho), PurityClass::Pure)
            })
            .collect()
    }
}

fn sort_and_label(mut sols: Vec<CriticalSolution>) -> Vec<CriticalSolution> {
    sols.sort_by(|a, b| {
        b.mean_value.total_cmp(&a.mean_value).then_with(|| {
            a.bloch
                .lambda
                .iter()
                .zip(b.bloch.lambda.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    for (i, s) in sols.iter_mut().enumerate() {
        s.label = i + 1;
    }
    sols
}

/// Extremal states of `Tr(H rho)` among states with the given purity,
/// sorted by mean value descending.
pub fn extremal_states(op: &HermitianOperator, c: &PurityConstraints, seed: u64) -> Result<Vec<CriticalSolution>> {
    if c.dim() != op.d {
        return Err(Error::DimensionMismatch {
            expected: op.d,
            found: c.dim(),
        });
    }
    let adm = c.admissibility();
    if !adm.is_admissible() {
        return Err(Error::Inadmissible {
            condition: adm.violated.clone().unwrap_or_default(),
        });
    }
    let h = op.matrix();
    if c.is_maximally_mixed() {
        let sol = CriticalSolution::new(op, &h, DVector::zeros(op.h.len()), PurityClass::Mixed)?;
        return Ok(sort_and_label(vec![sol]));
    }
    if is_scalar(op) {
        return Err(Error::ScalarOperator);
    }
    let pipe = Pipeline::new(op)?;
    let d = op.d;
    let class = if c.is_pure() { PurityClass::Pure } else { PurityClass::Mixed };
    let stop_after = pipe.is_nondegenerate().then(|| {
        if c.is_pure() {
            d
        } else {
            poly_solver::count_bound(d)
        }
    });
    let options = SolveOptions {
        seed,
        starts: None,
        stop_after,
    };
    if pipe.is_nondegenerate() {
        let lambdas = pipe.solve_reduced(&pipe.family(), c, d - 1, options, |l| !l.is_empty())?;
        let sols = lambdas
            .into_iter()
            .map(|l| pipe.solution(l, class))
            .collect::<Result<Vec<_>>>()?;
        return Ok(sort_and_label(sols));
    }
    // Degenerate operators have continua of critical states. Every critical
    // value is reached by a state diagonal in an eigenbasis, so the solve
    // runs on the simplex spanned by the projectors of the spectrum and one
    // representative is kept per critical value.
    let spec = extremal_spectrum(op, seed)?;
    let last = &spec.projectors[d - 1].bloch.lambda;
    let columns: Vec<DVector<f64>> = spec.projectors[..d - 1].iter().map(|p| &p.bloch.lambda - last).collect();
    let simplex = AffineParametrization {
        d,
        offset: last.clone(),
        basis: DMatrix::from_columns(&columns),
        labels: (0..d - 1).collect(),
    };
    let sys = ConstraintSystem::new(simplex, c.clone())?;
    let set = poly_solver::solve(
        &sys,
        SolveOptions {
            stop_after: Some(poly_solver::count_bound(d)),
            ..options
        },
    )?;
    let tol = MEAN_DEDUP_TOL * op.h.amax().max(op.h0.abs()).max(1.0);
    let mut sols: Vec<CriticalSolution> = Vec::new();
    for x in &set.solutions {
        let s = pipe.solution(sys.lambda(x), class)?;
        if sols.iter().all(|t| (t.mean_value - s.mean_value).abs() > tol) {
            sols.push(s);
        }
    }
    Ok(sort_and_label(sols))
}

/// Spectrum of a non-scalar operator from pure extremal states, with one
/// rank-one projector per eigenvalue counted with multiplicity.
pub fn extremal_spectrum(op: &HermitianOperator, seed: u64) -> Result<SpectralResult> {
    if is_scalar(op) {
        return Err(Error::ScalarOperator);
    }
    let d = op.d;
    let pipe = Pipeline::new(op)?;
    let pure = PurityConstraints::pure(d)?;
    let base = pipe.family();
    let mut accepted: Vec<CriticalSolution> = Vec::with_capacity(d);
    let mut rounds = 0;

    while accepted.len() < d - 1 {
        let k = accepted.len();
        let fam = if k == 0 {
            base.clone()
        } else {
            // Tr(rho P_j) = 1/d + 1/2 lambda . mu_j = 0
            let rows = DMatrix::from_fn(k, base.offset.len(), |r, c| 0.5 * accepted[r].bloch.lambda[c]);
            let rhs = DVector::from_element(k, -1.0 / d as f64);
            base.constrain(&rows, &rhs)?
        };
        let options = SolveOptions {
            seed: seed.wrapping_add(rounds as u64),
            starts: None,
            stop_after: Some(d - k),
        };
        let mut fresh: Vec<CriticalSolution> = Vec::new();
        let outcome = pipe.solve_reduced(&fam, &pure, d - 1 - k, options, |lambdas| {
            fresh.clear();
            let mut candidates: Vec<CriticalSolution> = lambdas
                .iter()
                .filter_map(|l| pipe.solution(l.clone(), PurityClass::Pure).ok())
                .collect();
            candidates = sort_and_label(candidates);
            for cand in candidates {
                let independent = accepted
                    .iter()
                    .chain(fresh.iter())
                    .all(|p| p.overlap(&cand).abs() < ORTHOGONALITY_TOL);
                if independent && accepted.len() + fresh.len() < d {
                    fresh.push(cand);
                }
            }
            !fresh.is_empty()
        });
        match outcome {
            Ok(_) => {
                rounds += 1;
                accepted.append(&mut fresh);
            }
            Err(Error::SolverExhausted { .. }) => {
                return Err(Error::SpectrumIncomplete {
                    found: accepted.len(),
                    needed: d,
                    partial: Box::new(assemble(accepted, rounds)),
                })
            }
            Err(e) => return Err(e),
        }
    }

    if accepted.len() == d - 1 {
        // The last projector is fixed by completeness.
        let mut mu = DVector::zeros(op.h.len());
        for p in &accepted {
            mu -= &p.bloch.lambda;
        }
        let last = pipe.solution(mu, PurityClass::Pure)?;
        let idem = linalg::max_abs(&(&last.rho * &last.rho - &last.rho));
        if idem > 1e-8 {
            return Err(Error::SpectrumIncomplete {
                found: accepted.len(),
                needed: d,
                partial: Box::new(assemble(accepted, rounds)),
            });
        }
        accepted.push(last);
    }
    Ok(assemble(pipe.orthonormalize(accepted)?, rounds))
}

fn assemble(projectors: Vec<CriticalSolution>, rounds: usize) -> SpectralResult {
    let projectors = sort_and_label(projectors);
    let d = projectors.first().map_or(0, |p| p.bloch.d);
    let mut sum = CMatrix::zeros(d, d);
    for p in &projectors {
        sum += &p.rho;
    }
    let completeness_residual = if d == 0 {
        f64::INFINITY
    } else {
        linalg::max_abs(&(sum - linalg::identity(d)))
    };
    SpectralResult {
        eigenvalues: projectors.iter().map(|p| p.mean_value).collect(),
        projectors,
        completeness_residual,
        rounds,
    }
}

/// Weights of a commuting state on a complete set of eigenprojectors:
/// `p_i = Tr(rho P_i)`.
pub fn convex_decomposition(mixed: &CriticalSolution, pure: &SpectralResult) -> Result<ConvexDecomposition> {
    let residual = pure
        .projectors
        .iter()
        .map(|p| linalg::max_abs(&linalg::commutator(&mixed.rho, &p.rho)))
        .fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(Error::NonCommuting { residual });
    }
    let weights: Vec<f64> = pure
        .projectors
        .iter()
        .map(|p| linalg::trace_product_re(&mixed.rho, &p.rho))
        .collect();
    let d = mixed.rho.nrows();
    let mut rebuilt = CMatrix::zeros(d, d);
    for (w, p) in weights.iter().zip(&pure.projectors) {
        rebuilt += p.rho.scale(*w);
    }
    Ok(ConvexDecomposition {
        weights,
        basis: pure.clone(),
        reconstruction_residual: linalg::max_abs(&(rebuilt - &mixed.rho)),
    })
}

/// `[min, max]` of `Tr(H rho)` over all states.
pub fn numerical_range(op: &HermitianOperator, seed: u64) -> Result<(f64, f64)> {
    if is_scalar(op) {
        let v = op.h0 / op.d as f64;
        return Ok((v, v));
    }
    let spec = extremal_spectrum(op, seed)?;
    let max = spec.eigenvalues[0];
    let min = *spec.eigenvalues.last().expect("non-empty spectrum");
    Ok((min, max))
}

/// Bloch vector of a state, tagged by its purity class.
pub fn bloch_of(rho: &CMatrix, class: PurityClass) -> Result<BlochVector> {
    su_algebra::BlochVector::from_density(rho, class)
}
