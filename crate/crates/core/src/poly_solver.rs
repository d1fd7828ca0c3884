//! Multi-start Gauss-Newton for the purity system `a_k(x) = c_k`.
//!
//! The unknowns `x` parametrize an affine family of Bloch vectors commuting
//! with the operator. Along such a family `rho(x) = rho_0 + sum x_i R_i`, the
//! power sums `t_j = Tr rho^j` are polynomials in `x` and the characteristic
//! coefficients follow from Newton-Girard, so the whole system is polynomial
//! of degrees `2..=d` with at most `d!` isolated real roots.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commutant::AffineParametrization;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::positivity::{elementary_from_power_sums, PurityConstraints};
use crate::su_algebra::{self, BlochVector};

/// Residual bound a polished solution must meet.
pub const SOLUTION_TOL: f64 = 1e-11;
/// Solutions closer than this in the unknowns are merged.
pub const DEDUP_TOL: f64 = 1e-7;
/// Eigenvalues of `rho` may dip this far below zero.
pub const PSD_TOL: f64 = 1e-8;

const MAX_ITER: usize = 80;
const START_RADIUS_FACTOR: f64 = 1.05;
const STARTS_PER_BEZOUT: usize = 120;

/// `d!`, the Bezout number of the purity system.
pub fn count_bound(d: usize) -> usize {
    (2..=d).product::<usize>().max(1)
}

/// The purity equations restricted to an affine family of commuting Bloch
/// vectors.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    d: usize,
    family: AffineParametrization,
    constraints: PurityConstraints,
    rho0: CMatrix,
    directions: Vec<CMatrix>,
}

impl ConstraintSystem {
    /// Square system: exactly `d - 1` unknowns must remain.
    pub fn new(family: AffineParametrization, constraints: PurityConstraints) -> Result<Self> {
        let d = family.d;
        if family.arity() != d - 1 {
            return Err(Error::WrongSurplusCount {
                expected: d - 1,
                found: family.arity(),
            });
        }
        Self::general(family, constraints)
    }

    /// System of any arity. With more than `d - 1` unknowns the solutions
    /// form continua and the solver returns isolated representatives.
    pub fn general(family: AffineParametrization, constraints: PurityConstraints) -> Result<Self> {
        let d = family.d;
        if constraints.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: constraints.dim(),
            });
        }
        let adm = constraints.admissibility();
        if !adm.is_admissible() {
            return Err(Error::Inadmissible {
                condition: adm.violated.clone().unwrap_or_default(),
            });
        }
        let basis = su_algebra::basis(d)?;
        let rho0 = basis.expand(1.0 / d as f64, &family.offset);
        let directions = (0..family.arity())
            .map(|i| basis.expand(0.0, &family.basis.column(i).into_owned()))
            .collect();
        Ok(Self {
            d,
            family,
            constraints,
            rho0,
            directions,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.family.arity()
    }

    pub fn is_square(&self) -> bool {
        self.arity() == self.d - 1
    }

    pub fn family(&self) -> &AffineParametrization {
        &self.family
    }

    pub fn constraints(&self) -> &PurityConstraints {
        &self.constraints
    }

    pub fn lambda(&self, x: &DVector<f64>) -> DVector<f64> {
        self.family.lambda(x)
    }

    pub fn bloch(&self, x: &DVector<f64>) -> BlochVector {
        let class = if self.constraints.is_pure() {
            su_algebra::PurityClass::Pure
        } else {
            su_algebra::PurityClass::Mixed
        };
        BlochVector {
            d: self.d,
            lambda: self.lambda(x),
            purity_class: class,
        }
    }

    pub fn rho(&self, x: &DVector<f64>) -> CMatrix {
        let mut rho = self.rho0.clone();
        for (xi, r) in x.iter().zip(&self.directions) {
            rho += r.scale(*xi);
        }
        rho
    }

    /// `(a_2 - c_2, ..., a_d - c_d)`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = linalg::power_traces(&self.rho(x), self.d);
        let e = elementary_from_power_sums(&p);
        DVector::from_fn(self.d - 1, |i, _| e[i + 2] - self.constraints.coefficient(i + 2))
    }

    /// Analytic Jacobian of [`Self::residual`]: `dt_j/dx_i = j Tr(rho^(j-1) R_i)`
    /// pushed through the Newton-Girard recursion.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.d;
        let m = self.arity();
        let rho = self.rho(x);
        let mut powers = vec![linalg::identity(d)];
        for j in 1..d {
            powers.push(&powers[j - 1] * &rho);
        }
        let p: Vec<f64> = (1..=d).map(|j| linalg::trace(&(&powers[j - 1] * &rho)).re).collect();
        let e = elementary_from_power_sums(&p);
        let mut jac = DMatrix::zeros(d - 1, m);
        for (i, r) in self.directions.iter().enumerate() {
            let dp: Vec<f64> = (1..=d)
                .map(|j| j as f64 * linalg::trace_product_re(&powers[j - 1], r))
                .collect();
            let mut de = vec![0.0; d + 1];
            for k in 1..=d {
                let mut acc = 0.0;
                let mut sign = 1.0;
                for j in 1..=k {
                    acc += sign * (de[k - j] * p[j - 1] + e[k - j] * dp[j - 1]);
                    sign = -sign;
                }
                de[k] = acc / k as f64;
            }
            for k in 2..=d {
                jac[(k - 2, i)] = de[k];
            }
        }
        jac
    }

    // Pure targets are solved through idempotency `rho^2 - rho = 0`, whose
    // Jacobian stays regular at rank-one points where the characteristic
    // coefficients are stationary.
    fn idempotency(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.d;
        let rho = self.rho(x);
        let defect = &rho * &rho - &rho;
        let flatten = |m: &CMatrix| {
            DVector::from_iterator(2 * d * d, m.iter().map(|z| z.re).chain(m.iter().map(|z| z.im)))
        };
        let mut jac = DMatrix::zeros(2 * d * d, self.arity());
        for (i, r) in self.directions.iter().enumerate() {
            let dr = &rho * r + r * &rho - r;
            jac.set_column(i, &flatten(&dr));
        }
        (flatten(&defect), jac)
    }

    fn newton_system(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        if self.constraints.is_pure() {
            self.idempotency(x)
        } else {
            (self.residual(x), self.jacobian(x))
        }
    }

    fn newton_norm(&self, x: &DVector<f64>) -> f64 {
        if self.constraints.is_pure() {
            self.idempotency(x).0.norm()
        } else {
            self.residual(x).norm()
        }
    }

    /// Damped Gauss-Newton with minimum-norm steps. Returns the final point
    /// when the residual bound is met.
    fn polish(&self, mut x: DVector<f64>, radius: f64) -> Option<DVector<f64>> {
        let mut norm = self.newton_norm(&x);
        for _ in 0..MAX_ITER {
            if norm < 1e-14 {
                break;
            }
            let (r, jac) = self.newton_system(&x);
            let svd = jac.svd(true, true);
            let smax = svd.singular_values.max();
            if smax == 0.0 {
                return None;
            }
            let step = svd.solve(&r, 1e-12 * smax).ok()?;
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = &x - &step * alpha;
                let tn = self.newton_norm(&trial);
                if tn < norm {
                    x = trial;
                    improved = norm - tn > 1e-3 * norm || tn < 1e-14;
                    norm = tn;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved && norm > 1e-12 {
                if alpha < 1e-8 {
                    return None;
                }
                // stagnating far from a root
                if norm > 1e-6 {
                    return None;
                }
            }
            if self.lambda(&x).norm() > 10.0 * radius {
                return None;
            }
        }
        let res = self.residual(&x).amax();
        let pure_ok = !self.constraints.is_pure() || self.idempotency(&x).0.amax() < 1e-10;
        (res < SOLUTION_TOL && pure_ok).then_some(x)
    }

    fn is_state(&self, x: &DVector<f64>) -> bool {
        linalg::is_positive_semidefinite(&self.rho(x), PSD_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub seed: u64,
    /// Number of starts; defaults to `120 d!`.
    pub starts: Option<usize>,
    /// Stop once this many distinct states are found. Starts are consumed in
    /// fixed batches so the outcome stays a function of the seed.
    pub stop_after: Option<usize>,
}

impl SolveOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            starts: None,
            stop_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    /// Unknown vectors in canonical (lexicographic) order.
    pub solutions: Vec<DVector<f64>>,
    pub residuals: Vec<f64>,
    pub starts_used: usize,
}

impl SolutionSet {
    pub fn count(&self) -> usize {
        self.solutions.len()
    }
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Shifted Halton points mapped onto the Bloch ball intersected with the
/// family.
struct StartGenerator {
    center: DVector<f64>,
    chart: DMatrix<f64>,
    radius: f64,
    shift: Vec<f64>,
}

impl StartGenerator {
    fn new(family: &AffineParametrization, seed: u64) -> Self {
        let m = family.arity();
        let d = family.d;
        let b = &family.basis;
        let btb = b.tr_mul(b) + DMatrix::identity(m, m) * 1e-14;
        let center = btb
            .clone()
            .cholesky()
            .map(|c| -c.solve(&b.tr_mul(&family.offset)))
            .unwrap_or_else(|| DVector::zeros(m));
        let l = btb.cholesky().expect("regularized Gram matrix").l();
        let chart = l
            .transpose()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::identity(m, m));
        let ball = START_RADIUS_FACTOR * BlochVector::max_norm(d);
        let offset_norm = family.lambda(&center).norm();
        let radius = (ball * ball - offset_norm * offset_norm).max(0.0).sqrt().max(1e-3 * ball);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..m).map(|_| rng.random::<f64>()).collect();
        Self {
            center,
            chart,
            radius,
            shift,
        }
    }

    fn point(&self, i: usize) -> DVector<f64> {
        let m = self.center.len();
        let v = DVector::from_fn(m, |k, _| {
            let u = (radical_inverse(i + 1, PRIMES[k % PRIMES.len()]) + self.shift[k]).fract();
            2.0 * u - 1.0
        });
        let n2 = v.norm();
        let y = if n2 > 0.0 {
            &v * (self.radius * v.amax() / n2)
        } else {
            v
        };
        &self.center + &self.chart * y
    }
}

/// Runs the multi-start solve. Deterministic in `(system, options)`.
pub fn solve(sys: &ConstraintSystem, options: SolveOptions) -> Result<SolutionSet> {
    let d = sys.dim();
    let total = options
        .starts
        .unwrap_or(STARTS_PER_BEZOUT * count_bound(d))
        .max(1);
    let radius = START_RADIUS_FACTOR * BlochVector::max_norm(d);

    if sys.arity() == 0 {
        let x = DVector::zeros(0);
        let ok = sys.residual(&x).amax() < SOLUTION_TOL && sys.is_state(&x);
        return Ok(SolutionSet {
            residuals: if ok { vec![sys.residual(&x).amax()] } else { vec![] },
            solutions: if ok { vec![x] } else { vec![] },
            starts_used: 1,
        });
    }

    let starts = StartGenerator::new(sys.family(), options.seed);
    let batch = (8 * d).max(16);
    let mut found: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut used = 0;
    while used < total {
        let end = (used + batch).min(total);
        for i in used..end {
            if let Some(x) = sys.polish(starts.point(i), radius) {
                if sys.is_state(&x) {
                    let r = sys.residual(&x).amax();
                    found.push((x, r));
                }
            }
        }
        used = end;
        if let Some(target) = options.stop_after {
            if dedup(found.clone()).len() >= target {
                break;
            }
        }
    }

    let unique = dedup(found);
    if unique.is_empty() {
        return Err(Error::SolverExhausted { starts: used });
    }
    if sys.is_square() && unique.len() > count_bound(d) {
        return Err(Error::BezoutBoundExceeded {
            found: unique.len(),
            bound: count_bound(d),
        });
    }
    let (solutions, residuals) = unique.into_iter().unzip();
    Ok(SolutionSet {
        solutions,
        residuals,
        starts_used: used,
    })
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Canonical sort, then greedy merge within [`DEDUP_TOL`] keeping the
/// lower-residual representative.
fn dedup(mut found: Vec<(DVector<f64>, f64)>) -> Vec<(DVector<f64>, f64)> {
    found.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let mut kept: Vec<(DVector<f64>, f64)> = Vec::new();
    for (x, r) in found {
        match kept.iter_mut().find(|(k, _)| (k - &x).norm() < DEDUP_TOL) {
            Some(slot) => {
                if r < slot.1 {
                    *slot = (x, r);
                }
            }
            None => kept.push((x, r)),
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    kept
}
