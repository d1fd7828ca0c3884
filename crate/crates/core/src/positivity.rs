//! Characteristic-polynomial description of density-matrix positivity.
//!
//! A Hermitian, unit-trace `rho` is a state iff the coefficients `c_k` of its
//! characteristic polynomial (the elementary symmetric functions of its
//! spectrum) are non-negative and the polynomial has only real roots. The
//! latter is decided by the Bezoutian, the Hankel matrix of power sums
//! `t_j = Tr(rho^j)`, whose positive semidefiniteness certifies real roots and
//! whose determinant vanishes exactly when two eigenvalues coincide.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Absolute width of the boundary band, scaled by the magnitude of the terms
/// entering each condition.
pub const BOUNDARY_TOL: f64 = 1e-9;
const PURE_TOL: f64 = 1e-12;

/// Elementary symmetric functions `e_0..=e_n` from power sums `p_1..=p_n`
/// through the Newton-Girard recursion.
pub fn elementary_from_power_sums(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        let mut sign = 1.0;
        for j in 1..=k {
            acc += sign * e[k - j] * p[j - 1];
            sign = -sign;
        }
        e[k] = acc / k as f64;
    }
    e
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Largest admissible `c_k`, reached by the maximally mixed state:
/// `binomial(d, k) / d^k`.
pub fn purity_upper_bound(d: usize, k: usize) -> Result<f64> {
    if !(2..=d).contains(&k) {
        return Err(Error::IndexOutOfRange {
            index: k,
            min: 2,
            max: d,
        });
    }
    Ok(binomial(d, k) / (d as f64).powi(k as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Pure,
    Mixed,
}

/// Target coefficients `(c_2, ..., c_d)` of the characteristic polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurityConstraints {
    d: usize,
    c: Vec<f64>,
    kind: ConstraintKind,
    #[serde(skip)]
    admissibility: OnceLock<Admissibility>,
}

impl PartialEq for PurityConstraints {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.c == other.c
    }
}

impl PurityConstraints {
    pub fn new(d: usize, c: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedDimension {
                d,
                min: 2,
                max: usize::MAX,
            });
        }
        if c.len() != d - 1 {
            return Err(Error::DimensionMismatch {
                expected: d - 1,
                found: c.len(),
            });
        }
        let kind = if c.iter().all(|x| x.abs() <= PURE_TOL) {
            ConstraintKind::Pure
        } else {
            ConstraintKind::Mixed
        };
        Ok(Self {
            d,
            c,
            kind,
            admissibility: OnceLock::new(),
        })
    }

    pub fn pure(d: usize) -> Result<Self> {
        Self::new(d, vec![0.0; d.saturating_sub(1)])
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        let c = (2..=d)
            .map(|k| purity_upper_bound(d, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, c)
    }

    /// Coefficients of `prod (x - gamma_i)` for a prescribed spectrum.
    pub fn from_spectrum(gammas: &[f64]) -> Result<Self> {
        let d = gammas.len();
        let powers: Vec<f64> = (1..=d)
            .map(|j| gammas.iter().map(|g| g.powi(j as i32)).sum())
            .collect();
        let e = elementary_from_power_sums(&powers);
        Self::new(d, e[2..].to_vec())
    }

    pub fn from_density(rho: &CMatrix) -> Result<Self> {
        let d = linalg::ensure_square(rho)?;
        let t = TraceVector::from_density(rho, d)?;
        Self::new(d, newton_girard_coeffs(&t)?)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `(c_2, ..., c_d)`.
    pub fn values(&self) -> &[f64] {
        &self.c
    }

    /// `c_k`, with `c_0 = c_1 = 1` and `c_k = 0` beyond `d`.
    pub fn coefficient(&self, k: usize) -> f64 {
        match k {
            0 | 1 => 1.0,
            _ => self.c.get(k - 2).copied().unwrap_or(0.0),
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn is_pure(&self) -> bool {
        self.kind == ConstraintKind::Pure
    }

    pub fn is_maximally_mixed(&self) -> bool {
        self.c.iter().enumerate().all(|(i, &ck)| {
            let ub = purity_upper_bound(self.d, i + 2).expect("k within range");
            (ck - ub).abs() <= PURE_TOL.max(1e-12 * ub)
        })
    }

    /// Bezoutian admissibility, evaluated once and cached.
    pub fn admissibility(&self) -> &Admissibility {
        self.admissibility.get_or_init(|| is_admissible(self))
    }
}

/// Power sums `(t_1, ..., t_m)` of a state's spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceVector {
    d: usize,
    t: Vec<f64>,
}

impl TraceVector {
    pub fn new(d: usize, t: Vec<f64>) -> Result<Self> {
        if t.len() < d {
            return Err(Error::InvalidTraceVector(format!(
                "need at least {d} power sums, got {}",
                t.len()
            )));
        }
        if (t[0] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTraceVector(format!("t_1 = {} != 1", t[0])));
        }
        Ok(Self { d, t })
    }

    pub fn from_density(rho: &CMatrix, count: usize) -> Result<Self> {
        let d = linalg::ensure_square(rho)?;
        Self::new(d, linalg::power_traces(rho, count.max(d)))
    }

    pub fn from_spectrum(gammas: &[f64], count: usize) -> Result<Self> {
        let d = gammas.len();
        let t = (1..=count.max(d))
            .map(|j| gammas.iter().map(|g| g.powi(j as i32)).sum())
            .collect();
        Self::new(d, t)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    /// `t_j`, with the convention `t_0 = d`.
    pub fn power(&self, j: usize) -> f64 {
        if j == 0 {
            self.d as f64
        } else {
            self.t[j - 1]
        }
    }
}

/// `(a_2, ..., a_d)` from the first `d` power sums.
pub fn newton_girard_coeffs(t: &TraceVector) -> Result<Vec<f64>> {
    let e = elementary_from_power_sums(&t.values()[..t.dim()]);
    Ok(e[2..].to_vec())
}

/// Power sums `t_1..t_{2(d-1)}` implied by the constants. Beyond `t_d` the
/// Cayley-Hamilton recursion `t_k = sum_p (-1)^(p+1) c_p t_(k-p)` applies.
pub fn traces_from_constants(c: &PurityConstraints) -> TraceVector {
    let d = c.dim();
    let len = (2 * (d - 1)).max(d);
    let mut t = vec![0.0; len + 1];
    t[0] = d as f64;
    for k in 1..=len {
        let mut acc = 0.0;
        for p in 1..=k.min(d) {
            let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
            let prev = if p == k { k as f64 } else { t[k - p] };
            acc += sign * c.coefficient(p) * prev;
        }
        t[k] = acc;
    }
    TraceVector {
        d,
        t: t[1..].to_vec(),
    }
}

/// Hankel matrix `B_ij = t_(i+j)` (with `t_0 = d`).
#[derive(Debug, Clone, PartialEq)]
pub struct BezoutianMatrix {
    pub d: usize,
    pub b: DMatrix<f64>,
}

impl BezoutianMatrix {
    pub fn determinant(&self) -> f64 {
        self.b.clone().determinant()
    }
}

pub fn bezoutian(t: &TraceVector) -> Result<BezoutianMatrix> {
    let d = t.dim();
    let need = 2 * (d - 1);
    if t.values().len() < need {
        return Err(Error::InvalidTraceVector(format!(
            "Bezoutian needs {need} power sums, got {}",
            t.values().len()
        )));
    }
    Ok(BezoutianMatrix {
        d,
        b: DMatrix::from_fn(d, d, |i, j| t.power(i + j)),
    })
}

/// `det B_d`; zero signals a repeated eigenvalue.
pub fn degeneracy_indicator(t: &TraceVector) -> Result<f64> {
    Ok(bezoutian(t)?.determinant())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdmissibilityStatus {
    Admissible,
    Boundary,
    Inadmissible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionValue {
    pub name: String,
    pub value: f64,
    pub scale: f64,
}

/// Outcome of the admissibility test. Boundary points belong to the closed
/// admissible region; `is_admissible` is true for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub status: AdmissibilityStatus,
    pub violated: Option<String>,
    pub active: Vec<String>,
    pub conditions: Vec<ConditionValue>,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.status != AdmissibilityStatus::Inadmissible
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionValue> {
        self.conditions.iter().find(|c| c.name == name)
    }

    fn classify(conditions: Vec<ConditionValue>) -> Self {
        let band = |c: &ConditionValue| BOUNDARY_TOL * c.scale;
        let violated = conditions
            .iter()
            .find(|c| c.value < -band(c))
            .map(|c| c.name.clone());
        let active: Vec<String> = conditions
            .iter()
            .filter(|c| c.value.abs() <= band(c))
            .map(|c| c.name.clone())
            .collect();
        let status = if violated.is_some() {
            AdmissibilityStatus::Inadmissible
        } else if !active.is_empty() {
            AdmissibilityStatus::Boundary
        } else {
            AdmissibilityStatus::Admissible
        };
        Self {
            status,
            violated,
            active,
            conditions,
        }
    }
}

/// Monomial `coef * c2^e[0] * c3^e[1] * c4^e[2]`.
#[derive(Debug, Clone, Copy)]
struct Term(f64, [i32; 3]);

fn eval_poly(terms: &[Term], c: [f64; 3]) -> (f64, f64) {
    let mut value = 0.0;
    let mut scale = 0.0;
    for Term(coef, e) in terms {
        let mono = coef * c[0].powi(e[0]) * c[1].powi(e[1]) * c[2].powi(e[2]);
        value += mono;
        scale += mono.abs();
    }
    (value, scale.max(1.0))
}

/// Discriminant of `x^3 - x^2 + c2 x - c3`, i.e. `det B_3`:
/// `c2^2 - 4 c2^3 + 18 c2 c3 - c3 (4 + 27 c3)`.
const QUTRIT_DISCRIMINANT: &[Term] = &[
    Term(1.0, [2, 0, 0]),
    Term(-4.0, [3, 0, 0]),
    Term(18.0, [1, 1, 0]),
    Term(-4.0, [0, 1, 0]),
    Term(-27.0, [0, 2, 0]),
];

// Coefficients of the characteristic polynomial of B_4, expanded in
// (c2, c3, c4). All four must be non-negative for B_4 to be positive
// semidefinite; the last one is det B_4.
const QUARTIT_TRACE: &[Term] = &[
    Term(7.0, [0, 0, 0]),
    Term(-10.0, [0, 0, 1]),
    Term(10.0, [0, 1, 0]),
    Term(3.0, [0, 2, 0]),
    Term(-12.0, [1, 0, 0]),
    Term(6.0, [1, 0, 1]),
    Term(-12.0, [1, 1, 0]),
    Term(11.0, [2, 0, 0]),
    Term(-2.0, [3, 0, 0]),
];

const QUARTIT_SECOND: &[Term] = &[
    Term(9.0, [0, 0, 0]),
    Term(-42.0, [0, 0, 1]),
    Term(-17.0, [0, 0, 2]),
    Term(30.0, [0, 1, 0]),
    Term(34.0, [0, 1, 1]),
    Term(-17.0, [0, 2, 0]),
    Term(-12.0, [0, 2, 1]),
    Term(12.0, [0, 3, 0]),
    Term(-38.0, [1, 0, 0]),
    Term(22.0, [1, 0, 1]),
    Term(-24.0, [1, 0, 2]),
    Term(-12.0, [1, 1, 0]),
    Term(22.0, [1, 1, 1]),
    Term(-16.0, [1, 2, 0]),
    Term(33.0, [2, 0, 0]),
    Term(-18.0, [2, 0, 1]),
    Term(4.0, [2, 1, 0]),
    Term(-19.0, [2, 2, 0]),
    Term(-16.0, [3, 0, 0]),
    Term(20.0, [3, 0, 1]),
    Term(18.0, [3, 1, 0]),
    Term(1.0, [4, 0, 0]),
    Term(-4.0, [5, 0, 0]),
];

const QUARTIT_THIRD: &[Term] = &[
    Term(-6.0, [0, 0, 1]),
    Term(-77.0, [0, 0, 2]),
    Term(64.0, [0, 0, 3]),
    Term(-12.0, [0, 1, 0]),
    Term(106.0, [0, 1, 1]),
    Term(-72.0, [0, 1, 2]),
    Term(-74.0, [0, 2, 0]),
    Term(-18.0, [0, 2, 1]),
    Term(8.0, [0, 3, 0]),
    Term(-27.0, [0, 4, 0]),
    Term(6.0, [1, 0, 1]),
    Term(-46.0, [1, 0, 2]),
    Term(54.0, [1, 1, 0]),
    Term(86.0, [1, 1, 1]),
    Term(-16.0, [1, 2, 0]),
    Term(90.0, [1, 2, 1]),
    Term(18.0, [1, 3, 0]),
    Term(4.0, [2, 0, 0]),
    Term(-48.0, [2, 0, 1]),
    Term(-48.0, [2, 0, 2]),
    Term(-44.0, [2, 1, 1]),
    Term(-45.0, [2, 2, 0]),
    Term(-16.0, [3, 0, 0]),
    Term(54.0, [3, 0, 1]),
    Term(36.0, [3, 1, 0]),
    Term(-4.0, [3, 2, 0]),
    Term(2.0, [4, 0, 0]),
    Term(8.0, [4, 0, 1]),
    Term(-8.0, [5, 0, 0]),
];

const QUARTIT_DETERMINANT: &[Term] = &[
    Term(-27.0, [0, 0, 2]),
    Term(256.0, [0, 0, 3]),
    Term(-192.0, [0, 1, 2]),
    Term(-6.0, [0, 2, 1]),
    Term(-4.0, [0, 3, 0]),
    Term(-27.0, [0, 4, 0]),
    Term(144.0, [1, 0, 2]),
    Term(18.0, [1, 1, 1]),
    Term(144.0, [1, 2, 1]),
    Term(18.0, [1, 3, 0]),
    Term(-128.0, [2, 0, 2]),
    Term(-80.0, [2, 1, 1]),
    Term(1.0, [2, 2, 0]),
    Term(-4.0, [3, 0, 1]),
    Term(-4.0, [3, 2, 0]),
    Term(16.0, [4, 0, 1]),
];

pub const COND_DET_B2: &str = "det B2 >= 0";
pub const COND_DET_B3: &str = "det B3 >= 0";
pub const COND_TRACE_B4: &str = "tr B4 >= 0";
pub const COND_SECOND_B4: &str = "e2(B4) >= 0";
pub const COND_THIRD_B4: &str = "e3(B4) >= 0";
pub const COND_DET_B4: &str = "det B4 >= 0";
pub const COND_PSD_B: &str = "B psd";

fn box_conditions(c: &PurityConstraints) -> Vec<ConditionValue> {
    let d = c.dim();
    let mut out = Vec::with_capacity(2 * (d - 1));
    for k in 2..=d {
        let ck = c.coefficient(k);
        let ub = purity_upper_bound(d, k).expect("k within range");
        out.push(ConditionValue {
            name: format!("c{k} >= 0"),
            value: ck,
            scale: 1.0,
        });
        out.push(ConditionValue {
            name: format!("c{k} <= {}", rational_label(d, k)),
            value: ub - ck,
            scale: 1.0,
        });
    }
    out
}

fn rational_label(d: usize, k: usize) -> String {
    let num = binomial(d, k).round() as u64;
    let den = (d as u64).pow(k as u32);
    let g = gcd(num, den);
    format!("{}/{}", num / g, den / g)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies `c` against the box bounds and the Bezoutian conditions.
///
/// Dimensions 2 to 4 use closed-form inequalities; larger dimensions test
/// `B_d` for positive semidefiniteness with a pivoted Cholesky factorization.
pub fn is_admissible(c: &PurityConstraints) -> Admissibility {
    let d = c.dim();
    let boxed = Admissibility::classify(box_conditions(c));
    if !boxed.is_admissible() {
        return boxed;
    }
    let mut conditions = boxed.conditions;
    let cv = [c.coefficient(2), c.coefficient(3), c.coefficient(4)];
    let mut push = |name: &str, (value, scale): (f64, f64)| {
        conditions.push(ConditionValue {
            name: name.to_string(),
            value,
            scale,
        })
    };
    match d {
        2 => push(COND_DET_B2, (1.0 - 4.0 * cv[0], 1.0 + 4.0 * cv[0].abs())),
        3 => push(COND_DET_B3, eval_poly(QUTRIT_DISCRIMINANT, cv)),
        4 => {
            push(COND_TRACE_B4, eval_poly(QUARTIT_TRACE, cv));
            push(COND_SECOND_B4, eval_poly(QUARTIT_SECOND, cv));
            push(COND_THIRD_B4, eval_poly(QUARTIT_THIRD, cv));
            push(COND_DET_B4, eval_poly(QUARTIT_DETERMINANT, cv));
        }
        _ => {
            let b = bezoutian(&traces_from_constants(c)).expect("full trace vector");
            let scale = b.b.amax().max(1.0);
            push(COND_PSD_B, (psd_margin(&b.b, BOUNDARY_TOL * scale), scale));
        }
    }
    Admissibility::classify(conditions)
}

/// Signed margin of positive semidefiniteness from a diagonally pivoted
/// Cholesky factorization: the smallest pivot taken, or the most negative
/// leftover of the Schur complement once the pivots drop below `tol`.
pub fn psd_margin(b: &DMatrix<f64>, tol: f64) -> f64 {
    let n = b.nrows();
    let mut s = b.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut margin = f64::INFINITY;
    while !remaining.is_empty() {
        let (pos, &piv) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| s[(*a.1, *a.1)].total_cmp(&s[(*b.1, *b.1)]))
            .expect("non-empty");
        let pivot = s[(piv, piv)];
        if pivot <= tol {
            // Remaining Schur complement is numerically singular; it is only
            // PSD if its off-diagonal part vanishes too.
            let off = remaining
                .iter()
                .flat_map(|&i| remaining.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
                .fold(0.0f64, |acc, (i, j)| acc.max(s[(i, j)].abs()));
            let leftover = if off > tol { -off } else { pivot };
            return margin.min(leftover);
        }
        margin = margin.min(pivot);
        remaining.remove(pos);
        for &i in &remaining {
            for &j in &remaining {
                s[(i, j)] -= s[(i, piv)] * s[(piv, j)] / pivot;
            }
        }
    }
    margin
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub c: Vec<f64>,
    pub admissibility: Admissibility,
}

/// Nodes of a uniform grid over the box `0 <= c_k <= binomial(d,k)/d^k`,
/// `resolution` nodes per axis, last axis fastest.
pub fn region_grid(d: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if !(3..=4).contains(&d) {
        return Err(Error::UnsupportedDimension { d, min: 3, max: 4 });
    }
    if resolution < 2 {
        return Err(Error::IndexOutOfRange {
            index: resolution,
            min: 2,
            max: usize::MAX,
        });
    }
    let bounds: Vec<f64> = (2..=d)
        .map(|k| purity_upper_bound(d, k))
        .collect::<Result<_>>()?;
    let axis = |k: usize, i: usize| bounds[k] * i as f64 / (resolution - 1) as f64;
    let nodes = itertools::Itertools::multi_cartesian_product((0..d - 1).map(|_| 0..resolution));
    Ok(nodes
        .map(|idx| idx.iter().enumerate().map(|(k, &i)| axis(k, i)).collect())
        .collect())
}

/// Classifies one grid node.
pub fn sample_point(d: usize, c: Vec<f64>) -> Result<RegionSample> {
    let constraints = PurityConstraints::new(d, c.clone())?;
    Ok(RegionSample {
        c,
        admissibility: is_admissible(&constraints),
    })
}

/// [`region_grid`] with the admissibility of every node.
pub fn sample_region(d: usize, resolution: usize) -> Result<Vec<RegionSample>> {
    region_grid(d, resolution)?
        .into_iter()
        .map(|c| sample_point(d, c))
        .collect()
}
