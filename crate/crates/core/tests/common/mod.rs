#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qex_core::linalg::CMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn matrix(d: usize, rows: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(d, d, rows)
}

/// `b Jz^2 + c Jx` for spin one.
pub fn bec_qutrit(b: f64, c: f64) -> CMatrix {
    let s = c / 2f64.sqrt();
    matrix(
        3,
        &[
            z(b, 0.0), z(s, 0.0), z(0.0, 0.0),
            z(s, 0.0), z(0.0, 0.0), z(s, 0.0),
            z(0.0, 0.0), z(s, 0.0), z(b, 0.0),
        ],
    )
}

/// Qutrit with a doubly degenerate eigenvalue 4/3 and a simple one 20/3.
pub fn degenerate_qutrit() -> CMatrix {
    matrix(
        3,
        &[
            z(2.0, 0.0), z(-1.0, 1.0), z(-1.0, -1.0 / 3.0),
            z(-1.0, -1.0), z(13.0 / 3.0, 0.0), z(1.0, 2.0),
            z(-1.0, 1.0 / 3.0), z(1.0, -2.0), z(3.0, 0.0),
        ],
    )
}

/// Four-level operator, doubly degenerate in pairs at `delta = 0`.
pub fn quartit(a: f64, b: f64, delta: f64) -> CMatrix {
    matrix(
        4,
        &[
            z(a, 0.0), z(delta, 0.0), z(b, a), z(b, a),
            z(delta, 0.0), z(a, 0.0), z(-b, a), z(b, -a),
            z(b, -a), z(-b, -a), z(b, 0.0), z(0.0, 0.0),
            z(b, -a), z(b, a), z(0.0, 0.0), z(b, 0.0),
        ],
    )
}

/// `(G + G^dagger)/2` with standard normal-ish entries.
pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&g + g.adjoint()).scale(0.5)
}

/// `G G^dagger / Tr(G G^dagger)`.
pub fn random_density(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p = &g * g.adjoint();
    let tr = (0..d).map(|i| p[(i, i)].re).sum::<f64>();
    p.unscale(tr)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let d = values.len();
    DMatrix::from_fn(d, d, |i, j| if i == j { z(values[i], 0.0) } else { z(0.0, 0.0) })
}

pub fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `U diag(values) U^dagger` with `U` the eigenbasis of a random operator.
pub fn with_spectrum(values: &[f64], rng: &mut ChaCha8Rng) -> CMatrix {
    let d = values.len();
    let u = qex_core::oracle::eigen_oracle(&random_hermitian(d, rng)).unwrap().eigenvectors;
    &u * real_diag(values) * u.adjoint()
}
