mod common;

use approx::assert_abs_diff_eq;
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qex_core::commutant::*;
use qex_core::linalg;
use qex_core::su_algebra::*;
use qex_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn numeric_rank(m: &DMatrix<f64>) -> usize {
    let s = m.clone().singular_values();
    let top = s.max();
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > RANK_TOL * top).count()
}

fn commutant(m: &nalgebra::DMatrix<num_complex::Complex64>) -> CommutantMatrix {
    commutant_of(&decompose(m).unwrap()).unwrap()
}

fn commutator_of_family(h: &linalg::CMatrix, ns: &NullSpaceParametrization, free: &DVector<f64>) -> f64 {
    let rho = basis(ns.d).unwrap().expand(1.0 / ns.d as f64, &ns.lambda(free));
    linalg::max_abs(&linalg::commutator(h, &rho))
}

#[test]
fn construction_is_skew_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 2..=6 {
        let cm = commutant(&random_hermitian(d, &mut rng));
        assert_eq!(cm.m, -cm.m.transpose());
    }
}

#[test]
fn qubit_kernel_is_parallel_to_the_operator() {
    let op = HermitianOperator::new(2, 0.3, DVector::from_row_slice(&[0.4, -0.7, 1.1])).unwrap();
    let cm = commutant_of(&op).unwrap();
    let ns = rank_and_nullspace(&cm).unwrap();
    assert_eq!(ns.rank, 2);
    assert_eq!(ns.free_count(), 1);
    let v = ns.lambda(&DVector::from_element(1, 1.0));
    let cross = nalgebra::Vector3::new(v[0], v[1], v[2]).cross(&nalgebra::Vector3::new(0.4, -0.7, 1.1));
    assert!(cross.amax() < 1e-12);

    let flat = HermitianOperator::new(2, 0.0, DVector::from_row_slice(&[0.4, -0.7, 0.0])).unwrap();
    let ns = rank_and_nullspace(&commutant_of(&flat).unwrap()).unwrap();
    assert_eq!(ns.free_count(), 1);
    let v = ns.lambda(&DVector::from_element(1, 1.0));
    assert!(v.norm() > 0.0);
    assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(v[0] * -0.7 - v[1] * 0.4, 0.0, epsilon = 1e-14);
}

#[test]
fn condensate_rank() {
    let cm = commutant(&bec_qutrit(1.0, 1.0));
    assert_eq!(cm.rank(), 6);
    let g = gram_matrix(&cm.source, structure_tensor(3).unwrap()).unwrap();
    assert_eq!(numeric_rank(&g), 6);
    let ns = rank_and_nullspace(&cm).unwrap();
    assert_eq!(ns.free_count(), 2);
    assert!(!ns.near_degenerate);
    assert!(classify_orbit(ns.rank, 3).unwrap().is_nondegenerate);
}

#[test]
fn degenerate_qutrit_keeps_the_diagonal_block_free() {
    let ns = rank_and_nullspace(&commutant(&degenerate_qutrit())).unwrap();
    assert_eq!(ns.rank, 4);
    assert_eq!(ns.free_indices, vec![4, 5, 6, 7]);
    assert_eq!(classify_orbit(4, 3).unwrap().patterns, vec![vec![2, 1]]);
}

#[test]
fn paired_four_level_operator() {
    let cm = commutant(&quartit(1.0, 0.5, 0.0));
    let ns = rank_and_nullspace(&cm).unwrap();
    assert_eq!(ns.rank, 8);
    assert_eq!(ns.free_indices, vec![6, 9, 10, 11, 12, 13, 14]);
    let g = gram_matrix(&cm.source, structure_tensor(4).unwrap()).unwrap();
    assert_eq!(numeric_rank(&g), 8);
    assert_eq!(classify_orbit(8, 4).unwrap().patterns, vec![vec![2, 2]]);
}

#[test]
fn scalar_operator_has_zero_commutant() {
    for d in 2..=4 {
        let op = decompose(&linalg::identity(d).scale(2.5)).unwrap();
        let cm = commutant_of(&op).unwrap();
        assert!(cm.m.amax() == 0.0);
        assert_eq!(cm.rank(), 0);
        let ns = rank_and_nullspace(&cm).unwrap();
        assert_eq!(ns.free_count(), d * d - 1);
        assert!(gram_matrix(&op, structure_tensor(d).unwrap()).unwrap().amax() == 0.0);
    }
    assert_eq!(classify_orbit(0, 2).unwrap().patterns, vec![vec![2]]);
}

#[test]
fn orbit_lookup() {
    assert_eq!(classify_orbit(6, 3).unwrap().patterns, vec![vec![1, 1, 1]]);
    assert_eq!(classify_orbit(2, 2).unwrap().free_count(), 1);
    assert!(matches!(classify_orbit(4, 4), Err(Error::OrbitNotTabulated { .. })));
    assert_eq!(classify_orbit(18, 6).unwrap().patterns.len(), 2);
}

#[test]
fn every_multiplicity_pattern_up_to_four_levels() {
    let rows: &[(&[f64], usize)] = &[
        (&[1.0, 1.0], 0),
        (&[1.0, -1.0], 2),
        (&[2.0, 2.0, 2.0], 0),
        (&[2.0, 2.0, -1.0], 4),
        (&[2.0, 0.5, -1.0], 6),
        (&[1.0, 1.0, 1.0, 1.0], 0),
        (&[1.0, 1.0, 1.0, -2.0], 6),
        (&[1.0, 1.0, -2.0, -2.0], 8),
        (&[1.0, 1.0, 0.0, -2.0], 10),
        (&[1.5, 1.0, 0.0, -2.0], 12),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (spec, rank) in rows {
        let d = spec.len();
        let h = if *rank == 0 { real_diag(spec) } else { with_spectrum(spec, &mut rng) };
        let cm = commutant(&h);
        assert_eq!(cm.rank(), *rank, "{spec:?}");
        let g = gram_matrix(&cm.source, structure_tensor(d).unwrap()).unwrap();
        assert_eq!(numeric_rank(&g), *rank, "{spec:?}");
        let mut mult: Vec<usize> = spec.iter().dedup_counts();
        mult.sort_by(|a, b| b.cmp(a));
        assert!(classify_orbit(*rank, d).unwrap().patterns.contains(&mult));
    }
}

trait DedupCounts {
    fn dedup_counts(self) -> Vec<usize>;
}

impl<'a, I: Iterator<Item = &'a f64>> DedupCounts for I {
    fn dedup_counts(self) -> Vec<usize> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &x in self {
            match out.iter_mut().find(|(v, _)| *v == x) {
                Some((_, n)) => *n += 1,
                None => out.push((x, 1)),
            }
        }
        out.into_iter().map(|(_, n)| n).collect()
    }
}

#[test]
fn chosen_free_indices() {
    let cm = commutant(&bec_qutrit(1.0, 1.0));
    let ns = with_free_indices(&cm, &[1, 7]).unwrap();
    assert_eq!(ns.free_indices, vec![1, 7]);
    let h = bec_qutrit(1.0, 1.0);
    let free = DVector::from_row_slice(&[0.3, -0.2]);
    assert!(commutator_of_family(&h, &ns, &free) < 1e-12);
    assert!(matches!(with_free_indices(&cm, &[0, 2]), Err(Error::InvalidFreeSet { .. })));
    assert!(matches!(with_free_indices(&cm, &[1, 8]), Err(Error::IndexOutOfRange { .. })));
}

#[test]
fn rank_of_commutant_and_gram_agree_on_random_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for d in 2..=6 {
        let f = structure_tensor(d).unwrap();
        for _ in 0..500 {
            let op = decompose(&random_hermitian(d, &mut rng)).unwrap();
            let cm = build_commutant(&op, f).unwrap();
            let g = gram_matrix(&op, f).unwrap();
            assert_eq!(cm.rank(), numeric_rank(&g));
            assert_eq!(cm.rank() % 2, 0);
        }
    }
}

#[test]
fn nondegenerate_operators_leave_d_minus_one_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for d in 2..=6 {
        for _ in 0..20 {
            let h = random_hermitian(d, &mut rng);
            let eig = qex_core::oracle::eigen_oracle(&h).unwrap().eigenvalues;
            assert!(eig.windows(2).all(|w| w[0] - w[1] > 1e-6));
            let ns = rank_and_nullspace(&commutant(&h)).unwrap();
            assert_eq!(ns.rank, d * (d - 1));
            assert_eq!(ns.free_count(), d - 1);
        }
    }
}

#[test]
fn maximally_mixed_is_always_critical() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for d in 2..=6 {
        let h = random_hermitian(d, &mut rng);
        let cm = commutant(&h);
        assert_eq!(cm.relative_residual(&DVector::zeros(d * d - 1)), 0.0);
        let rho = linalg::identity(d).unscale(d as f64);
        assert_eq!(linalg::max_abs(&linalg::commutator(&h, &rho)), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_members_commute(seed in any::<u64>(), d in 2usize..=6, degenerate in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = if degenerate {
            let mut spec: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            spec[1] = spec[0];
            with_spectrum(&spec, &mut rng)
        } else {
            random_hermitian(d, &mut rng)
        };
        let cm = commutant(&h);
        let ns = rank_and_nullspace(&cm).unwrap();
        prop_assert_eq!(ns.free_count(), d * d - 1 - ns.rank);
        let free = DVector::from_fn(ns.free_count(), |_, _| rng.random_range(-1.0..1.0));
        let scale = linalg::max_abs(&h);
        prop_assert!(commutator_of_family(&h, &ns, &free) < 1e-9 * scale);
        prop_assert!(cm.relative_residual(&ns.lambda(&free)) < NULL_TOL);
        let basis = ns.kernel_basis();
        prop_assert!((&cm.m * &basis).amax() < NULL_TOL * cm.m.amax());
    }
}
