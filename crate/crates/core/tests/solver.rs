mod common;

use approx::assert_abs_diff_eq;
use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use qex_core::commutant::*;
use qex_core::extremal::mean_value;
use qex_core::linalg::{self, CMatrix};
use qex_core::oracle::{all_permutation_means, eigen_oracle};
use qex_core::poly_solver::*;
use qex_core::positivity::PurityConstraints;
use qex_core::su_algebra::decompose;
use qex_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family(m: &CMatrix) -> AffineParametrization {
    let cm = commutant_of(&decompose(m).unwrap()).unwrap();
    AffineParametrization::from_nullspace(&rank_and_nullspace(&cm).unwrap())
}

fn means(m: &CMatrix, sys: &ConstraintSystem, set: &SolutionSet) -> Vec<f64> {
    let op = decompose(m).unwrap();
    sorted_desc(set.solutions.iter().map(|x| mean_value(&op, &sys.bloch(x)).unwrap()).collect())
}

fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
    }
}

#[test]
fn count_bound_is_the_permutation_count() {
    assert_eq!((2..=6).map(count_bound).collect::<Vec<_>>(), vec![2, 6, 24, 120, 720]);
}

#[test]
fn condensate_pure_roots() {
    let h = bec_qutrit(1.0, 1.0);
    let sys = ConstraintSystem::new(family(&h), PurityConstraints::pure(3).unwrap()).unwrap();
    let set = solve(&sys, SolveOptions::seeded(0)).unwrap();
    assert_eq!(set.count(), 3);
    let s5 = 5f64.sqrt();
    assert_close(&means(&h, &sys, &set), &[(1.0 + s5) / 2.0, 1.0, (1.0 - s5) / 2.0], 1e-9);
    for x in &set.solutions {
        let rho = sys.rho(x);
        assert!(linalg::max_abs(&(&rho * &rho - &rho)) < 1e-8);
        assert!(linalg::max_abs(&linalg::commutator(&h, &rho)) < 1e-9);
    }
    assert!(set.residuals.iter().all(|r| *r < SOLUTION_TOL));
}

#[test]
fn condensate_mixed_roots() {
    let (b, c) = (1.0, 1.0);
    let h = bec_qutrit(b, c);
    let pc = PurityConstraints::new(3, vec![29.0 / 100.0, 1.0 / 50.0]).unwrap();
    let sys = ConstraintSystem::new(family(&h), pc).unwrap();
    let set = solve(&sys, SolveOptions::seeded(0)).unwrap();
    assert_eq!(set.count(), 6);
    let s = (b * b + 4.0 * c * c).sqrt();
    let want = sorted_desc(vec![
        11.0 * b / 20.0 + s / 20.0,
        11.0 * b / 20.0 - s / 20.0,
        3.0 * b / 4.0 + 3.0 * s / 20.0,
        3.0 * b / 4.0 - 3.0 * s / 20.0,
        7.0 * b / 10.0 + s / 5.0,
        7.0 * b / 10.0 - s / 5.0,
    ]);
    assert_close(&means(&h, &sys, &set), &want, 1e-9);
    let eig = eigen_oracle(&h).unwrap().eigenvalues;
    let perm = sorted_desc(all_permutation_means(&eig, &[0.5, 0.4, 0.1]).unwrap());
    assert_close(&want, &perm, 1e-12);
}

#[test]
fn alternative_free_pair() {
    let h = bec_qutrit(1.0, 1.0);
    let cm = commutant_of(&decompose(&h).unwrap()).unwrap();
    let ns = with_free_indices(&cm, &[1, 7]).unwrap();
    let sys = ConstraintSystem::new(AffineParametrization::from_nullspace(&ns), PurityConstraints::pure(3).unwrap()).unwrap();
    let set = solve(&sys, SolveOptions::seeded(0)).unwrap();
    assert_eq!(set.count(), 3);
    let target = DVector::from_row_slice(&[-1.0, -1.0 / (2.0 * 3f64.sqrt())]);
    assert!(set.solutions.iter().any(|x| (x - &target).amax() < 1e-9));
}

#[test]
fn qubit_roots() {
    let h = matrix(2, &[z(0.7, 0.0), z(0.2, -0.4), z(0.2, 0.4), z(-1.1, 0.0)]);
    let eig = eigen_oracle(&h).unwrap().eigenvalues;
    let sys = ConstraintSystem::new(family(&h), PurityConstraints::pure(2).unwrap()).unwrap();
    let set = solve(&sys, SolveOptions::seeded(0)).unwrap();
    assert_close(&means(&h, &sys, &set), &eig, 1e-10);

    let gammas = [0.8, 0.2];
    let pc = PurityConstraints::from_spectrum(&gammas).unwrap();
    let sys = ConstraintSystem::new(family(&h), pc).unwrap();
    let set = solve(&sys, SolveOptions::seeded(0)).unwrap();
    let want = sorted_desc(all_permutation_means(&eig, &gammas).unwrap());
    assert_close(&means(&h, &sys, &set), &want, 1e-10);
}

#[test]
fn seeds_fix_the_output() {
    let h = quartit(1.0, 0.5, 0.25);
    let pc = PurityConstraints::new(4, vec![931.0 / 10000.0, 141.0 / 50000.0, 27.0 / 1000000.0]).unwrap();
    let sys = ConstraintSystem::new(family(&h), pc).unwrap();
    let a = solve(&sys, SolveOptions::seeded(0)).unwrap();
    let b = solve(&sys, SolveOptions::seeded(0)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.count(), 24);
    let c = solve(&sys, SolveOptions::seeded(9)).unwrap();
    assert_eq!(c.count(), 24);
    for x in &a.solutions {
        assert!(c.solutions.iter().any(|y| (x - y).amax() < 1e-8));
    }
}

#[test]
fn malformed_systems_are_rejected() {
    let deg = family(&degenerate_qutrit());
    assert!(matches!(
        ConstraintSystem::new(deg.clone(), PurityConstraints::pure(3).unwrap()),
        Err(Error::WrongSurplusCount { expected: 2, found: 4 })
    ));
    assert!(ConstraintSystem::general(deg, PurityConstraints::pure(3).unwrap()).is_ok());
    let h = bec_qutrit(1.0, 1.0);
    assert!(matches!(
        ConstraintSystem::new(family(&h), PurityConstraints::new(3, vec![0.3, 0.0]).unwrap()),
        Err(Error::Inadmissible { .. })
    ));
    assert!(matches!(
        ConstraintSystem::new(family(&h), PurityConstraints::pure(2).unwrap()),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for d in 2..=4 {
        let h = random_hermitian(d, &mut rng);
        let g: Vec<f64> = sorted_desc((0..d).map(|i| (i + 1) as f64).collect());
        let total: f64 = g.iter().sum();
        let gammas: Vec<f64> = g.iter().map(|x| x / total).collect();
        let sys = ConstraintSystem::new(family(&h), PurityConstraints::from_spectrum(&gammas).unwrap()).unwrap();
        let x = DVector::from_fn(d - 1, |i, _| 0.1 * (i as f64 + 1.0));
        let jac = sys.jacobian(&x);
        let step = 1e-6;
        for k in 0..d - 1 {
            let mut up = x.clone();
            let mut down = x.clone();
            up[k] += step;
            down[k] -= step;
            let fd = (sys.residual(&up) - sys.residual(&down)) / (2.0 * step);
            assert!((jac.column(k) - fd).amax() < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interior_constants_give_every_permutation(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(d, &mut rng);
        let rho = random_density(d, &mut rng);
        let gammas = sorted_desc(eigen_oracle(&rho).unwrap().eigenvalues);
        prop_assume!(gammas.windows(2).all(|w| w[0] - w[1] > 1e-2) && gammas[d - 1] > 1e-2);
        let sys = ConstraintSystem::new(family(&h), PurityConstraints::from_spectrum(&gammas).unwrap()).unwrap();
        let set = solve(&sys, SolveOptions::seeded(0)).unwrap();
        prop_assert!(set.count() <= count_bound(d));
        let eig = eigen_oracle(&h).unwrap().eigenvalues;
        let want = sorted_desc(all_permutation_means(&eig, &gammas).unwrap());
        let got = means(&h, &sys, &set);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-8);
        }
        for x in &set.solutions {
            prop_assert!(linalg::max_abs(&linalg::commutator(&h, &sys.rho(x))) < 1e-9 * linalg::max_abs(&h));
        }
    }
}

#[test]
fn traces_of_solutions_hit_the_constants() {
    let h = bec_qutrit(0.4, -1.2);
    let pc = PurityConstraints::new(3, vec![0.2, 0.005]).unwrap();
    let sys = ConstraintSystem::new(family(&h), pc.clone()).unwrap();
    let set = solve(&sys, SolveOptions::seeded(3)).unwrap();
    for x in &set.solutions {
        let got = PurityConstraints::from_density(&sys.rho(x)).unwrap();
        for (a, b) in got.values().iter().zip(pc.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }
}
