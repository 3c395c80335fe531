//! Randomized invariants. Inputs are drawn from seeded streams so a failing
//! case shrinks to a (seed, size) pair that reproduces exactly.

use conecalc::cones::{is_ppt, is_psd, matrix_membership, sample_matrix, ConeId, Status};
use conecalc::matrix::{herm_eig, partial_transpose, Side};
use conecalc::{rng, CMat, LinMap, SearchOpts};
use proptest::prelude::*;

fn herm(seed: u64, d: usize) -> CMat {
    rng::random_hermitian(&mut rng::stream(seed, "prop-herm", d as u64), d)
}

fn map(seed: u64, n: usize) -> LinMap {
    let g = rng::ginibre(&mut rng::stream(seed, "prop-map", n as u64), n * n, n * n);
    LinMap::from_choi(n, g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), d in 1usize..10) {
        let x = herm(seed, d);
        let e = herm_eig(&x, 1e-10).unwrap();
        prop_assert!(e.reconstruct().distance(&x) <= 1e-10 * x.frobenius_norm().max(1.0));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let v = &e.vectors;
        prop_assert!(v.adjoint().matmul(v).distance(&CMat::identity(d)) <= 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), m in 1usize..4, n in 1usize..4) {
        let x = herm(seed, m * n);
        for side in [Side::First, Side::Second] {
            let once = partial_transpose(&x, (m, n), side).unwrap();
            let twice = partial_transpose(&once, (m, n), side).unwrap();
            prop_assert_eq!(&twice, &x);
        }
    }

    #[test]
    fn choi_of_action_round_trips(seed in any::<u64>(), n in 1usize..4) {
        let phi = map(seed, n);
        let back = LinMap::from_action(n, |x| phi.apply(x).unwrap()).unwrap();
        prop_assert!(back.distance(&phi) <= 1e-10 * phi.choi().frobenius_norm().max(1.0));
    }

    #[test]
    fn composition_matches_sequential_application(seed in any::<u64>(), n in 1usize..4) {
        let (a, b) = (map(seed, n), map(seed ^ 0x5bd1e995, n));
        let x = rng::ginibre(&mut rng::stream(seed, "prop-x", 0), n, n);
        let direct = a.compose(&b).unwrap().apply(&x).unwrap();
        let seq = a.apply(&b.apply(&x).unwrap()).unwrap();
        prop_assert!(direct.distance(&seq) <= 1e-9 * seq.frobenius_norm().max(1.0));
    }

    #[test]
    fn flip_identity_holds(seed in any::<u64>(), n in 1usize..4) {
        let r = map(seed, n).verify_flip_identity(1e-10);
        prop_assert!(r.pass, "gap {} at scale {}", r.gap, r.scale);
    }

    #[test]
    fn kraus_form_reproduces_hermiticity_preserving_maps(seed in any::<u64>(), n in 1usize..4) {
        let c = herm(seed, n * n);
        let phi = LinMap::from_choi(n, c).unwrap();
        let pairs = phi.kraus_from_choi();
        prop_assert!(phi.kraus_residual(&pairs) <= 1e-10 * phi.choi().frobenius_norm().max(1.0));
    }

    #[test]
    fn verdicts_agree_with_spectra(seed in any::<u64>(), n in 2usize..4) {
        let x = herm(seed, n * n);
        let opts = SearchOpts::default();
        let psd = matrix_membership(ConeId::Psd, &x, (n, n), &opts).unwrap();
        let direct = is_psd(&x, &opts.tol).unwrap();
        prop_assert_eq!(psd.status, direct.status);
        if let Some(w) = &psd.witness {
            prop_assert!(w.evaluate(&x, (n, n)).unwrap() < 0.0);
        }
        let ppt = matrix_membership(ConeId::Ppt, &x, (n, n), &opts).unwrap();
        prop_assert_eq!(ppt.status, is_ppt(&x, (n, n), &opts.tol).unwrap().status);
    }

    #[test]
    fn sampled_members_are_accepted(seed in any::<u64>()) {
        let opts = SearchOpts::default();
        let mut r = rng::stream(seed, "prop-sample", 0);
        for cone in [ConeId::Psd, ConeId::Ppt, ConeId::Sep] {
            let x = sample_matrix(cone, (2, 2), &mut r).unwrap();
            let v = matrix_membership(cone, &x, (2, 2), &opts).unwrap();
            prop_assert_eq!(v.status, Status::Member, "{}", cone);
        }
    }

    #[test]
    fn refutations_carry_checkable_witnesses(seed in any::<u64>()) {
        // I - λE stops being PSD once λ > 1/2 at n = 2, while its partial
        // transpose I - λF stays PSD up to λ = 1
        let lambda = 0.55 + (seed % 1000) as f64 * 4e-4;
        let x = LinMap::reduction(2, lambda).into_choi();
        let opts = SearchOpts::default().with_seed(seed);
        prop_assert!(matrix_membership(ConeId::Ppt, &x, (2, 2), &opts).unwrap().is_member());
        for cone in [ConeId::Psd, ConeId::Sep] {
            let v = matrix_membership(cone, &x, (2, 2), &opts).unwrap();
            prop_assert_eq!(v.status, Status::NotMember, "{}", cone);
            let w = v.witness.unwrap();
            prop_assert!(w.evaluate(&x, (2, 2)).unwrap() < 0.0);
        }
    }
}
