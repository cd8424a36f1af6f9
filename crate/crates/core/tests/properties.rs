//! Randomized structural properties, driven by seeds so failures replay
//! exactly.

use proptest::prelude::*;

use qhv_core::measure::{full_distribution, CylindricalEvent, mu_value};
use qhv_core::operator::{absolute_value, max_abs, trace_product};
use qhv_core::{jordan_decompose, presets, symmetrized_product, tol, HermitianOperator};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetrized_product_ignores_factor_order(seed in any::<u64>(), dim in 2usize..5, n in 2usize..5) {
        let mut rng = presets::seeded_rng(seed);
        let factors: Vec<HermitianOperator> =
            (0..n).map(|_| presets::random_hermitian(dim, &mut rng)).collect();
        let refs: Vec<&HermitianOperator> = factors.iter().collect();
        let forward = symmetrized_product(&refs).unwrap();
        let mut reversed: Vec<&HermitianOperator> = refs.clone();
        reversed.reverse();
        let backward = symmetrized_product(&reversed).unwrap();
        let dev = max_abs(&(forward.matrix() - backward.matrix()));
        let scale = max_abs(forward.matrix()).max(1.0);
        prop_assert!(dev <= 1e-10 * scale, "order dependence {dev}");
    }

    #[test]
    fn full_grids_always_sum_to_one(seed in any::<u64>(), dim in 2usize..4, n in 1usize..4) {
        let mut rng = presets::seeded_rng(seed);
        let rho = presets::random_density(dim, &mut rng);
        let observables: Vec<_> =
            (0..n).map(|_| presets::random_nondegenerate_observable(dim, &mut rng)).collect();
        let dist = full_distribution(&rho, &observables).unwrap();
        prop_assert!((dist.sum() - 1.0).abs() <= tol::NORMALIZATION_ABS);

        // singleton cells add back up to the full grid value
        let full = CylindricalEvent::full(observables.clone()).unwrap();
        let total = mu_value(&rho, &full).unwrap();
        prop_assert!((total - 1.0).abs() <= tol::NORMALIZATION_ABS);
    }

    #[test]
    fn jordan_split_reassembles_and_stays_orthogonal(seed in any::<u64>(), dim in 2usize..6) {
        let mut rng = presets::seeded_rng(seed);
        let z = presets::random_hermitian(dim, &mut rng);
        let pair = jordan_decompose(&z, tol::JORDAN_ZERO_REL);
        let scale = max_abs(z.matrix()).max(1.0);

        let rebuilt = pair.positive_part.matrix() - pair.negative_part.matrix();
        prop_assert!(max_abs(&(rebuilt - z.matrix())) <= 1e-9 * scale);

        let cross = pair.positive_part.matrix() * pair.negative_part.matrix();
        prop_assert!(max_abs(&cross) <= 1e-8 * scale * scale);

        // |Z| = Z+ + Z- and its trace dominates |tr Z|
        let abs = absolute_value(&z);
        let sum = pair.positive_part.matrix() + pair.negative_part.matrix();
        prop_assert!(max_abs(&(abs.matrix() - sum)) <= 1e-9 * scale);
        prop_assert!(abs.trace() + 1e-9 * scale >= z.trace().abs());
    }

    #[test]
    fn measure_of_disjoint_events_is_additive(seed in any::<u64>(), dim in 2usize..4) {
        let mut rng = presets::seeded_rng(seed);
        let rho = presets::random_density(dim, &mut rng);
        let x = presets::random_nondegenerate_observable(dim, &mut rng);
        let y = presets::random_nondegenerate_observable(dim, &mut rng);
        let xv = x.eigenvalues().to_vec();
        let yv = y.eigenvalues().to_vec();

        let mut total = 0.0;
        for &a in &xv {
            for &b in &yv {
                let cell = CylindricalEvent::new(vec![x.clone(), y.clone()], &[vec![a, b]]).unwrap();
                total += mu_value(&rho, &cell).unwrap();
            }
        }
        let everything =
            CylindricalEvent::product(vec![x.clone(), y.clone()], &[xv, yv]).unwrap();
        let direct = mu_value(&rho, &everything).unwrap();
        prop_assert!((total - direct).abs() <= 1e-9);
    }

    #[test]
    fn sign_split_weights_never_go_negative(seed in any::<u64>(), dim in 2usize..4) {
        // tr[rho Z+] and tr[rho Z-] are pairings of positive operators
        let mut rng = presets::seeded_rng(seed);
        let rho = presets::random_density(dim, &mut rng);
        let z = presets::random_hermitian(dim, &mut rng);
        let pair = jordan_decompose(&z, tol::JORDAN_ZERO_REL);
        for part in [&pair.positive_part, &pair.negative_part] {
            let w = trace_product(rho.matrix(), part.matrix()).re;
            prop_assert!(w >= -1e-10, "weight {w}");
        }
    }
}
