use proptest::prelude::*;

use conelab::harmonic::free_drift_g1;
use conelab::oracle::{brute_force_enumerate, dp_survival_prob, BRUTE_FORCE_BUDGET};
use conelab::walk::estimate_survival;
use conelab::{ChamberFamily, HarmonicCone, IncrementDistribution, Surd};

fn family() -> impl Strategy<Value = ChamberFamily> {
    prop_oneof![Just(ChamberFamily::A), Just(ChamberFamily::C), Just(ChamberFamily::D)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_is_homogeneous(f in family(), d in 2usize..5, x in prop::collection::vec(-5.0f64..5.0, 4), t in 0.1f64..10.0) {
        let cone = HarmonicCone::weyl_chamber(f, d).unwrap();
        let x = &x[..d];
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let (h, ht) = (cone.evaluate_h(x), cone.evaluate_h(&tx));
        let p = cone.degree_p() as i32;
        prop_assert!((ht - t.powi(p) * h).abs() <= 1e-9 * (1.0 + ht.abs()));
        prop_assert!((cone.evaluate_h_expanded(x) - h).abs() <= 1e-9 * (1.0 + h.abs()));
    }

    #[test]
    fn h_is_positive_inside(f in family(), d in 2usize..5, seed in any::<u64>()) {
        use rand::SeedableRng;
        let cone = HarmonicCone::weyl_chamber(f, d).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = cone.sample_interior(&mut rng);
        prop_assert!(cone.contains(&x));
        prop_assert!(cone.evaluate_h(&x) > 0.0);
        prop_assert!(cone.boundary_distance(&x).unwrap() > 0.0);
    }

    #[test]
    fn type_a_free_drift_vanishes(d in 2usize..5, nums in prop::collection::vec(-20i64..20, 4), q in 1u32..9) {
        let cone = HarmonicCone::weyl_chamber(ChamberFamily::A, d).unwrap();
        let x: Vec<Surd> = nums[..d].iter().map(|n| Surd::from_ratio(*n, 3)).collect();
        let lazy = IncrementDistribution::lazy_rademacher(q as f64 / 10.0).unwrap();
        for law in [IncrementDistribution::asymmetric_three_point(), lazy] {
            prop_assert_eq!(free_drift_g1(&cone, &law, &x).unwrap(), Surd::from_integer(0));
        }
    }

    #[test]
    fn dp_agrees_with_brute_force(f in family(), a in 0i64..3, gap in 1i64..4, n in 0usize..7) {
        let cone = HarmonicCone::weyl_chamber(f, 2).unwrap();
        let x = [a as f64, (a + gap) as f64];
        prop_assume!(cone.contains(&x));
        let law = IncrementDistribution::rademacher();
        let bf = brute_force_enumerate(&cone, &x, &law, n, BRUTE_FORCE_BUDGET).unwrap();
        let dp = dp_survival_prob(&cone, &x, &law, &[n.max(1)]).unwrap();
        if n >= 1 {
            let exact = num_traits::ToPrimitive::to_f64(&bf.survival).unwrap();
            prop_assert!((dp.estimates[0] - exact).abs() <= 1e-14);
        }
    }

    #[test]
    fn survival_is_a_nonincreasing_probability(f in family(), d in 1usize..4, k in 1i64..5) {
        prop_assume!(f == ChamberFamily::C || d >= 2);
        let cone = HarmonicCone::weyl_chamber(f, d).unwrap();
        let x: Vec<f64> = (0..d).map(|j| (k + 2 * j as i64) as f64).collect();
        prop_assume!(cone.contains(&x));
        let ns: Vec<usize> = (1..=30).collect();
        let c = dp_survival_prob(&cone, &x, &IncrementDistribution::rademacher(), &ns).unwrap();
        prop_assert!(c.estimates.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!(c.estimates.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_ignores_worker_count(seed in any::<u64>(), workers in 2usize..5) {
        let cone = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        let law = IncrementDistribution::asymmetric_three_point();
        let x = [1.0, 2.0];
        let one = estimate_survival(&cone, &x, &law, &[4, 16], 9000, seed, 1).unwrap();
        let many = estimate_survival(&cone, &x, &law, &[4, 16], 9000, seed, workers).unwrap();
        prop_assert_eq!(one.estimates, many.estimates);
        prop_assert_eq!(one.std_errors, many.std_errors);
    }
}
