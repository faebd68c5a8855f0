mod common;

use advbound::complex::count_by_order;
use advbound::lp::{assemble_lp, recover_attack};
use advbound::oracle::{brute_force_interactions, exact_lp, rational_marginals, MAX_ORACLE_COLUMNS};
use advbound::Metric;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{complex, lp, random_cloud};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn risk_is_monotone_in_eps(seed in any::<u64>(), e1 in 0.05f64..1.5, e2 in 0.05f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 8, 3);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = lp(&cloud, &complex(&cloud, lo, 3)).risk_lower_bound;
        let b = lp(&cloud, &complex(&cloud, hi, 3)).risk_lower_bound;
        prop_assert!(a <= b + 1e-9, "eps {} -> {}, eps {} -> {}", lo, a, hi, b);
    }

    #[test]
    fn risk_is_monotone_in_level(seed in any::<u64>(), eps in 0.05f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 9, 4);
        let risks: Vec<f64> = (1..=4).map(|l| lp(&cloud, &complex(&cloud, eps, l)).risk_lower_bound).collect();
        prop_assert!(risks[0].abs() < 1e-12);
        for w in risks.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-9, "{:?}", risks);
        }
    }

    #[test]
    fn complex_matches_brute_force(seed in any::<u64>(), eps in 0.05f64..1.5, linf in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 8, 4);
        let metric = if linf { Metric::LInf } else { Metric::L2 };
        let fast = advbound::build_complex(&cloud, eps, metric, 4, &Default::default()).unwrap();
        let slow = brute_force_interactions(&cloud, eps, metric, 4).unwrap();
        prop_assert_eq!(fast.member_sets(), slow.member_sets());
    }

    #[test]
    fn simplex_matches_rational_oracle(seed in any::<u64>(), eps in 0.05f64..1.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 6, 3);
        let c = complex(&cloud, eps, 3);
        prop_assume!(c.total_count() <= MAX_ORACLE_COLUMNS);
        let problem = assemble_lp(&c, &cloud).unwrap();
        let exact = exact_lp(&problem, &rational_marginals(problem.marginals()).unwrap()).unwrap();
        let s = lp(&cloud, &c);
        prop_assert!((s.objective - exact.objective_f64()).abs() <= 1e-7);
    }

    #[test]
    fn attack_reproduces_the_class_measures(seed in any::<u64>(), eps in 0.05f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 10, 4);
        let c = complex(&cloud, eps, 3);
        let s = lp(&cloud, &c);
        let plan = recover_attack(&s, &c, &cloud).unwrap();
        prop_assert!((plan.barycenter_mass() - s.objective).abs() < 1e-8);
        for class in 0..cloud.num_classes() {
            let want: f64 = cloud.class_masses(class).iter().sum();
            prop_assert!((plan.class_mass(class) - want).abs() < 1e-8);
            for atom in &plan.attacked[class] {
                let it = c.iter().nth(atom.column).unwrap();
                prop_assert!(it.contains_class(class));
            }
        }
        for (k, m) in &plan.mass_by_order {
            prop_assert!((m - s.mass_by_order.get(k).copied().unwrap_or(0.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn interaction_counts_grow_with_eps(seed in any::<u64>(), e1 in 0.05f64..1.5, e2 in 0.05f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 10, 4);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = count_by_order(&complex(&cloud, lo, 4));
        let b = count_by_order(&complex(&cloud, hi, 4));
        for (k, n) in a {
            prop_assert!(n <= b.get(&k).copied().unwrap_or(0));
        }
    }
}

#[test]
fn witnesses_lie_within_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let cloud = random_cloud(&mut rng, 10, 4);
        let c = complex(&cloud, 0.7, 4);
        for it in c.iter() {
            for m in &it.members {
                let d = advbound::metric::distance(&it.witness, cloud.point(m.point), Metric::L2).unwrap();
                assert!(d <= 0.7 * (1.0 + 1e-9));
            }
        }
    }
}
