mod common;

use advbound::sinkhorn::{entropic_solve, row_masses, smooth_marginals, schedule, CostModel, EntropicOptions};
use advbound::data::triangle_fixture;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{complex, lp, random_cloud};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn entropic_value_is_within_delta(seed in any::<u64>(), eps in 0.1f64..1.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 6, 3);
        let c = complex(&cloud, eps, 3);
        let model = CostModel::adversarial(&c, &cloud).unwrap();
        let delta = 0.2;
        let (pi, report) = entropic_solve(&cloud, &c, &model, delta, &EntropicOptions::default()).unwrap();
        let exact = lp(&cloud, &c).objective;
        prop_assert!(report.converged);
        prop_assert!((pi.value() - exact).abs() <= delta, "{} vs {}", pi.value(), exact);
        let (_, dp) = schedule(&model, delta).unwrap();
        let smoothed = smooth_marginals(&model, &row_masses(&cloud), dp);
        prop_assert!(pi.marginal_error(&smoothed) <= 1e-10);
    }
}

#[test]
fn practice_parameters_on_the_triangle() {
    let cloud = triangle_fixture();
    let c = complex(&cloud, 0.8, 3);
    let model = CostModel::adversarial(&c, &cloud).unwrap();
    let opts = EntropicOptions {
        eta: Some(0.01),
        delta_prime: Some(1e-3),
        ..Default::default()
    };
    let (_, report) = entropic_solve(&cloud, &c, &model, 0.1, &opts).unwrap();
    assert!((report.risk_lower_bound - 1.0 / 3.0).abs() <= 0.02, "{}", report.risk_lower_bound);
}

#[test]
fn sinkhorn_risk_stays_below_lp_risk() {
    // unsmoothed and rounded, the family is LP-feasible
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let cloud = random_cloud(&mut rng, 8, 3);
        let c = complex(&cloud, 0.6, 3);
        let model = CostModel::adversarial(&c, &cloud).unwrap();
        let opts = EntropicOptions {
            eta: Some(0.02),
            delta_prime: Some(1e-4),
            smooth: false,
            ..Default::default()
        };
        let (pi, report) = entropic_solve(&cloud, &c, &model, 0.1, &opts).unwrap();
        assert!(pi.marginal_error(&row_masses(&cloud)) <= 1e-12);
        let exact = lp(&cloud, &c);
        assert!(report.risk_lower_bound <= exact.risk_lower_bound + 1e-9);
    }
}
