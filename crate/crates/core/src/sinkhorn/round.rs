//! Projection of an arbitrary coupling family onto the marginal constraints.

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;

use super::{CostModel, CouplingFamily};

/// Scale each class down to `min(1, μ/P)` in turn, then top up the
/// singletons with the remaining deficit. The result matches `mu` exactly
/// and moves at most `L · Σ_i ‖P_i − μ_i‖₁` of mass.
pub fn round_couplings(pi: &CouplingFamily, model: &CostModel, mu: &[f64]) -> Result<CouplingFamily> {
    model.check_marginals(mu)?;
    if pi.log_masses().len() != model.num_tuples() {
        return Err(Error::DimensionMismatch(model.num_tuples(), pi.log_masses().len()));
    }
    let mut log_mass = pi.log_masses().to_vec();
    let log_projection = |log_mass: &[f64], r: usize| -> f64 {
        let inc = model.incidence(r);
        let max = inc.iter().map(|&j| log_mass[j]).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + kahan_sum(inc.iter().map(|&j| (log_mass[j] - max).exp())).ln()
    };

    for class in 0..model.num_classes() {
        for r in model.class_rows(class) {
            let log_z = (mu[r].ln() - log_projection(&log_mass, r)).min(0.0);
            if log_z < 0.0 {
                for &j in model.incidence(r) {
                    log_mass[j] += log_z;
                }
            }
        }
    }
    for r in 0..model.num_rows() {
        let projected = kahan_sum(model.incidence(r).iter().map(|&j| log_mass[j].exp()));
        let err = (mu[r] - projected).max(0.0);
        if err > 0.0 {
            let s = model.singleton(r);
            log_mass[s] = (log_mass[s].exp() + err).ln();
        }
    }
    CouplingFamily::from_log_masses(model, log_mass)
}
