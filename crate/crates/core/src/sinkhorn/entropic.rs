//! Full entropic solve: smoothing, greedy Sinkhorn, rounding.

use std::time::Duration;

use crate::cloud::LabeledPointCloud;
use crate::complex::InteractionComplex;
use crate::error::{invalid, Result};
use crate::numeric::kahan_sum;

use super::greedy::{greedy_sinkhorn, Observer, SinkhornOptions};
use super::{couplings_from_potentials, round_couplings, row_masses, CostModel, CouplingFamily, SinkhornReport};

#[derive(Clone, Debug, PartialEq)]
pub struct EntropicOptions {
    /// Overrides the scheduled η.
    pub eta: Option<f64>,
    /// Overrides the scheduled δ′.
    pub delta_prime: Option<f64>,
    pub max_iters: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Project the output onto the (smoothed) marginals.
    pub round: bool,
    /// Lift the marginals away from zero before solving. Without smoothing
    /// the rounded output satisfies the raw marginals and is LP-feasible.
    pub smooth: bool,
    pub record_dual: bool,
}

impl Default for EntropicOptions {
    fn default() -> Self {
        Self {
            eta: None,
            delta_prime: None,
            max_iters: None,
            time_limit: None,
            round: true,
            smooth: true,
            record_dual: false,
        }
    }
}

/// `log(K · C* · n)` with `n = max n_i` and `C* = max n_i / n`, floored at
/// `log 2` so a single-point instance keeps a finite schedule.
pub fn log_kcn(model: &CostModel) -> f64 {
    let k = model.num_classes();
    let n = (0..k).map(|c| model.class_size(c)).max().unwrap_or(1);
    // with n = max n_i, C* = max n_i / n = 1
    (k as f64 * n as f64).max(2.0).ln()
}

/// `(η, δ′)` guaranteeing a `δ`-approximate value.
pub fn schedule(model: &CostModel, delta: f64) -> Result<(f64, f64)> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    let l = model.level() as f64;
    let eta = (delta / 2.0) / (2.0 * l * log_kcn(model));
    let delta_prime = (delta / 2.0) / (2.0 * l * model.max_coefficient());
    Ok((eta, delta_prime))
}

/// `μ̃_i = (1 − δ′/4K) μ_i + δ′ ‖μ_i‖ / (4K n_i)`.
pub fn smooth_marginals(model: &CostModel, mu: &[f64], delta_prime: f64) -> Vec<f64> {
    let k = model.num_classes() as f64;
    let mut out = mu.to_vec();
    for c in 0..model.num_classes() {
        let rows = model.class_rows(c);
        let mass = kahan_sum(mu[rows.clone()].iter().copied());
        let lift = delta_prime * mass / (4.0 * k * model.class_size(c) as f64);
        for r in rows {
            out[r] = (1.0 - delta_prime / (4.0 * k)) * mu[r] + lift;
        }
    }
    out
}

/// `2 + ⌈G(0) / min_i ‖μ_i‖₁⌉ + 14 K² R̄ / (η δ′)` with
/// `R̄ = L − η log min μ + η L log(K C* n)`.
pub fn iteration_bound(model: &CostModel, mu: &[f64], eta: f64, delta_prime: f64) -> Result<f64> {
    model.check_marginals(mu)?;
    let g0 = kahan_sum((0..model.num_tuples()).map(|j| (-(1.0 + model.cost(j)) / eta).exp()));
    let min_class = (0..model.num_classes())
        .map(|c| kahan_sum(mu[model.class_rows(c)].iter().copied()))
        .fold(f64::INFINITY, f64::min);
    let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let l = model.level() as f64;
    let k = model.num_classes() as f64;
    let r_bar = l - eta * min_mu.ln() + eta * l * log_kcn(model);
    Ok(2.0 + (g0 / min_class).ceil() + 14.0 * k * k * r_bar / (eta * delta_prime))
}

/// Bounds `(lower, upper)` every potential obeys after at least one update.
pub fn potential_bounds(model: &CostModel, mu: &[f64], eta: f64) -> (f64, f64) {
    let l = model.level() as f64;
    let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
    (-(l - 1.0) + eta * min_mu.ln() - eta * l * log_kcn(model), 1.0)
}

/// Approximate the truncated LP value to within `delta`.
///
/// Returns the final couplings (rounded unless disabled) and the run report.
/// With smoothing on, the couplings satisfy the smoothed marginals, not the
/// raw ones.
pub fn entropic_solve(
    cloud: &LabeledPointCloud,
    complex: &InteractionComplex,
    model: &CostModel,
    delta: f64,
    options: &EntropicOptions,
) -> Result<(CouplingFamily, SinkhornReport)> {
    entropic_solve_observed(cloud, complex, model, delta, options, None)
}

/// [`entropic_solve`] with a per-iteration observer on the Sinkhorn stage.
pub fn entropic_solve_observed(
    cloud: &LabeledPointCloud,
    complex: &InteractionComplex,
    model: &CostModel,
    delta: f64,
    options: &EntropicOptions,
    observer: Option<&mut Observer<'_>>,
) -> Result<(CouplingFamily, SinkhornReport)> {
    crate::lp::check_compatible(complex, cloud)?;
    let (mut eta, mut delta_prime) = schedule(model, delta)?;
    if let Some(e) = options.eta {
        eta = e;
    }
    if let Some(d) = options.delta_prime {
        delta_prime = d;
    }
    let mu = row_masses(cloud);
    let smoothed = if options.smooth {
        smooth_marginals(model, &mu, delta_prime)
    } else {
        mu
    };
    let sinkhorn = SinkhornOptions {
        eta,
        delta_prime: delta_prime / 2.0,
        max_iters: options.max_iters,
        time_limit: options.time_limit,
        record_dual: options.record_dual,
    };
    let (g, mut report) = greedy_sinkhorn(&smoothed, model, &sinkhorn, observer)?;
    let mut pi = couplings_from_potentials(&g, model)?;
    if options.round {
        pi = round_couplings(&pi, model, &smoothed)?;
    }
    report.delta_prime = delta_prime;
    report.value = pi.value();
    report.risk_lower_bound = 1.0 - pi.value();
    report.rounded = options.round;
    Ok((pi, report))
}
