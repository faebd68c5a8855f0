//! Greedy coordinate descent on the dual, one class per iteration.

use std::time::{Duration, Instant};

use crate::error::{invalid, Error, Result};
use crate::numeric::kahan_sum;

use super::{dual_objective, iteration_bound, CostModel, DualPotentials, SinkhornReport, LOG_FLOOR};

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornOptions {
    pub eta: f64,
    /// Stop once `Σ_i ‖μ_i − P_i‖₁` is at most this.
    pub delta_prime: f64,
    /// `None` uses ten times the theoretical iteration bound.
    pub max_iters: Option<usize>,
    /// Wall-clock limit; the run stops unconverged once it is exceeded.
    pub time_limit: Option<Duration>,
    /// Record the dual objective before the first and after every update.
    pub record_dual: bool,
}

impl SinkhornOptions {
    pub fn new(eta: f64, delta_prime: f64) -> Self {
        Self {
            eta,
            delta_prime,
            max_iters: None,
            time_limit: None,
            record_dual: false,
        }
    }
}

/// State after one greedy update, handed to an observer.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    /// Zero-based update index.
    pub iteration: usize,
    pub class: usize,
    /// `D(μ_I ‖ P_I)` before the update.
    pub kl: f64,
    /// Marginal error before the update.
    pub error: f64,
    /// `G(g_new) − G(g_old)`, from the tuples and rows the update touched.
    pub dual_change: f64,
    /// Magnitude of the quantities `dual_change` is computed from: the old
    /// and new masses of the touched tuples plus `Σ μ |Δg| / η`.
    pub dual_change_scale: f64,
    pub potentials: &'a [f64],
}

pub type Observer<'a> = dyn FnMut(&IterationEvent<'_>) + 'a;

/// Greedy multi-marginal Sinkhorn from `g = 0`.
///
/// Each iteration picks the class whose marginal is furthest from `μ` in
/// generalized KL (ties to the smallest index) and rescales its potential so
/// that marginal is matched exactly.
pub fn greedy_sinkhorn(
    mu: &[f64],
    model: &CostModel,
    options: &SinkhornOptions,
    observer: Option<&mut Observer<'_>>,
) -> Result<(DualPotentials, SinkhornReport)> {
    let SinkhornOptions {
        eta, delta_prime, ..
    } = *options;
    if eta <= 0.0 || !eta.is_finite() {
        return Err(invalid("eta", format!("must be positive, got {eta}")));
    }
    if !(delta_prime > 0.0 && delta_prime < 0.5) {
        return Err(invalid("delta_prime", format!("must lie in (0, 1/2), got {delta_prime}")));
    }
    model.check_marginals(mu)?;
    let max_iters = match options.max_iters {
        Some(m) => m,
        None => {
            let bound = 10.0 * iteration_bound(model, mu, eta, delta_prime)?;
            if bound >= usize::MAX as f64 { usize::MAX } else { bound.ceil() as usize }
        }
    };

    let start = Instant::now();
    let mut state = State::new(model, mu, eta);
    let mut trajectory = options.record_dual.then(Vec::new);
    let mut observer = observer;
    let mut t = 0;
    let mut timed_out = false;
    let (converged, error) = loop {
        if let Some(tr) = trajectory.as_mut() {
            tr.push(dual_objective(&state.potentials(), model, mu)?);
        }
        let error = state.error();
        if !error.is_finite() {
            return Err(Error::Numerical(format!("marginal error is {error} at iteration {t}")));
        }
        if error <= delta_prime {
            break (true, error);
        }
        if t >= max_iters {
            break (false, error);
        }
        if options.time_limit.is_some_and(|limit| start.elapsed() > limit) {
            timed_out = true;
            break (false, error);
        }
        let class = state.greedy_class();
        let kl = state.kl[class];
        let (dual_change, dual_change_scale) = state.update(class, observer.is_some());
        if let Some(obs) = observer.as_mut() {
            obs(&IterationEvent {
                iteration: t,
                class,
                kl,
                error,
                dual_change,
                dual_change_scale,
                potentials: &state.g,
            });
        }
        t += 1;
    };

    let g = state.potentials();
    let pi = super::couplings_from_potentials(&g, model)?;
    let report = SinkhornReport {
        iterations: t,
        final_error: error,
        converged,
        timed_out,
        eta,
        delta_prime,
        risk_lower_bound: 1.0 - pi.value(),
        value: pi.value(),
        rounded: false,
        dual_trajectory: trajectory,
    };
    Ok((g, report))
}

struct State<'a> {
    model: &'a CostModel,
    mu: &'a [f64],
    log_mu: Vec<f64>,
    eta: f64,
    g: Vec<f64>,
    log_pi: Vec<f64>,
    log_p: Vec<f64>,
    kl: Vec<f64>,
    err: Vec<f64>,
    stamp: Vec<usize>,
    epoch: usize,
}

impl<'a> State<'a> {
    fn new(model: &'a CostModel, mu: &'a [f64], eta: f64) -> Self {
        let rows = model.num_rows();
        let mut s = Self {
            model,
            mu,
            log_mu: mu.iter().map(|m| m.ln().max(LOG_FLOOR)).collect(),
            eta,
            g: vec![0.0; rows],
            log_pi: (0..model.num_tuples()).map(|j| (-1.0 - model.cost(j)) / eta).collect(),
            log_p: vec![0.0; rows],
            kl: vec![0.0; model.num_classes()],
            err: vec![0.0; model.num_classes()],
            stamp: vec![0; rows],
            epoch: 0,
        };
        for r in 0..rows {
            s.refresh_row(r);
        }
        for c in 0..model.num_classes() {
            s.refresh_class(c);
        }
        s
    }

    fn potentials(&self) -> DualPotentials {
        DualPotentials {
            values: self.g.clone(),
            eta: self.eta,
        }
    }

    fn error(&self) -> f64 {
        kahan_sum(self.err.iter().copied())
    }

    fn greedy_class(&self) -> usize {
        let mut best = 0;
        for c in 1..self.kl.len() {
            if self.kl[c] > self.kl[best] {
                best = c;
            }
        }
        best
    }

    fn refresh_row(&mut self, r: usize) {
        let inc = self.model.incidence(r);
        let max = inc.iter().map(|&j| self.log_pi[j]).fold(f64::NEG_INFINITY, f64::max);
        self.log_p[r] = if max == f64::NEG_INFINITY {
            max
        } else {
            max + kahan_sum(inc.iter().map(|&j| (self.log_pi[j] - max).exp())).ln()
        };
    }

    fn refresh_class(&mut self, c: usize) {
        let rows = self.model.class_rows(c);
        let mut kl_terms = Vec::with_capacity(2 * rows.len());
        let mut err_terms = Vec::with_capacity(rows.len());
        for r in rows {
            let p = self.log_p[r].exp();
            let m = self.mu[r];
            kl_terms.push(p - m);
            kl_terms.push(m * (self.log_mu[r] - self.log_p[r]));
            err_terms.push((m - p).abs());
        }
        self.kl[c] = kahan_sum(kl_terms).max(0.0);
        self.err[c] = kahan_sum(err_terms);
    }

    /// Rescale class `class`; returns the local dual change and its scale
    /// when `track` is set.
    fn update(&mut self, class: usize, track: bool) -> (f64, f64) {
        let model = self.model;
        let rows = model.class_rows(class);
        let mut terms = Vec::new();
        let mut scale = 0.0;
        for r in rows.clone() {
            let step = self.log_mu[r] - self.log_p[r];
            self.g[r] += self.eta * step;
            if track {
                terms.push(-self.mu[r] * step);
                scale += (self.mu[r] * step).abs();
            }
        }
        self.epoch += 1;
        let mut touched = Vec::new();
        for r in rows {
            for &j in model.incidence(r) {
                let new = model.log_mass_at(j, &self.g, self.eta);
                if track {
                    let (a, b) = (new.exp(), self.log_pi[j].exp());
                    terms.push(a - b);
                    scale += a + b;
                }
                self.log_pi[j] = new;
                for &s in model.tuple(j) {
                    if self.stamp[s] != self.epoch {
                        self.stamp[s] = self.epoch;
                        touched.push(s);
                    }
                }
            }
        }
        let mut classes: Vec<usize> = Vec::new();
        for &r in &touched {
            self.refresh_row(r);
            let c = model.class_of_row(r);
            if !classes.contains(&c) {
                classes.push(c);
            }
        }
        for c in classes {
            self.refresh_class(c);
        }
        if track {
            (kahan_sum(terms), scale)
        } else {
            (0.0, 0.0)
        }
    }
}
