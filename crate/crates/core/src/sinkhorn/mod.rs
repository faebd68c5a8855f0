//! Entropic relaxation of the truncated multimarginal problem.
//!
//! Every quantity is indexed by *rows*: the points of the cloud in
//! (class, point index) order, exactly as in the LP. Potentials, marginals
//! and projections are flat vectors over rows; couplings are one mass per
//! interaction ("tuple"), stored as log-masses.

mod entropic;
mod greedy;
mod round;

use serde::{Deserialize, Serialize};

use crate::cloud::LabeledPointCloud;
use crate::complex::InteractionComplex;
use crate::error::{invalid, Error, Result};
use crate::lp::assemble_lp;
use crate::numeric::kahan_sum;

pub use entropic::{
    entropic_solve, entropic_solve_observed, iteration_bound, log_kcn, potential_bounds, schedule, smooth_marginals, EntropicOptions,
};
pub use greedy::{greedy_sinkhorn, IterationEvent, Observer, SinkhornOptions};
pub use round::round_couplings;

/// Log-masses are never allowed below this.
pub const LOG_FLOOR: f64 = -745.0;

/// Feasible tuples with their costs, plus the incidence structure the
/// solvers need.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel {
    level: usize,
    /// Class `i` owns rows `offsets[i]..offsets[i + 1]`.
    offsets: Vec<usize>,
    class_of_row: Vec<usize>,
    tuples: Vec<Vec<usize>>,
    costs: Vec<f64>,
    incidence: Vec<Vec<usize>>,
    singleton: Vec<usize>,
}

impl CostModel {
    /// Hand-built model. `tuples` hold row indices; each tuple may use a
    /// class at most once and every row needs a singleton tuple.
    pub fn new(class_sizes: &[usize], tuples: Vec<Vec<usize>>, costs: Vec<f64>, level: usize) -> Result<Self> {
        if class_sizes.is_empty() || class_sizes.contains(&0) {
            return Err(invalid("class_sizes", "every class needs at least one point"));
        }
        if costs.len() != tuples.len() {
            return Err(Error::DimensionMismatch(tuples.len(), costs.len()));
        }
        let mut offsets = vec![0];
        for &s in class_sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let rows = *offsets.last().unwrap();
        let class_of_row: Vec<usize> = (0..class_sizes.len())
            .flat_map(|c| std::iter::repeat_n(c, class_sizes[c]))
            .collect();
        let mut tuples = tuples;
        let mut incidence = vec![Vec::new(); rows];
        let mut singleton = vec![usize::MAX; rows];
        for (j, t) in tuples.iter_mut().enumerate() {
            t.sort_unstable();
            if t.is_empty() || t.len() > level || t[t.len() - 1] >= rows {
                return Err(Error::InvalidProblem(format!("tuple {j} has invalid rows {t:?}")));
            }
            if t.windows(2).any(|w| class_of_row[w[0]] == class_of_row[w[1]]) {
                return Err(Error::InvalidProblem(format!("tuple {j} repeats a class")));
            }
            let c = costs[j];
            if c < 0.0 || !c.is_finite() {
                return Err(Error::InvalidProblem(format!("tuple {j} has cost {c}")));
            }
            if t.len() == 1 {
                if c != 0.0 {
                    return Err(Error::InvalidProblem(format!("singleton tuple {j} has nonzero cost")));
                }
                if singleton[t[0]] == usize::MAX {
                    singleton[t[0]] = j;
                }
            }
            for &r in t.iter() {
                incidence[r].push(j);
            }
        }
        if let Some(r) = singleton.iter().position(|&s| s == usize::MAX) {
            return Err(Error::InvalidProblem(format!("row {r} has no singleton tuple")));
        }
        Ok(Self {
            level,
            offsets,
            class_of_row,
            tuples,
            costs,
            incidence,
            singleton,
        })
    }

    /// Zero cost on every feasible interaction.
    pub fn adversarial(complex: &InteractionComplex, cloud: &LabeledPointCloud) -> Result<Self> {
        Self::with_costs(complex, cloud, vec![0.0; complex.total_count()])
    }

    /// Costs given per interaction in the complex's canonical order.
    pub fn with_costs(complex: &InteractionComplex, cloud: &LabeledPointCloud, costs: Vec<f64>) -> Result<Self> {
        let problem = assemble_lp(complex, cloud)?;
        Self::new(&cloud.class_sizes(), problem.columns().to_vec(), costs, complex.level())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_classes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_tuples(&self) -> usize {
        self.tuples.len()
    }

    pub fn class_rows(&self, class: usize) -> std::ops::Range<usize> {
        self.offsets[class]..self.offsets[class + 1]
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.offsets[class + 1] - self.offsets[class]
    }

    pub fn class_of_row(&self, row: usize) -> usize {
        self.class_of_row[row]
    }

    pub fn tuple(&self, j: usize) -> &[usize] {
        &self.tuples[j]
    }

    pub fn cost(&self, j: usize) -> f64 {
        self.costs[j]
    }

    /// Tuples containing `row`.
    pub fn incidence(&self, row: usize) -> &[usize] {
        &self.incidence[row]
    }

    /// The singleton tuple of `row`.
    pub fn singleton(&self, row: usize) -> usize {
        self.singleton[row]
    }

    /// `max (1 + c)` over tuples.
    pub fn max_coefficient(&self) -> f64 {
        self.costs.iter().fold(1.0, |m, c| m.max(1.0 + c))
    }

    pub(crate) fn check_marginals(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.num_rows() {
            return Err(Error::DimensionMismatch(self.num_rows(), mu.len()));
        }
        if let Some(r) = mu.iter().position(|m| *m <= 0.0 || !m.is_finite()) {
            return Err(invalid("mu", format!("mass at row {r} is {}, must be positive", mu[r])));
        }
        Ok(())
    }

    fn log_mass_at(&self, j: usize, g: &[f64], eta: f64) -> f64 {
        let s: f64 = self.tuples[j].iter().map(|&r| g[r]).sum();
        (s - 1.0 - self.costs[j]) / eta
    }
}

/// Point masses in row order (class-major), matching the LP rows.
pub fn row_masses(cloud: &LabeledPointCloud) -> Vec<f64> {
    (0..cloud.num_classes())
        .flat_map(|c| cloud.class_points(c).iter().map(|&p| cloud.masses()[p]))
        .collect()
}

/// Dual variables, one value per row.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPotentials {
    pub values: Vec<f64>,
    pub eta: f64,
}

impl DualPotentials {
    pub fn zeros(model: &CostModel, eta: f64) -> Self {
        Self {
            values: vec![0.0; model.num_rows()],
            eta,
        }
    }

    pub fn class<'a>(&'a self, model: &CostModel, class: usize) -> &'a [f64] {
        &self.values[model.class_rows(class)]
    }
}

/// One nonnegative mass per tuple, with cached per-row projections.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingFamily {
    log_mass: Vec<f64>,
    marginals: Vec<f64>,
    total_mass: f64,
    value: f64,
}

impl CouplingFamily {
    pub fn from_log_masses(model: &CostModel, log_mass: Vec<f64>) -> Result<Self> {
        if log_mass.len() != model.num_tuples() {
            return Err(Error::DimensionMismatch(model.num_tuples(), log_mass.len()));
        }
        if log_mass.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::Numerical("coupling log-mass is not finite".into()));
        }
        let masses: Vec<f64> = log_mass.iter().map(|l| l.exp()).collect();
        let marginals = (0..model.num_rows())
            .map(|r| kahan_sum(model.incidence(r).iter().map(|&j| masses[j])))
            .collect();
        let total_mass = kahan_sum(masses.iter().copied());
        let value = kahan_sum(masses.iter().enumerate().map(|(j, m)| (1.0 + model.cost(j)) * m));
        if !total_mass.is_finite() {
            return Err(Error::Numerical("coupling mass overflowed".into()));
        }
        Ok(Self {
            log_mass,
            marginals,
            total_mass,
            value,
        })
    }

    pub fn from_masses(model: &CostModel, masses: &[f64]) -> Result<Self> {
        if let Some(m) = masses.iter().find(|m| m.is_nan() || **m < 0.0) {
            return Err(invalid("masses", format!("{m} is negative")));
        }
        Self::from_log_masses(model, masses.iter().map(|m| m.ln()).collect())
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn mass(&self, j: usize) -> f64 {
        self.log_mass[j].exp()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.log_mass.iter().map(|l| l.exp()).collect()
    }

    /// Cached `P(r) = Σ_{tuples ∋ r} π`.
    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `Σ (1 + c) π`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `Σ_i ‖P_i − μ_i‖₁`.
    pub fn marginal_error(&self, mu: &[f64]) -> f64 {
        kahan_sum(self.marginals.iter().zip(mu).map(|(p, m)| (p - m).abs()))
    }

    /// `Σ_j |π_j − π'_j|`.
    pub fn l1_distance(&self, other: &CouplingFamily) -> f64 {
        kahan_sum(
            self.log_mass
                .iter()
                .zip(&other.log_mass)
                .map(|(a, b)| (a.exp() - b.exp()).abs()),
        )
    }
}

/// Run statistics of a Sinkhorn solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornReport {
    pub iterations: usize,
    pub final_error: f64,
    pub converged: bool,
    /// The run hit its wall-clock limit.
    #[serde(default)]
    pub timed_out: bool,
    pub eta: f64,
    pub delta_prime: f64,
    pub risk_lower_bound: f64,
    pub value: f64,
    pub rounded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_trajectory: Option<Vec<f64>>,
}

/// `D(μ‖ν) = Σ (ν − μ) + Σ μ log(μ/ν)` with `0 log 0 = 0`.
pub fn generalized_kl(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch(mu.len(), nu.len()));
    }
    let mut terms = Vec::with_capacity(2 * mu.len());
    for (i, (&m, &n)) in mu.iter().zip(nu).enumerate() {
        if m.is_nan() || n.is_nan() || m < 0.0 || n < 0.0 {
            return Err(invalid("mu/nu", format!("negative or NaN entry at {i}")));
        }
        terms.push(n - m);
        if m > 0.0 {
            if n == 0.0 {
                return Err(Error::InfiniteDivergence(i));
            }
            terms.push(m * (m / n).ln());
        }
    }
    Ok(kahan_sum(terms).max(0.0))
}

/// Induced couplings `π_C = exp((Σ_{r∈C} g_r − 1 − c_C)/η)`.
pub fn couplings_from_potentials(g: &DualPotentials, model: &CostModel) -> Result<CouplingFamily> {
    check_potentials(g, model)?;
    let log_mass = (0..model.num_tuples())
        .map(|j| model.log_mass_at(j, &g.values, g.eta))
        .collect();
    CouplingFamily::from_log_masses(model, log_mass)
}

/// `G(g) = Σ_C π_C(g) − Σ_r g_r μ_r / η`.
pub fn dual_objective(g: &DualPotentials, model: &CostModel, mu: &[f64]) -> Result<f64> {
    check_potentials(g, model)?;
    model.check_marginals(mu)?;
    let eta = g.eta;
    let pi = (0..model.num_tuples()).map(|j| model.log_mass_at(j, &g.values, eta).exp());
    let lin = g.values.iter().zip(mu).map(|(gv, m)| -gv * m / eta);
    let value = kahan_sum(pi.chain(lin));
    if !value.is_finite() {
        return Err(Error::Numerical("dual objective overflowed".into()));
    }
    Ok(value)
}

/// `∂G/∂g_r = (P_r − μ_r)/η`.
pub fn dual_gradient(g: &DualPotentials, model: &CostModel, mu: &[f64]) -> Result<Vec<f64>> {
    model.check_marginals(mu)?;
    let pi = couplings_from_potentials(g, model)?;
    Ok(pi.marginals().iter().zip(mu).map(|(p, m)| (p - m) / g.eta).collect())
}

fn check_potentials(g: &DualPotentials, model: &CostModel) -> Result<()> {
    if g.values.len() != model.num_rows() {
        return Err(Error::DimensionMismatch(model.num_rows(), g.values.len()));
    }
    if g.eta <= 0.0 || !g.eta.is_finite() {
        return Err(invalid("eta", format!("must be positive, got {}", g.eta)));
    }
    Ok(())
}
