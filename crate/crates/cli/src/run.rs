use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use advbound::complex::{build_complex, count_by_order, ComplexOptions, InteractionComplex};
use advbound::lp::{assemble_lp, solve_lp, LpOptions, LpStatus};
use advbound::sinkhorn::{entropic_solve, CostModel, EntropicOptions, SinkhornReport};
use advbound::{Error, LabeledPointCloud, Metric};
use serde::Serialize;

use crate::args::{SinkhornArgs, Solver};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

/// One solve, as emitted by `solve` and as a row of `sweep`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub epsilon: f64,
    pub level: usize,
    pub metric: Metric,
    pub solver: &'static str,
    pub risk_lower_bound: Option<f64>,
    pub objective_value: Option<f64>,
    pub mass_by_order: BTreeMap<usize, f64>,
    pub interactions_by_order: BTreeMap<usize, usize>,
    /// Sinkhorn updates; absent for the LP.
    pub iterations: Option<usize>,
    pub runtime_ms: f64,
    pub eta: Option<f64>,
    pub delta_prime: Option<f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunRecord {
    fn empty(epsilon: f64, level: usize, metric: Metric, solver: Solver) -> Self {
        Self {
            epsilon,
            level,
            metric,
            solver: solver_name(solver),
            risk_lower_bound: None,
            objective_value: None,
            mass_by_order: BTreeMap::new(),
            interactions_by_order: BTreeMap::new(),
            iterations: None,
            runtime_ms: 0.0,
            eta: None,
            delta_prime: None,
            status: String::new(),
            message: None,
        }
    }

    /// Process exit code implied by `status`.
    pub fn exit_code(&self) -> u8 {
        match self.status.as_str() {
            "optimal" | "converged" => EXIT_OK,
            "infeasible" | "solver_error" => EXIT_SOLVER,
            "input_error" => EXIT_INPUT,
            _ => EXIT_GUARD,
        }
    }
}

pub fn solver_name(solver: Solver) -> &'static str {
    match solver {
        Solver::Lp => "lp",
        Solver::Sinkhorn => "sinkhorn",
    }
}

/// Status string and exit code for a library error.
pub fn classify(err: &Error) -> (&'static str, u8) {
    match err {
        Error::InteractionBudget { .. } => ("interaction_budget", EXIT_GUARD),
        Error::OracleGuard(_) => ("guard", EXIT_GUARD),
        Error::NotOptimal(_) | Error::Numerical(_) | Error::InfiniteDivergence(_) => ("solver_error", EXIT_SOLVER),
        _ => ("input_error", EXIT_INPUT),
    }
}

/// Settings shared by every cell of a run.
pub struct Runner<'a> {
    pub cloud: &'a LabeledPointCloud,
    pub metric: Metric,
    pub complex_options: ComplexOptions,
    pub time_limit: Duration,
    pub sinkhorn: SinkhornArgs,
    pub timing: bool,
}

impl Runner<'_> {
    pub fn complex(&self, eps: f64, level: usize) -> advbound::Result<InteractionComplex> {
        build_complex(self.cloud, eps, self.metric, level, &self.complex_options)
    }

    /// Build the complex once and run each solver on it.
    pub fn cell(&self, eps: f64, level: usize, solvers: &[Solver]) -> Vec<RunRecord> {
        let complex = match self.complex(eps, level) {
            Ok(c) => c,
            Err(e) => {
                let (status, _) = classify(&e);
                return solvers
                    .iter()
                    .map(|&s| RunRecord {
                        status: status.into(),
                        message: Some(e.to_string()),
                        ..RunRecord::empty(eps, level, self.metric, s)
                    })
                    .collect();
            }
        };
        solvers.iter().map(|&s| self.solve(&complex, eps, level, s)).collect()
    }

    pub fn solve(&self, complex: &InteractionComplex, eps: f64, level: usize, solver: Solver) -> RunRecord {
        let mut record = RunRecord {
            interactions_by_order: count_by_order(complex),
            ..RunRecord::empty(eps, level, self.metric, solver)
        };
        let start = Instant::now();
        let result = match solver {
            Solver::Lp => self.fill_lp(complex, &mut record),
            Solver::Sinkhorn => self.fill_sinkhorn(complex, &mut record),
        };
        if self.timing {
            record.runtime_ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
        }
        if let Err(e) = result {
            let (status, _) = classify(&e);
            record.status = status.into();
            record.message = Some(e.to_string());
        }
        record
    }

    fn fill_lp(&self, complex: &InteractionComplex, record: &mut RunRecord) -> advbound::Result<()> {
        let problem = assemble_lp(complex, self.cloud)?;
        let options = LpOptions {
            time_limit: Some(self.time_limit),
            ..LpOptions::default()
        };
        let solution = solve_lp(&problem, &options)?;
        record.status = solution.status.name().into();
        if solution.status == LpStatus::Optimal {
            record.objective_value = Some(solution.objective);
            record.risk_lower_bound = Some(solution.risk_lower_bound);
            record.mass_by_order = solution.mass_by_order;
        }
        Ok(())
    }

    fn fill_sinkhorn(&self, complex: &InteractionComplex, record: &mut RunRecord) -> advbound::Result<()> {
        let model = CostModel::adversarial(complex, self.cloud)?;
        let practice = self.sinkhorn.eta.is_some();
        let options = EntropicOptions {
            eta: self.sinkhorn.eta,
            delta_prime: self.sinkhorn.delta_prime,
            max_iters: self.sinkhorn.max_iters,
            time_limit: Some(self.time_limit),
            smooth: !practice,
            ..EntropicOptions::default()
        };
        let (pi, report) = entropic_solve(self.cloud, complex, &model, self.sinkhorn.delta, &options)?;
        let mut mass = BTreeMap::new();
        for (j, m) in pi.masses().into_iter().enumerate() {
            if m > 0.0 {
                *mass.entry(model.tuple(j).len()).or_insert(0.0) += m;
            }
        }
        record.status = sinkhorn_status(&report).into();
        record.objective_value = Some(report.value);
        record.risk_lower_bound = Some(report.risk_lower_bound);
        record.mass_by_order = mass;
        record.iterations = Some(report.iterations);
        record.eta = Some(report.eta);
        record.delta_prime = Some(report.delta_prime);
        Ok(())
    }
}

fn sinkhorn_status(report: &SinkhornReport) -> &'static str {
    if report.converged {
        "converged"
    } else if report.timed_out {
        "time_limit"
    } else {
        "iteration_limit"
    }
}
