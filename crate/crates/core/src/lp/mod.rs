//! Exact linear program over an interaction complex.
//!
//! The program is `min Σ w  s.t.  I w = m, w ≥ 0`, where `I` is the 0/1
//! point-by-interaction incidence matrix and `m` the point masses. Its optimum
//! is the smallest total barycenter mass; `1 − optimum` lower-bounds the
//! adversarial risk of every classifier.

mod attack;
mod simplex;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cloud::LabeledPointCloud;
use crate::complex::{Interaction, InteractionComplex};
use crate::error::{Error, Result};

pub use attack::{recover_attack, Atom, AttackPlan};
pub use simplex::RevisedSimplex;

/// Tolerance on `‖Iw − m‖_∞` for an optimal solution.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Sparse LP in column form. Rows are points ordered by (class, point index);
/// columns follow the complex's canonical interaction order.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    num_rows: usize,
    /// Row indices of the nonzeros of each column, ascending.
    columns: Vec<Vec<usize>>,
    marginals: Vec<f64>,
    /// Global point index of each row.
    row_points: Vec<usize>,
}

impl LpProblem {
    /// Build a problem from raw parts. Every column must be a nonempty set of
    /// distinct rows; marginals must be positive.
    pub fn from_parts(num_rows: usize, columns: Vec<Vec<usize>>, marginals: Vec<f64>) -> Result<Self> {
        if num_rows == 0 {
            return Err(Error::EmptyInput("LP rows"));
        }
        if marginals.len() != num_rows {
            return Err(Error::DimensionMismatch(num_rows, marginals.len()));
        }
        if let Some(m) = marginals.iter().find(|m| **m <= 0.0 || !m.is_finite()) {
            return Err(Error::InvalidProblem(format!("marginal {m} is not positive")));
        }
        let mut columns = columns;
        for (j, col) in columns.iter_mut().enumerate() {
            col.sort_unstable();
            if col.is_empty() || col.windows(2).any(|w| w[0] == w[1]) || col[col.len() - 1] >= num_rows {
                return Err(Error::InvalidProblem(format!("column {j} has invalid rows {col:?}")));
            }
        }
        Ok(Self {
            num_rows,
            columns,
            marginals,
            row_points: (0..num_rows).collect(),
        })
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// Global point index of row `r`.
    pub fn row_point(&self, r: usize) -> usize {
        self.row_points[r]
    }

    /// Dense copy of the incidence matrix, row-major.
    pub fn dense_matrix(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.columns.len()]; self.num_rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &r in col {
                dense[r][j] = 1;
            }
        }
        dense
    }

    /// `‖Iw − m‖_∞`.
    pub fn residual(&self, weights: &[f64]) -> f64 {
        let mut acc = vec![0.0; self.num_rows];
        for (col, &w) in self.columns.iter().zip(weights) {
            for &r in col {
                acc[r] += w;
            }
        }
        acc.iter()
            .zip(&self.marginals)
            .map(|(a, m)| (a - m).abs())
            .fold(0.0, f64::max)
    }

    /// Total weight per column order (number of members).
    pub fn mass_by_order(&self, weights: &[f64]) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (col, &w) in self.columns.iter().zip(weights) {
            if w > 0.0 {
                *out.entry(col.len()).or_insert(0.0) += w;
            }
        }
        out
    }
}

/// Build the LP of a complex over the cloud it was built from.
pub fn assemble_lp(complex: &InteractionComplex, cloud: &LabeledPointCloud) -> Result<LpProblem> {
    check_compatible(complex, cloud)?;
    let mut row_of = vec![0; cloud.len()];
    let mut row_points = Vec::with_capacity(cloud.len());
    for c in 0..cloud.num_classes() {
        for &p in cloud.class_points(c) {
            row_of[p] = row_points.len();
            row_points.push(p);
        }
    }
    let columns = complex
        .iter()
        .map(|it: &Interaction| {
            let mut rows: Vec<usize> = it.members.iter().map(|m| row_of[m.point]).collect();
            rows.sort_unstable();
            rows
        })
        .collect();
    let marginals = row_points.iter().map(|&p| cloud.masses()[p]).collect();
    Ok(LpProblem {
        num_rows: cloud.len(),
        columns,
        marginals,
        row_points,
    })
}

pub(crate) fn check_compatible(complex: &InteractionComplex, cloud: &LabeledPointCloud) -> Result<()> {
    if complex.num_points() != cloud.len() || complex.num_classes() != cloud.num_classes() {
        return Err(Error::ComplexMismatch(format!(
            "complex has {} points / {} classes, cloud has {} / {}",
            complex.num_points(),
            complex.num_classes(),
            cloud.len(),
            cloud.num_classes()
        )));
    }
    if let Some(m) = complex
        .iter()
        .flat_map(|it| &it.members)
        .find(|m| cloud.label(m.point) != m.class)
    {
        return Err(Error::ComplexMismatch(format!(
            "point {} has class {}, complex says {}",
            m.point,
            cloud.label(m.point),
            m.class
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

impl LpStatus {
    pub fn name(&self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptions {
    /// Pivot limit; `None` scales with the problem size.
    pub max_iterations: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            time_limit: None,
            bland_after: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub risk_lower_bound: f64,
    pub status: LpStatus,
    pub iterations: usize,
    /// `‖Iw − m‖_∞` of the returned weights.
    pub residual: f64,
    pub mass_by_order: BTreeMap<usize, f64>,
}

/// JSON form of an [`LpSolution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolutionRecord {
    pub objective: f64,
    pub risk_lower_bound: f64,
    pub status: LpStatus,
    pub nnz_weights: Vec<(usize, f64)>,
    pub mass_by_order: BTreeMap<usize, f64>,
}

impl LpSolution {
    pub(crate) fn from_weights(problem: &LpProblem, weights: Vec<f64>, status: LpStatus, iterations: usize) -> Self {
        let objective = crate::numeric::kahan_sum(weights.iter().copied());
        Self {
            residual: problem.residual(&weights),
            mass_by_order: problem.mass_by_order(&weights),
            objective,
            risk_lower_bound: 1.0 - objective,
            weights,
            status,
            iterations,
        }
    }

    pub fn to_record(&self) -> LpSolutionRecord {
        LpSolutionRecord {
            objective: self.objective,
            risk_lower_bound: self.risk_lower_bound,
            status: self.status,
            nnz_weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(j, w)| (j, *w))
                .collect(),
            mass_by_order: self.mass_by_order.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }
}

/// Interface for LP engines.
pub trait LpBackend {
    fn solve(&self, problem: &LpProblem, options: &LpOptions) -> Result<LpSolution>;
}

/// Solve with the built-in revised simplex.
pub fn solve_lp(problem: &LpProblem, options: &LpOptions) -> Result<LpSolution> {
    RevisedSimplex.solve(problem, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, ComplexOptions};
    use crate::data::triangle_fixture;
    use crate::metric::Metric;

    fn triangle_lp(eps: f64, level: usize) -> LpProblem {
        let cloud = triangle_fixture();
        let complex = build_complex(&cloud, eps, Metric::L2, level, &ComplexOptions::default()).unwrap();
        assemble_lp(&complex, &cloud).unwrap()
    }

    fn two_point() -> (LabeledPointCloud, InteractionComplex) {
        let cloud = LabeledPointCloud::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0, 1]).unwrap();
        let complex = build_complex(&cloud, 0.5, Metric::L2, 2, &ComplexOptions::default()).unwrap();
        (cloud, complex)
    }

    #[test]
    fn singleton_matrix_is_identity() {
        let p = triangle_lp(0.4, 3);
        assert_eq!(p.num_columns(), 6);
        let dense = p.dense_matrix();
        for (r, row) in dense.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(v, u8::from(r == c));
            }
        }
    }

    #[test]
    fn triangle_matrix_shape() {
        let p = triangle_lp(0.8, 3);
        assert_eq!((p.num_rows(), p.num_columns()), (6, 10));
        assert_eq!(p.column(9), &[0, 1, 2]);
        assert_eq!(p.marginals().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn two_point_matrix() {
        let (cloud, complex) = two_point();
        let p = assemble_lp(&complex, &cloud).unwrap();
        assert_eq!(p.dense_matrix(), vec![vec![1, 0, 1], vec![0, 1, 1]]);
    }

    #[test]
    fn rows_ordered_by_class() {
        let cloud = LabeledPointCloud::uniform(vec![vec![0.0], vec![5.0], vec![0.1]], vec![1, 0, 0]).unwrap();
        let complex = build_complex(&cloud, 1.0, Metric::L2, 2, &ComplexOptions::default()).unwrap();
        let p = assemble_lp(&complex, &cloud).unwrap();
        assert_eq!((0..3).map(|r| p.row_point(r)).collect::<Vec<_>>(), vec![1, 2, 0]);
        // the pair joins point 2 (row 1) with point 0 (row 2)
        assert_eq!(p.column(3), &[1, 2]);
    }

    #[test]
    fn mismatched_complex_is_rejected() {
        let (_, complex) = two_point();
        assert!(matches!(assemble_lp(&complex, &triangle_fixture()), Err(Error::ComplexMismatch(_))));
        let swapped = LabeledPointCloud::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![1, 0]).unwrap();
        assert!(assemble_lp(&complex, &swapped).is_err());
    }

    #[test]
    fn solves_spec_examples() {
        let opts = LpOptions::default();
        let s = solve_lp(&triangle_lp(0.4, 3), &opts).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(s.risk_lower_bound.abs() < 1e-12);

        let (cloud, complex) = two_point();
        let s = solve_lp(&assemble_lp(&complex, &cloud).unwrap(), &opts).unwrap();
        assert!((s.objective - 0.5).abs() < 1e-12);
        assert!((s.weights[2] - 0.5).abs() < 1e-12);

        let s = solve_lp(&triangle_lp(0.8, 3), &opts).unwrap();
        assert!((s.objective - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.risk_lower_bound - 1.0 / 3.0).abs() < 1e-9);
        assert!((s.mass_by_order[&1] - 0.5).abs() < 1e-9);
        assert!((s.mass_by_order[&3] - 1.0 / 6.0).abs() < 1e-9);

        let s = solve_lp(&triangle_lp(0.8, 2), &opts).unwrap();
        assert!((s.objective - 0.75).abs() < 1e-9);
        for j in 6..9 {
            assert!((s.weights[j] - 1.0 / 12.0).abs() < 1e-9, "pair weight {}", s.weights[j]);
        }
        assert!(s.residual <= FEASIBILITY_TOL);
    }

    #[test]
    fn json_record() {
        let s = solve_lp(&triangle_lp(0.8, 3), &LpOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v["status"], "optimal");
        assert_eq!(v["nnz_weights"].as_array().unwrap().len(), 4);
        assert!(v["mass_by_order"]["3"].as_f64().unwrap() > 0.16);
    }

    #[test]
    fn from_parts_validation() {
        assert!(LpProblem::from_parts(2, vec![vec![0], vec![2]], vec![0.5, 0.5]).is_err());
        assert!(LpProblem::from_parts(2, vec![vec![0, 0]], vec![0.5, 0.5]).is_err());
        assert!(LpProblem::from_parts(2, vec![vec![0]], vec![0.5, 0.0]).is_err());
        assert!(LpProblem::from_parts(2, vec![vec![1, 0]], vec![0.5, 0.5]).is_ok());
    }
}
