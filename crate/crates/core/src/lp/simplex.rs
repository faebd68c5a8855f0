//! Revised simplex with an explicit dense basis inverse.
//!
//! The initial basis uses singleton columns where they exist and artificial
//! unit columns elsewhere; phase 1 runs only when an artificial is present.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

use std::time::Instant;

use crate::error::{Error, Result};

use super::{LpBackend, LpOptions, LpProblem, LpSolution, LpStatus, FEASIBILITY_TOL};

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-9;
const UPPER_BOUND_TOL: f64 = 1e-9;

/// The built-in LP engine.
#[derive(Clone, Copy, Debug, Default)]
pub struct RevisedSimplex;

impl LpBackend for RevisedSimplex {
    fn solve(&self, problem: &LpProblem, options: &LpOptions) -> Result<LpSolution> {
        let mut state = State::new(problem);
        let max_iters = options
            .max_iterations
            .unwrap_or(50 * (problem.num_rows() + problem.num_columns()) + 1000);
        let mut budget = Budget {
            pivots: 0,
            max_iters,
            start: Instant::now(),
            options,
        };

        if state.has_artificials() {
            match state.run(Phase::One, &mut budget)? {
                Outcome::Optimal => {}
                Outcome::Limit => return Ok(state.solution(LpStatus::IterationLimit, budget.pivots)),
            }
            state.refactor()?;
            let infeasibility: f64 = state.artificial_mass();
            if infeasibility > PHASE1_TOL {
                let weights = vec![0.0; problem.num_columns()];
                return Ok(LpSolution::from_weights(problem, weights, LpStatus::Infeasible, budget.pivots));
            }
        }
        match state.run(Phase::Two, &mut budget)? {
            Outcome::Optimal => {}
            Outcome::Limit => return Ok(state.solution(LpStatus::IterationLimit, budget.pivots)),
        }
        state.refactor()?;
        let sol = state.solution(LpStatus::Optimal, budget.pivots);
        if sol.residual > FEASIBILITY_TOL {
            return Err(Error::Numerical(format!(
                "optimal basis violates Iw = m by {:.3e}",
                sol.residual
            )));
        }
        if let Some(w) = sol.weights.iter().find(|w| **w > 1.0 + UPPER_BOUND_TOL) {
            return Err(Error::Numerical(format!("weight {w} exceeds 1")));
        }
        Ok(sol)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    Limit,
}

struct Budget<'a> {
    pivots: usize,
    max_iters: usize,
    start: Instant,
    options: &'a LpOptions,
}

impl Budget<'_> {
    fn exhausted(&self) -> bool {
        self.pivots >= self.max_iters
            || self
                .options
                .time_limit
                .is_some_and(|limit| self.start.elapsed() >= limit)
    }
}

struct State<'a> {
    p: &'a LpProblem,
    m: usize,
    n: usize,
    /// Artificial column `n + r` is the unit vector of row `r`.
    artificial: Vec<Vec<usize>>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `m × m` basis inverse.
    binv: Vec<f64>,
    x: Vec<f64>,
    since_refactor: usize,
}

impl<'a> State<'a> {
    fn new(p: &'a LpProblem) -> Self {
        let (m, n) = (p.num_rows(), p.num_columns());
        let mut singleton = vec![None; m];
        for (j, col) in p.columns().iter().enumerate() {
            if let [r] = col[..] {
                singleton[r].get_or_insert(j);
            }
        }
        let basis: Vec<usize> = (0..m).map(|r| singleton[r].unwrap_or(n + r)).collect();
        let mut is_basic = vec![false; n + m];
        for &b in &basis {
            is_basic[b] = true;
        }
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = 1.0;
        }
        Self {
            p,
            m,
            n,
            artificial: (0..m).map(|r| vec![r]).collect(),
            basis,
            is_basic,
            binv,
            x: p.marginals().to_vec(),
            since_refactor: 0,
        }
    }

    fn rows(&self, j: usize) -> &[usize] {
        if j < self.n {
            self.p.column(j)
        } else {
            &self.artificial[j - self.n]
        }
    }

    fn has_artificials(&self) -> bool {
        self.basis.iter().any(|&b| b >= self.n)
    }

    fn artificial_mass(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x)
            .filter(|(b, _)| **b >= self.n)
            .map(|(_, x)| x.max(0.0))
            .sum()
    }

    fn cost(&self, phase: Phase, j: usize) -> f64 {
        match (phase, j < self.n) {
            (Phase::One, true) => 0.0,
            (Phase::One, false) => 1.0,
            (Phase::Two, true) => 1.0,
            (Phase::Two, false) => 0.0,
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &b) in self.basis.iter().enumerate() {
            let c = self.cost(phase, b);
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, bk) in y.iter_mut().zip(row) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    fn run(&mut self, phase: Phase, budget: &mut Budget) -> Result<Outcome> {
        let m = self.m;
        let refactor_every = m.max(100);
        let mut y = self.duals(phase);
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= budget.options.bland_after;
            let Some((q, d_q)) = self.price(phase, &y, bland) else {
                return Ok(Outcome::Optimal);
            };
            if budget.exhausted() {
                return Ok(Outcome::Limit);
            }

            let mut alpha = vec![0.0; m];
            for &r in self.rows(q) {
                for (i, a) in alpha.iter_mut().enumerate() {
                    *a += self.binv[i * m + r];
                }
            }
            let r = self.ratio_test(phase, &alpha, bland)?;
            let theta = if self.basis[r] >= self.n && phase == Phase::Two {
                0.0
            } else {
                (self.x[r] / alpha[r]).max(0.0)
            };

            for (xi, ai) in self.x.iter_mut().zip(&alpha) {
                *xi -= theta * ai;
                if *xi < 0.0 && *xi > -1e-12 {
                    *xi = 0.0;
                }
            }
            self.x[r] = theta;

            let pivot = alpha[r];
            for k in 0..m {
                self.binv[r * m + k] /= pivot;
            }
            let (before, rest) = self.binv.split_at_mut(r * m);
            let (pivot_row, after) = rest.split_at_mut(m);
            for (i, row) in before.chunks_exact_mut(m).chain(after.chunks_exact_mut(m)).enumerate() {
                let a = alpha[if i < r { i } else { i + 1 }];
                if a != 0.0 {
                    for (v, pr) in row.iter_mut().zip(pivot_row.iter()) {
                        *v -= a * pr;
                    }
                }
            }
            for (yk, pr) in y.iter_mut().zip(pivot_row.iter()) {
                *yk += d_q * pr;
            }

            self.is_basic[self.basis[r]] = false;
            self.is_basic[q] = true;
            self.basis[r] = q;
            budget.pivots += 1;
            self.since_refactor += 1;
            degenerate_run = if theta <= 1e-15 { degenerate_run + 1 } else { 0 };

            if self.since_refactor >= refactor_every {
                self.refactor()?;
                y = self.duals(phase);
            }
        }
    }

    /// Entering column and its reduced cost.
    fn price(&self, phase: Phase, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let limit = match phase {
            Phase::One => self.n + self.m,
            Phase::Two => self.n,
        };
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            if self.is_basic[j] {
                continue;
            }
            let d = self.cost(phase, j) - self.rows(j).iter().map(|&r| y[r]).sum::<f64>();
            if d < -OPTIMALITY_TOL {
                if bland {
                    return Some((j, d));
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best
    }

    fn ratio_test(&self, phase: Phase, alpha: &[f64], bland: bool) -> Result<usize> {
        // A basic artificial that the entering column touches must leave at
        // step zero so phase 2 never moves it off zero.
        if phase == Phase::Two {
            if let Some(r) = (0..self.m)
                .filter(|&i| self.basis[i] >= self.n && alpha[i].abs() > PIVOT_TOL)
                .max_by(|&a, &b| alpha[a].abs().total_cmp(&alpha[b].abs()).then(b.cmp(&a)))
            {
                return Ok(r);
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if alpha[i] <= PIVOT_TOL {
                continue;
            }
            let ratio = self.x[i].max(0.0) / alpha[i];
            best = match best {
                None => Some((i, ratio)),
                Some((k, br)) => {
                    let better = if (ratio - br).abs() <= 1e-12 {
                        if bland {
                            self.basis[i] < self.basis[k]
                        } else {
                            alpha[i] > alpha[k]
                        }
                    } else {
                        ratio < br
                    };
                    if better { Some((i, ratio)) } else { best }
                }
            };
        }
        best.map(|(i, _)| i)
            .ok_or_else(|| Error::Numerical("unbounded ray in a bounded LP".into()))
    }

    /// Recompute the basis inverse from scratch and the basic values from it.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0f64; m * m];
        for (k, &b) in self.basis.iter().enumerate() {
            for &r in self.rows(b) {
                a[r * m + k] = 1.0;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
                .unwrap();
            if a[piv * m + col].abs() < 1e-12 {
                return Err(Error::Numerical("basis matrix became singular".into()));
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for i in 0..m {
                let f = a[i * m + col];
                if i != col && f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[col * m + k];
                        inv[i * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        let rhs = self.p.marginals();
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(rhs).map(|(b, r)| b * r).sum();
            self.x[i] = if v < 0.0 && v > -1e-12 { 0.0 } else { v };
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn solution(&self, status: LpStatus, pivots: usize) -> LpSolution {
        let mut w = vec![0.0; self.n];
        for (&b, &x) in self.basis.iter().zip(&self.x) {
            if b < self.n {
                w[b] = x.max(0.0);
            }
        }
        LpSolution::from_weights(self.p, w, status, pivots)
    }
}
