//! Brute-force reference implementations for small instances.
//!
//! These share no geometry or LP code with the production paths: interactions
//! come from enumerating every cross-class tuple, and LP optima from
//! enumerating every basic solution in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::cloud::LabeledPointCloud;
use crate::complex::{Interaction, InteractionComplex, Member};
use crate::error::{invalid, Error, Result};
use crate::lp::LpProblem;
use crate::metric::{within_budget, Metric};

/// Largest number of cross-class tuples `brute_force_interactions` examines.
pub const MAX_ORACLE_TUPLES: u64 = 1_000_000;
/// Largest column count `exact_lp` accepts.
pub const MAX_ORACLE_COLUMNS: usize = 12;

/// Every feasible interaction of order at most `level`, by exhaustive search.
pub fn brute_force_interactions(
    cloud: &LabeledPointCloud,
    eps: f64,
    metric: Metric,
    level: usize,
) -> Result<InteractionComplex> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(invalid("eps", format!("must be non-negative and finite, got {eps}")));
    }
    if level == 0 {
        return Err(invalid("level", "must be at least 1"));
    }
    let k = cloud.num_classes();
    let level = level.min(k);
    let label_sets = subsets_up_to(k, level);
    let total: u64 = label_sets
        .iter()
        .map(|s| {
            s.iter()
                .fold(1u64, |acc, &c| acc.saturating_mul(cloud.class_points(c).len() as u64))
        })
        .fold(0u64, u64::saturating_add);
    if total > MAX_ORACLE_TUPLES {
        return Err(Error::OracleGuard(format!(
            "{total} candidate tuples exceed {MAX_ORACLE_TUPLES}"
        )));
    }

    let mut found = Vec::new();
    for labels in &label_sets {
        let lists: Vec<&[usize]> = labels.iter().map(|&c| cloud.class_points(c)).collect();
        let mut pos = vec![0usize; lists.len()];
        loop {
            let members: Vec<usize> = pos.iter().zip(&lists).map(|(&p, l)| l[p]).collect();
            let pts: Vec<&[f64]> = members.iter().map(|&i| cloud.point(i)).collect();
            if let Some(witness) = feasible_centre(&pts, eps, metric) {
                found.push(Interaction {
                    members: members
                        .iter()
                        .map(|&i| Member {
                            class: cloud.label(i),
                            point: i,
                        })
                        .collect(),
                    witness,
                });
            }
            // odometer
            let mut d = 0;
            while d < pos.len() {
                pos[d] += 1;
                if pos[d] < lists[d].len() {
                    break;
                }
                pos[d] = 0;
                d += 1;
            }
            if d == pos.len() {
                break;
            }
        }
    }
    InteractionComplex::from_interactions(level, eps, metric, cloud.len(), k, found)
}

fn subsets_up_to(k: usize, level: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = (0..k).map(|c| vec![c]).collect();
    for _ in 0..level {
        let next = frontier
            .iter()
            .flat_map(|s| {
                let last = *s.last().unwrap();
                (last + 1..k).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        out.append(&mut frontier);
        frontier = next;
    }
    out
}

fn feasible_centre(pts: &[&[f64]], eps: f64, metric: Metric) -> Option<Vec<f64>> {
    match metric {
        // Boxes have the Helly property in dimension 1 per axis, so pairwise
        // ℓ∞ distances of at most 2ε suffice.
        Metric::LInf => {
            for (a, p) in pts.iter().enumerate() {
                for q in &pts[a + 1..] {
                    let d = p.iter().zip(q.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    if !within_budget(d / 2.0, eps) {
                        return None;
                    }
                }
            }
            let dim = pts[0].len();
            Some(
                (0..dim)
                    .map(|j| {
                        let lo = pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                        let hi = pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                        0.5 * (lo + hi)
                    })
                    .collect(),
            )
        }
        Metric::L2 => {
            let (centre, radius) = brute_force_meb(pts);
            within_budget(radius, eps).then_some(centre)
        }
    }
}

/// Smallest enclosing Euclidean ball: the best covering ball centred at the
/// circumcentre of some subset of the points.
pub fn brute_force_meb(pts: &[&[f64]]) -> (Vec<f64>, f64) {
    let n = pts.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 1u32..(1u32 << n) {
        let subset: Vec<&[f64]> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pts[i]).collect();
        let Some(c) = circumcentre(&subset) else { continue };
        let r = pts.iter().map(|p| euclid(p, &c)).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(_, br)| r < *br) {
            best = Some((c, r));
        }
    }
    best.expect("a single point is always a candidate")
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Centre of the sphere through affinely independent points, within their
/// affine hull; `None` when dependent.
fn circumcentre(pts: &[&[f64]]) -> Option<Vec<f64>> {
    let p0 = pts[0];
    let k = pts.len() - 1;
    let diffs: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    // augmented Gram system
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| dot(&diffs[i], &diffs[j])).collect();
            row.push(0.5 * dot(&diffs[i], &diffs[i]));
            row
        })
        .collect();
    let scale = a.iter().map(|r| r[..k].iter().fold(0.0f64, |m, x| m.max(x.abs()))).fold(0.0, f64::max);
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        a.swap(piv, col);
        for i in 0..k {
            if i != col {
                let f = a[i][col] / a[col][col];
                for j in col..=k {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    let mut c = p0.to_vec();
    for (i, d) in diffs.iter().enumerate() {
        let lambda = a[i][k] / a[i][i];
        for (cj, dj) in c.iter_mut().zip(d) {
            *cj += lambda * dj;
        }
    }
    Some(c)
}

/// Exact optimum of an LP.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalLpSolution {
    pub weights: Vec<BigRational>,
    pub objective: BigRational,
}

impl RationalLpSolution {
    pub fn objective_f64(&self) -> f64 {
        self.objective.to_f64().unwrap_or(f64::NAN)
    }
}

/// `1/n` for every row.
pub fn uniform_rational_marginals(n: usize) -> Vec<BigRational> {
    vec![BigRational::new(BigInt::from(1), BigInt::from(n)); n]
}

/// Exact rational images of floating-point marginals.
pub fn rational_marginals(values: &[f64]) -> Result<Vec<BigRational>> {
    values
        .iter()
        .map(|&v| BigRational::from_float(v).ok_or_else(|| invalid("marginals", format!("{v} is not finite"))))
        .collect()
}

/// Whether `I w = m` and `w ≥ 0` hold exactly.
pub fn is_feasible(problem: &LpProblem, weights: &[BigRational], marginals: &[BigRational]) -> bool {
    let mut acc = vec![BigRational::zero(); problem.num_rows()];
    for (col, w) in problem.columns().iter().zip(weights) {
        if w.is_negative() {
            return false;
        }
        for &r in col {
            acc[r] += w;
        }
    }
    acc == marginals
}

/// Minimise `Σ w` over `I w = m, w ≥ 0` by enumerating every set of linearly
/// independent columns and keeping the cheapest nonnegative solution.
pub fn exact_lp(problem: &LpProblem, marginals: &[BigRational]) -> Result<RationalLpSolution> {
    let n = problem.num_columns();
    if n > MAX_ORACLE_COLUMNS {
        return Err(Error::OracleGuard(format!(
            "{n} columns exceed {MAX_ORACLE_COLUMNS}"
        )));
    }
    if marginals.len() != problem.num_rows() {
        return Err(Error::DimensionMismatch(problem.num_rows(), marginals.len()));
    }
    let rows = problem.num_rows();
    let mut best: Option<RationalLpSolution> = None;
    for mask in 1u32..(1u32 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        if cols.len() > rows {
            continue;
        }
        let Some(sol) = solve_exact(problem, &cols, marginals) else { continue };
        if sol.iter().any(Signed::is_negative) {
            continue;
        }
        let objective: BigRational = sol.iter().sum();
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            let mut weights = vec![BigRational::zero(); n];
            for (&j, v) in cols.iter().zip(sol) {
                weights[j] = v;
            }
            best = Some(RationalLpSolution { weights, objective });
        }
    }
    best.ok_or_else(|| Error::InvalidProblem("LP has no feasible basic solution".into()))
}

/// Unique solution of `A_S x = m` for independent columns `S`, if consistent.
fn solve_exact(problem: &LpProblem, cols: &[usize], marginals: &[BigRational]) -> Option<Vec<BigRational>> {
    let rows = problem.num_rows();
    let k = cols.len();
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let mut row: Vec<BigRational> = cols
                .iter()
                .map(|&j| {
                    if problem.column(j).contains(&r) {
                        BigRational::from_integer(1.into())
                    } else {
                        BigRational::zero()
                    }
                })
                .collect();
            row.push(marginals[r].clone());
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..rows).find(|&i| !a[i][col].is_zero())?;
        a.swap(piv, col);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        for i in 0..rows {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in col..=k {
                    let delta = &f * &a[col][j];
                    a[i][j] -= delta;
                }
            }
        }
    }
    if a[k..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    Some(a[..k].iter().map(|row| row[k].clone()).collect())
}
