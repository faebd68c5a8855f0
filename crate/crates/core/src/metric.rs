//! Ground metrics and the common ε-ball (witness) test.
//!
//! An interaction is feasible when all of its member points fit inside one
//! closed ball of radius ε. For ℓ∞ that is an intersection of axis-aligned
//! boxes; for ℓ2 it is decided by the minimum enclosing ball, computed
//! exactly with Welzl's recursion over the (few) member points.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative slack applied to ε when comparing against an enclosing radius.
pub const FEASIBILITY_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::LInf => "linf",
        }
    }

    /// Distance without the dimension check; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn dist_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::LInf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "linf" | "l-inf" | "inf" => Ok(Metric::LInf),
            other => Err(invalid("metric", format!("unknown metric `{other}`"))),
        }
    }
}

pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    Ok(metric.dist_unchecked(a, b))
}

/// `radius ≤ ε` with the closed-ball convention and a tiny relative slack.
#[inline]
pub fn within_budget(radius: f64, eps: f64) -> bool {
    radius <= eps * (1.0 + FEASIBILITY_RTOL)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessResult {
    pub feasible: bool,
    /// Canonical centre of the smallest enclosing ball; `None` when infeasible.
    pub witness: Option<Vec<f64>>,
    /// Smallest `r` such that every input lies in a closed `r`-ball.
    pub radius: f64,
}

/// Decide whether some point lies within `eps` of every input point.
pub fn common_ball_witness<P: AsRef<[f64]>>(
    points: &[P],
    eps: f64,
    metric: Metric,
) -> Result<WitnessResult> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(invalid("eps", format!("must be positive and finite, got {eps}")));
    }
    let (center, radius) = enclosing_ball(points, metric)?;
    let feasible = within_budget(radius, eps);
    Ok(WitnessResult {
        feasible,
        witness: feasible.then_some(center),
        radius,
    })
}

/// Smallest enclosing ball under `metric`: (centre, radius).
///
/// For ℓ∞ the centre is the midpoint of the bounding box. For ℓ2 it is the
/// exact minimum enclosing ball; the returned radius is re-measured from the
/// centre so every input is within `radius` of it.
pub fn enclosing_ball<P: AsRef<[f64]>>(points: &[P], metric: Metric) -> Result<(Vec<f64>, f64)> {
    let first = points
        .first()
        .ok_or(Error::EmptyInput("point set for enclosing ball"))?
        .as_ref();
    let dim = first.len();
    for p in points {
        if p.as_ref().len() != dim {
            return Err(Error::DimensionMismatch(dim, p.as_ref().len()));
        }
    }
    let pts: Vec<&[f64]> = points.iter().map(|p| p.as_ref()).collect();
    Ok(match metric {
        Metric::LInf => box_center(&pts),
        Metric::L2 => {
            let center = if pts.len() == 1 {
                pts[0].to_vec()
            } else if pts.len() == 2 {
                pts[0].iter().zip(pts[1]).map(|(a, b)| 0.5 * (a + b)).collect()
            } else {
                let mut boundary = Vec::with_capacity(pts.len());
                welzl(&pts, pts.len(), &mut boundary).center
            };
            let radius = pts
                .iter()
                .map(|p| Metric::L2.dist_unchecked(p, &center))
                .fold(0.0, f64::max);
            (center, radius)
        }
    })
}

fn box_center(pts: &[&[f64]]) -> (Vec<f64>, f64) {
    let dim = pts[0].len();
    let mut lo = pts[0].to_vec();
    let mut hi = pts[0].to_vec();
    for p in &pts[1..] {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let center = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| 0.5 * (b - a))
        .fold(0.0, f64::max);
    (center, radius)
}

struct Ball {
    center: Vec<f64>,
    /// Negative for the empty ball.
    radius: f64,
}

impl Ball {
    fn contains(&self, p: &[f64]) -> bool {
        if self.radius < 0.0 {
            return false;
        }
        let d = Metric::L2.dist_unchecked(p, &self.center);
        d <= self.radius + 1e-12 * (1.0 + self.radius)
    }
}

fn welzl(pts: &[&[f64]], n: usize, boundary: &mut Vec<usize>) -> Ball {
    if n == 0 || boundary.len() == pts[0].len() + 1 {
        return circumball(pts, boundary);
    }
    let p = n - 1;
    let ball = welzl(pts, n - 1, boundary);
    if ball.contains(pts[p]) {
        return ball;
    }
    boundary.push(p);
    let ball = welzl(pts, n - 1, boundary);
    boundary.pop();
    ball
}

/// Smallest ball with all `support` points on its boundary, taken inside
/// their affine hull. Affinely dependent points are skipped.
fn circumball(pts: &[&[f64]], support: &[usize]) -> Ball {
    let Some((&first, rest)) = support.split_first() else {
        return Ball {
            center: Vec::new(),
            radius: -1.0,
        };
    };
    let origin = pts[first];
    if rest.is_empty() {
        return Ball {
            center: origin.to_vec(),
            radius: 0.0,
        };
    }
    let dirs: Vec<Vec<f64>> = rest
        .iter()
        .map(|&i| pts[i].iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    let k = dirs.len();
    // Gram system: 2 <v_j, Σ λ_k v_k> = |v_j|²
    let mut a = vec![vec![0.0; k + 1]; k];
    for j in 0..k {
        for l in 0..k {
            a[j][l] = 2.0 * dot(&dirs[j], &dirs[l]);
        }
        a[j][k] = dot(&dirs[j], &dirs[j]);
    }
    let lambda = solve_gram(a);
    let mut center = origin.to_vec();
    for (l, v) in lambda.iter().zip(&dirs) {
        for (c, x) in center.iter_mut().zip(v) {
            *c += l * x;
        }
    }
    let radius = support
        .iter()
        .map(|&i| Metric::L2.dist_unchecked(pts[i], &center))
        .fold(0.0, f64::max);
    Ball { center, radius }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an augmented k×(k+1)
/// system. Rank-deficient directions get a zero coefficient.
fn solve_gram(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let k = a.len();
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut pivot_col = vec![usize::MAX; k];
    let mut row = 0;
    for col in 0..k {
        let Some(best) = (row..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())) else {
            break;
        };
        if a[best][col].abs() <= 1e-12 * scale {
            continue;
        }
        a.swap(row, best);
        for r in 0..k {
            if r != row {
                let f = a[r][col] / a[row][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[r][c] -= f * a[row][c];
                    }
                }
            }
        }
        pivot_col[row] = col;
        row += 1;
    }
    let mut x = vec![0.0; k];
    for r in 0..row {
        let c = pivot_col[r];
        x[c] = a[r][k] / a[r][c];
    }
    x
}
