//! Labeled empirical measures.

use crate::error::{Error, Result};

/// Tolerance on `Σ masses = 1`.
pub const MASS_SUM_TOL: f64 = 1e-9;

/// Finite labeled point cloud carrying the empirical measure μ = (μ_1, …, μ_K).
///
/// Class labels are zero-based: `0..num_classes`. Every class must own at
/// least one point, all points share a dimension, and masses are positive and
/// sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPointCloud {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    masses: Vec<f64>,
    num_classes: usize,
    class_points: Vec<Vec<usize>>,
    local_index: Vec<usize>,
}

impl LabeledPointCloud {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud"));
        }
        if labels.len() != points.len() || masses.len() != points.len() {
            return Err(Error::InvalidCloud(format!(
                "{} points, {} labels, {} masses",
                points.len(),
                labels.len(),
                masses.len()
            )));
        }
        let dim = points[0].len();
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.len()));
        }
        if let Some((i, _)) = points
            .iter()
            .enumerate()
            .find(|(_, p)| p.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::InvalidCloud(format!("point {i} has a non-finite coordinate")));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| **m <= 0.0 || !m.is_finite()) {
            return Err(Error::InvalidCloud(format!("mass {m} at point {i} is not positive")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidCloud(format!("masses sum to {total}, expected 1")));
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut class_points = vec![Vec::new(); num_classes];
        let mut local_index = vec![0; points.len()];
        for (i, &y) in labels.iter().enumerate() {
            local_index[i] = class_points[y].len();
            class_points[y].push(i);
        }
        if let Some(empty) = class_points.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidCloud(format!("class {empty} has no points")));
        }
        Ok(Self {
            points,
            labels,
            masses,
            num_classes,
            class_points,
            local_index,
        })
    }

    /// Cloud with uniform masses `1/N`. The last mass absorbs the rounding
    /// residual so the left-to-right sum is exactly one.
    pub fn uniform(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let masses = uniform_masses(points.len());
        Self::new(points, labels, masses)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Global indices of the points of class `class`, in increasing order.
    pub fn class_points(&self, class: usize) -> &[usize] {
        &self.class_points[class]
    }

    /// Position of global point `i` inside its class list.
    pub fn local_index(&self, i: usize) -> usize {
        self.local_index[i]
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.class_points.iter().map(Vec::len).collect()
    }

    /// μ_i as a vector over the class support.
    pub fn class_masses(&self, class: usize) -> Vec<f64> {
        self.class_points[class].iter().map(|&i| self.masses[i]).collect()
    }
}

pub(crate) fn uniform_masses(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let w = 1.0 / n as f64;
    let mut masses = vec![w; n];
    let head: f64 = masses[..n - 1].iter().sum();
    masses[n - 1] = 1.0 - head;
    masses
}
