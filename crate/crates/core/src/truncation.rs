//! A-posteriori bounds on the error introduced by truncating the interaction
//! order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::numeric::kahan_sum;

/// Slack allowed when checking `truncated_value ≤ full_value + bound`.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Comparison of a level-`L` solve against the untruncated (level-`K`) one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationBound {
    pub level: usize,
    pub full_value: f64,
    pub truncated_value: f64,
    /// Barycenter bound evaluated on the full solve's mass by order.
    pub bound: f64,
    pub upper_bound_on_truncated: f64,
}

impl TruncationBound {
    pub fn new(level: usize, full_value: f64, truncated_value: f64, full_mass_by_order: &BTreeMap<usize, f64>) -> Result<Self> {
        let bound = barycenter_bound(full_mass_by_order, level)?;
        Ok(Self {
            level,
            full_value,
            truncated_value,
            bound,
            upper_bound_on_truncated: full_value + bound,
        })
    }

    /// `truncated_value − full_value`.
    pub fn gap(&self) -> f64 {
        self.truncated_value - self.full_value
    }

    pub fn holds(&self) -> bool {
        self.truncated_value <= self.upper_bound_on_truncated + BOUND_TOLERANCE
    }
}

fn weighted(mass_by_order: &BTreeMap<usize, f64>, level: usize, offset: f64) -> Result<f64> {
    if level < 1 {
        return Err(invalid("level", "must be at least 1"));
    }
    if let Some((k, m)) = mass_by_order.iter().find(|(_, m)| **m < 0.0 || !m.is_finite()) {
        return Err(invalid("mass_by_order", format!("mass at order {k} is {m}")));
    }
    let l = level as f64;
    Ok(kahan_sum(
        mass_by_order
            .range(level + 1..)
            .map(|(&k, &m)| (k as f64 / l - offset) * m),
    ))
}

/// `Σ_{k>L} (k/L − 1) · mass_k`.
pub fn barycenter_bound(mass_by_order: &BTreeMap<usize, f64>, level: usize) -> Result<f64> {
    weighted(mass_by_order, level, 1.0)
}

/// `Σ_{k>L} (k/L) · mass_k`, with the coupling mass of each order read from
/// the LP weights (one tuple per interaction).
pub fn mot_bound(mass_by_order: &BTreeMap<usize, f64>, level: usize) -> Result<f64> {
    weighted(mass_by_order, level, 0.0)
}
