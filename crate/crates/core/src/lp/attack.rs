use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::LabeledPointCloud;
use crate::complex::InteractionComplex;
use crate::error::{Error, Result};

use super::{check_compatible, LpSolution, LpStatus};

/// Masses below this are dropped from the recovered measures.
pub const ATOM_MASS_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
    /// LP column (interaction) that produced this atom.
    pub column: usize,
}

/// Optimal barycenter and the perturbed class measures it induces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub barycenter: Vec<Atom>,
    /// `attacked[i]` is the perturbed measure of class `i`.
    pub attacked: Vec<Vec<Atom>>,
    pub mass_by_order: BTreeMap<usize, f64>,
}

impl AttackPlan {
    pub fn barycenter_mass(&self) -> f64 {
        self.barycenter.iter().map(|a| a.mass).sum()
    }

    pub fn class_mass(&self, class: usize) -> f64 {
        self.attacked[class].iter().map(|a| a.mass).sum()
    }
}

/// Place each interaction's weight at its witness. Class `i` is moved onto
/// the witnesses of every interaction it takes part in.
pub fn recover_attack(
    solution: &LpSolution,
    complex: &InteractionComplex,
    cloud: &LabeledPointCloud,
) -> Result<AttackPlan> {
    if solution.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(solution.status.name().into()));
    }
    check_compatible(complex, cloud)?;
    if solution.weights.len() != complex.total_count() {
        return Err(Error::ComplexMismatch(format!(
            "{} weights for {} interactions",
            solution.weights.len(),
            complex.total_count()
        )));
    }
    let mut barycenter = Vec::new();
    let mut attacked = vec![Vec::new(); cloud.num_classes()];
    let mut mass_by_order = BTreeMap::new();
    for (column, (it, &w)) in complex.iter().zip(&solution.weights).enumerate() {
        if w < ATOM_MASS_FLOOR {
            continue;
        }
        let atom = Atom {
            location: it.witness.clone(),
            mass: w,
            column,
        };
        for m in &it.members {
            attacked[m.class].push(atom.clone());
        }
        *mass_by_order.entry(it.order()).or_insert(0.0) += w;
        barycenter.push(atom);
    }
    Ok(AttackPlan {
        barycenter,
        attacked,
        mass_by_order,
    })
}
