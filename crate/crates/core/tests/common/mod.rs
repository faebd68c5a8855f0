#![allow(dead_code)]

use advbound::complex::{build_complex, ComplexOptions, InteractionComplex};
use advbound::lp::{assemble_lp, solve_lp, LpOptions, LpSolution};
use advbound::{LabeledPointCloud, Metric};
use rand::Rng;

/// Uniform-mass cloud in `[0, 2]^2` with every class present.
pub fn random_cloud<R: Rng>(rng: &mut R, max_points: usize, max_classes: usize) -> LabeledPointCloud {
    let k = rng.random_range(1..=max_classes);
    let n = rng.random_range(k.max(1)..=max_points.max(k));
    let mut labels: Vec<usize> = (0..k).collect();
    labels.extend((k..n).map(|_| rng.random_range(0..k)));
    let points = (0..n)
        .map(|_| vec![rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)])
        .collect();
    LabeledPointCloud::uniform(points, labels).unwrap()
}

pub fn complex(cloud: &LabeledPointCloud, eps: f64, level: usize) -> InteractionComplex {
    build_complex(cloud, eps, Metric::L2, level, &ComplexOptions::default()).unwrap()
}

pub fn lp(cloud: &LabeledPointCloud, complex: &InteractionComplex) -> LpSolution {
    let problem = assemble_lp(complex, cloud).unwrap();
    solve_lp(&problem, &LpOptions::default()).unwrap()
}

pub fn lp_risk(cloud: &LabeledPointCloud, eps: f64, level: usize) -> f64 {
    lp(cloud, &complex(cloud, eps, level)).risk_lower_bound
}
