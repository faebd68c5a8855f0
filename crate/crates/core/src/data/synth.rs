use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::LabeledPointCloud;
use crate::error::{invalid, Result};

/// Class centres of the six-class planar Gaussian mixture.
pub const SIX_CLASS_MEANS: [[f64; 2]; 6] = [
    [-2.0, 2.0],
    [2.0, 2.0],
    [6.0, 2.0],
    [-2.0, -2.0],
    [2.0, -2.0],
    [6.0, -2.0],
];

/// Distance between corresponding inner and outer triangle vertices.
pub const OUTER_OFFSET: f64 = 2.0207;

/// Isotropic Gaussian classes `N(mean_i, cov_scale · I)`.
///
/// Samples are drawn class by class from a single ChaCha stream, so a fixed
/// seed always yields the same cloud.
pub fn synth_gaussian(
    means: &[Vec<f64>],
    samples_per_class: usize,
    cov_scale: f64,
    seed: u64,
) -> Result<LabeledPointCloud> {
    if means.is_empty() {
        return Err(invalid("means", "at least one class mean is required"));
    }
    if samples_per_class == 0 {
        return Err(invalid("samples_per_class", "must be at least 1"));
    }
    if cov_scale < 0.0 || !cov_scale.is_finite() {
        return Err(invalid("cov_scale", format!("must be non-negative, got {cov_scale}")));
    }
    let std = cov_scale.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(means.len() * samples_per_class);
    let mut labels = Vec::with_capacity(points.capacity());
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..samples_per_class {
            let p = mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + std * z
                })
                .collect();
            points.push(p);
            labels.push(class);
        }
    }
    LabeledPointCloud::uniform(points, labels)
}

/// Two concentric, equally oriented equilateral triangles, one point per
/// class. Classes 0..3 form the inner unit triangle (circumradius 1/√3);
/// class `i + 3` sits on the same ray as class `i`, [`OUTER_OFFSET`] further out.
pub fn triangle_fixture() -> LabeledPointCloud {
    let inner = 1.0 / 3f64.sqrt();
    let outer = inner + OUTER_OFFSET;
    let mut points = Vec::with_capacity(6);
    for radius in [inner, outer] {
        for k in 0..3 {
            let angle = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
            points.push(vec![radius * angle.cos(), radius * angle.sin()]);
        }
    }
    LabeledPointCloud::uniform(points, (0..6).collect()).expect("fixture is valid")
}
