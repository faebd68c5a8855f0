//! Dataset ingestion, synthetic generators and deterministic subsampling.
//!
//! Every loader produces a [`LabeledPointCloud`] with uniform masses. Raw
//! labels are remapped to `0..K` in sorted order (numeric when every label
//! parses as an integer); the returned name table maps class index back to
//! the original label.

mod csv_io;
mod idx;
mod synth;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, CsvOptions, LabelColumn};
pub use idx::{load_idx, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};
pub use synth::{synth_gaussian, triangle_fixture, OUTER_OFFSET, SIX_CLASS_MEANS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalize {
    #[default]
    None,
    /// Divide every coordinate by the largest absolute coordinate value.
    UnitScale,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, options: CsvOptions },
    Idx { images: PathBuf, labels: PathBuf },
    SyntheticGaussian {
        means: Vec<Vec<f64>>,
        samples_per_class: usize,
        cov_scale: f64,
    },
    TrianglePair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub source: DataSource,
    /// Original label names to keep; `None` keeps all.
    pub classes_filter: Option<Vec<String>>,
    pub per_class_count: Option<usize>,
    pub seed: u64,
    pub normalize: Normalize,
}

impl DatasetSpec {
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            classes_filter: None,
            per_class_count: None,
            seed: 0,
            normalize: Normalize::None,
        }
    }
}

/// Load a dataset, returning the cloud and the class-name table.
pub fn load_dataset(spec: &DatasetSpec) -> Result<(LabeledPointCloud, Vec<String>)> {
    let raw = match &spec.source {
        DataSource::Csv { path, options } => read_csv(path, options)?,
        DataSource::Idx { images, labels } => {
            let points = read_idx_images(images)?;
            let labels_raw = read_idx_labels(labels)?;
            if points.len() != labels_raw.len() {
                return Err(Error::MalformedIdx {
                    path: labels.clone(),
                    reason: format!("{} labels for {} images", labels_raw.len(), points.len()),
                });
            }
            RawDataset {
                points,
                labels: labels_raw.iter().map(u8::to_string).collect(),
            }
        }
        DataSource::SyntheticGaussian {
            means,
            samples_per_class,
            cov_scale,
        } => RawDataset::from_cloud(&synth_gaussian(means, *samples_per_class, *cov_scale, spec.seed)?),
        DataSource::TrianglePair => RawDataset::from_cloud(&triangle_fixture()),
    };
    raw.into_cloud(
        spec.classes_filter.as_deref(),
        spec.per_class_count,
        spec.seed,
        spec.normalize,
    )
}

/// Features with unmapped string labels.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl RawDataset {
    fn from_cloud(cloud: &LabeledPointCloud) -> Self {
        Self {
            points: cloud.points().to_vec(),
            labels: cloud.labels().iter().map(usize::to_string).collect(),
        }
    }

    /// Filter classes, cap per-class counts, remap labels and normalize.
    pub fn into_cloud(
        self,
        classes_filter: Option<&[String]>,
        per_class: Option<usize>,
        seed: u64,
        normalize: Normalize,
    ) -> Result<(LabeledPointCloud, Vec<String>)> {
        let mut names: Vec<String> = self
            .labels
            .iter()
            .filter(|l| classes_filter.is_none_or(|keep| keep.contains(l)))
            .cloned()
            .collect();
        sort_labels(&mut names);
        names.dedup();
        if names.is_empty() {
            return Err(Error::EmptyInput("dataset after class filtering"));
        }
        let class_of = |label: &str| names.iter().position(|n| n == label);

        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = class_of(l) {
                by_class[c].push(i);
            }
        }
        if let Some(cap) = per_class {
            if cap == 0 {
                return Err(crate::error::invalid("per_class", "must be at least 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for idx in by_class.iter_mut() {
                if idx.len() > cap {
                    idx.shuffle(&mut rng);
                    idx.truncate(cap);
                    idx.sort_unstable();
                }
            }
        }
        let mut keep: Vec<(usize, usize)> = by_class
            .iter()
            .enumerate()
            .flat_map(|(c, idx)| idx.iter().map(move |&i| (i, c)))
            .collect();
        keep.sort_unstable();

        let mut points: Vec<Vec<f64>> = keep.iter().map(|&(i, _)| self.points[i].clone()).collect();
        let labels: Vec<usize> = keep.iter().map(|&(_, c)| c).collect();
        if normalize == Normalize::UnitScale {
            let scale = points
                .iter()
                .flatten()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            if scale > 0.0 {
                for x in points.iter_mut().flatten() {
                    *x /= scale;
                }
            }
        }
        Ok((LabeledPointCloud::uniform(points, labels)?, names))
    }
}

fn sort_labels(names: &mut [String]) {
    if names.iter().all(|n| n.trim().parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.trim().parse::<i64>().unwrap());
    } else {
        names.sort();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw() -> RawDataset {
        RawDataset {
            points: (0..9).map(|i| vec![i as f64]).collect(),
            labels: ["10", "2", "10", "2", "7", "7", "10", "2", "7"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let (cloud, names) = raw().into_cloud(None, None, 0, Normalize::None).unwrap();
        assert_eq!(names, vec!["2", "7", "10"]);
        assert_eq!(cloud.labels(), &[2, 0, 2, 0, 1, 1, 2, 0, 1]);
        assert_eq!(cloud.masses().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn filter_and_cap_are_deterministic() {
        let filter = vec!["10".to_string(), "7".to_string()];
        let a = raw().into_cloud(Some(&filter), Some(2), 42, Normalize::None).unwrap();
        let b = raw().into_cloud(Some(&filter), Some(2), 42, Normalize::None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, vec!["7", "10"]);
        assert_eq!(a.0.class_sizes(), vec![2, 2]);
    }

    #[test]
    fn unit_scale() {
        let (cloud, _) = raw().into_cloud(None, None, 0, Normalize::UnitScale).unwrap();
        assert_eq!(cloud.point(8), &[1.0]);
        assert_eq!(cloud.point(4), &[0.5]);
    }

    #[test]
    fn load_synthetic_spec() {
        let spec = DatasetSpec {
            seed: 3,
            ..DatasetSpec::new(DataSource::SyntheticGaussian {
                means: SIX_CLASS_MEANS.iter().map(|m| m.to_vec()).collect(),
                samples_per_class: 30,
                cov_scale: 1.0,
            })
        };
        let (cloud, names) = load_dataset(&spec).unwrap();
        assert_eq!(cloud.len(), 180);
        assert_eq!(names.len(), 6);
        let (tri, _) = load_dataset(&DatasetSpec::new(DataSource::TrianglePair)).unwrap();
        assert_eq!(tri, triangle_fixture());
    }
}
