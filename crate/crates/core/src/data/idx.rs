//! Big-endian IDX files as distributed with MNIST.

use std::fs;
use std::path::Path;

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};

use super::{Normalize, RawDataset};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Read an unsigned-byte image file; each image becomes a flat vector of raw
/// pixel values.
pub fn read_idx_images(path: &Path) -> Result<Vec<Vec<f64>>> {
    let bytes = fs::read(path)?;
    let bad = |reason: String| Error::MalformedIdx {
        path: path.to_path_buf(),
        reason,
    };
    let header = read_header(&bytes, 4).ok_or_else(|| bad("truncated header".into()))?;
    if header[0] != IMAGES_MAGIC {
        return Err(bad(format!("magic {:#x}, expected {IMAGES_MAGIC:#x}", header[0])));
    }
    let (n, rows, cols) = (header[1] as usize, header[2] as usize, header[3] as usize);
    let pixels = rows * cols;
    let body = &bytes[16..];
    if body.len() != n * pixels {
        return Err(bad(format!("{} data bytes, expected {}", body.len(), n * pixels)));
    }
    if pixels == 0 {
        return Err(bad("zero-sized images".into()));
    }
    Ok(body
        .chunks_exact(pixels)
        .map(|img| img.iter().map(|&b| f64::from(b)).collect())
        .collect())
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let bad = |reason: String| Error::MalformedIdx {
        path: path.to_path_buf(),
        reason,
    };
    let header = read_header(&bytes, 2).ok_or_else(|| bad("truncated header".into()))?;
    if header[0] != LABELS_MAGIC {
        return Err(bad(format!("magic {:#x}, expected {LABELS_MAGIC:#x}", header[0])));
    }
    let body = &bytes[8..];
    if body.len() != header[1] as usize {
        return Err(bad(format!("{} labels, header says {}", body.len(), header[1])));
    }
    Ok(body.to_vec())
}

/// Load an image/label pair, keeping `per_class` images of each digit chosen
/// by a seeded shuffle.
pub fn load_idx(
    images: &Path,
    labels: &Path,
    per_class: Option<usize>,
    seed: u64,
) -> Result<(LabeledPointCloud, Vec<String>)> {
    let points = read_idx_images(images)?;
    let raw_labels = read_idx_labels(labels)?;
    if points.len() != raw_labels.len() {
        return Err(Error::MalformedIdx {
            path: labels.to_path_buf(),
            reason: format!("{} labels for {} images", raw_labels.len(), points.len()),
        });
    }
    RawDataset {
        points,
        labels: raw_labels.iter().map(u8::to_string).collect(),
    }
    .into_cloud(None, per_class, seed, Normalize::None)
}

pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    if images.iter().any(|img| img.len() != rows * cols) {
        return Err(Error::DimensionMismatch(rows * cols, images.iter().map(Vec::len).find(|&l| l != rows * cols).unwrap_or(0)));
    }
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out)?;
    Ok(())
}

fn read_header(bytes: &[u8], words: usize) -> Option<Vec<u32>> {
    if bytes.len() < 4 * words {
        return None;
    }
    Some(
        bytes[..4 * words]
            .chunks_exact(4)
            .map(|w| u32::from_be_bytes([w[0], w[1], w[2], w[3]]))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_subsample() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
        let images: Vec<Vec<u8>> = (0..12u8).map(|i| vec![i, 255 - i, 0, i / 2]).collect();
        let labels: Vec<u8> = (0..12u8).map(|i| i % 3).collect();
        write_idx_images(&img, &images, 2, 2).unwrap();
        write_idx_labels(&lab, &labels).unwrap();

        let pts = read_idx_images(&img).unwrap();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts[5], vec![5.0, 250.0, 0.0, 2.0]);
        assert_eq!(read_idx_labels(&lab).unwrap(), labels);

        let (cloud, names) = load_idx(&img, &lab, Some(2), 11).unwrap();
        assert_eq!(names, vec!["0", "1", "2"]);
        assert_eq!(cloud.class_sizes(), vec![2, 2, 2]);
        assert_eq!(load_idx(&img, &lab, Some(2), 11).unwrap().0, cloud);
    }

    #[test]
    fn rejects_bad_magic_and_length() {
        let dir = tempfile::tempdir().unwrap();
        let lab = dir.path().join("lab");
        write_idx_labels(&lab, &[1, 2, 3]).unwrap();
        assert!(matches!(read_idx_images(&lab), Err(Error::MalformedIdx { .. })));
        let mut bytes = fs::read(&lab).unwrap();
        bytes.pop();
        fs::write(&lab, bytes).unwrap();
        assert!(matches!(read_idx_labels(&lab), Err(Error::MalformedIdx { .. })));
    }
}
