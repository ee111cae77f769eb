//! MNIST-style IDX ingestion and per-class subsets.
//!
//! Images are normalized to `b / 255.0` so the brightest pixel is exactly 1.
//! Labels travel next to the points but nothing in the feature-extraction
//! path reads them; only [`crate::classifier`] does.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;

use crate::rng;
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images decoded from an IDX3 file, row-major, values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl ImageSet {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, index: usize) -> &[f64] {
        let m = self.pixels_per_image();
        &self.pixels[index * m..(index + 1) * m]
    }

    /// Re-encode as IDX3 bytes. Inverse of [`parse_idx_images`].
    pub fn to_idx_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        for d in [self.count, self.rows, self.cols] {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend(self.pixels.iter().map(|&p| (p * 255.0).round() as u8));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: Vec<u8>,
}

impl LabelSet {
    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn to_idx_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.labels.len());
        out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.labels);
        out
    }
}

/// `n` points of dimension `m`, stored one point per column.
///
/// The points define the empirical distribution (uniform weight `1/n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: DMatrix<f64>,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    /// Build from a column-per-point matrix.
    pub fn new(points: DMatrix<f64>, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.ncols() {
                return Err(Error::LengthMismatch {
                    left: points.ncols(),
                    right: l.len(),
                });
            }
        }
        Ok(Dataset { points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<u8>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        let points = DMatrix::from_fn(m, rows.len(), |r, c| rows[c][r]);
        Dataset::new(points, labels)
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        let m = self.dim();
        &self.points.as_slice()[index * m..(index + 1) * m]
    }

    /// Column-per-point matrix (m × n).
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Copy with the labels dropped.
    pub fn unlabeled(&self) -> Dataset {
        Dataset {
            points: self.points.clone(),
            labels: None,
        }
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Truncated {
            needed: offset + 4,
            available: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Parse an IDX3 unsigned-byte image file.
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let len = count * rows * cols;
    let payload = bytes.get(16..16 + len).ok_or(Error::Truncated {
        needed: 16 + len,
        available: bytes.len(),
    })?;
    Ok(ImageSet {
        count,
        rows,
        cols,
        pixels: payload.iter().map(|&b| f64::from(b) / 255.0).collect(),
    })
}

/// Parse an IDX1 unsigned-byte label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<LabelSet> {
    check_magic(bytes, LABEL_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let payload = bytes.get(8..8 + count).ok_or(Error::Truncated {
        needed: 8 + count,
        available: bytes.len(),
    })?;
    Ok(LabelSet {
        labels: payload.to_vec(),
    })
}

/// Read and parse an image file and its label file.
pub fn read_idx_pair(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<(ImageSet, LabelSet)> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    let images = parse_idx_images(&read(images.as_ref())?)?;
    let labels = parse_idx_labels(&read(labels.as_ref())?)?;
    check_paired(&images, &labels)?;
    Ok((images, labels))
}

fn check_paired(images: &ImageSet, labels: &LabelSet) -> Result<()> {
    if images.count != labels.count() {
        return Err(Error::LengthMismatch {
            left: images.count,
            right: labels.count(),
        });
    }
    Ok(())
}

fn gather(images: &ImageSet, indices: &[usize], labels: Vec<u8>) -> Result<Dataset> {
    let m = images.pixels_per_image();
    let mut data = Vec::with_capacity(m * indices.len());
    for &i in indices {
        data.extend_from_slice(images.image(i));
    }
    Dataset::new(DMatrix::from_vec(m, indices.len(), data), Some(labels))
}

/// Draw `per_class` images of each requested digit without replacement.
///
/// Digit `d` draws from stream `(seed, d)`, so a class's sample does not
/// depend on which other digits are requested. Output order is digit
/// ascending, then draw order.
pub fn select_subset(
    images: &ImageSet,
    labels: &LabelSet,
    digits: &BTreeSet<u8>,
    per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    check_paired(images, labels)?;
    let mut chosen = Vec::with_capacity(digits.len() * per_class);
    let mut chosen_labels = Vec::with_capacity(digits.len() * per_class);
    for &digit in digits {
        let pool: Vec<usize> = (0..labels.count()).filter(|&i| labels.labels[i] == digit).collect();
        if pool.len() < per_class {
            return Err(Error::InsufficientClassCount {
                digit,
                requested: per_class,
                available: pool.len(),
            });
        }
        let mut rng = rng::stream(seed, u64::from(digit));
        let picks = rand::seq::index::sample(&mut rng, pool.len(), per_class);
        chosen.extend(picks.iter().map(|p| pool[p]));
        chosen_labels.extend(std::iter::repeat_n(digit, per_class));
    }
    gather(images, &chosen, chosen_labels)
}

/// Every image whose label is in `digits`, in file order.
pub fn restrict_to_digits(images: &ImageSet, labels: &LabelSet, digits: &BTreeSet<u8>) -> Result<Dataset> {
    check_paired(images, labels)?;
    let indices: Vec<usize> = (0..labels.count())
        .filter(|&i| digits.contains(&labels.labels[i]))
        .collect();
    let l = indices.iter().map(|&i| labels.labels[i]).collect();
    gather(images, &indices, l)
}
