//! Distance-weighted k-nearest-neighbour voting in component space.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::{Error, Result};

/// Distances below this count as an exact match.
pub const EXACT_MATCH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoteWeighting {
    /// `1/d`
    #[default]
    InverseDistance,
    /// `1/d²`
    InverseSquare,
    /// `exp(-d)`
    Exponential,
}

impl VoteWeighting {
    fn weight(self, d: f64) -> f64 {
        match self {
            VoteWeighting::InverseDistance => 1.0 / d,
            VoteWeighting::InverseSquare => 1.0 / (d * d),
            VoteWeighting::Exponential => (-d).exp(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inverse" | "1/d" => Some(VoteWeighting::InverseDistance),
            "inverse-square" | "1/d2" => Some(VoteWeighting::InverseSquare),
            "exp" => Some(VoteWeighting::Exponential),
            _ => None,
        }
    }
}

/// Classify every row of `test` by the `neighbors` nearest rows of `train`,
/// using all columns and `1/d` votes.
pub fn knn_classify(train: &DMatrix<f64>, labels: &[u8], test: &DMatrix<f64>, neighbors: usize) -> Result<Vec<u8>> {
    knn_classify_with(train, labels, test, train.ncols(), neighbors, VoteWeighting::default())
}

/// Like [`knn_classify`] but restricted to the first `components` columns.
///
/// Ties in the weighted vote go to the nearest neighbour's label when it is
/// among the tied labels, otherwise to the smallest label.
pub fn knn_classify_with(
    train: &DMatrix<f64>,
    labels: &[u8],
    test: &DMatrix<f64>,
    components: usize,
    neighbors: usize,
    weighting: VoteWeighting,
) -> Result<Vec<u8>> {
    if train.nrows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if labels.len() != train.nrows() {
        return Err(Error::LengthMismatch {
            left: train.nrows(),
            right: labels.len(),
        });
    }
    if train.ncols() != test.ncols() {
        return Err(Error::DimensionMismatch {
            expected: train.ncols(),
            found: test.ncols(),
        });
    }
    if components == 0 || components > train.ncols() {
        return Err(Error::KOutOfRange {
            k: components,
            max: train.ncols(),
        });
    }
    if neighbors == 0 || neighbors > train.nrows() {
        return Err(Error::InvalidParameter(format!(
            "neighbors must be in 1..={}, got {neighbors}",
            train.nrows()
        )));
    }
    // Row-major copies keep the inner distance loop contiguous.
    let tr: Vec<f64> = (0..train.nrows())
        .flat_map(|r| (0..components).map(move |c| train[(r, c)]))
        .collect();
    Ok((0..test.nrows())
        .into_par_iter()
        .map(|t| {
            let q: Vec<f64> = (0..components).map(|c| test[(t, c)]).collect();
            let mut dist: Vec<(f64, u8, usize)> = tr
                .chunks_exact(components)
                .enumerate()
                .map(|(i, row)| {
                    let d2: f64 = row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2.sqrt(), labels[i], i)
                })
                .collect();
            let cmp = |a: &(f64, u8, usize), b: &(f64, u8, usize)| {
                a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
            };
            dist.select_nth_unstable_by(neighbors - 1, cmp);
            let nearest = &mut dist[..neighbors];
            nearest.sort_by(cmp);
            vote(nearest, weighting)
        })
        .collect())
}

fn vote(nearest: &[(f64, u8, usize)], weighting: VoteWeighting) -> u8 {
    let first = nearest[0];
    if first.0 < EXACT_MATCH {
        return first.1;
    }
    let mut tally = [0.0f64; 256];
    for &(d, label, _) in nearest {
        tally[label as usize] += weighting.weight(d);
    }
    let best = tally.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if tally[first.1 as usize] == best {
        return first.1;
    }
    tally.iter().position(|&w| w == best).unwrap() as u8
}

/// Percentage of mismatches.
pub fn error_rate(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::Empty);
    }
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(100.0 * wrong as f64 / predicted.len() as f64)
}

/// `counts[truth][predicted]` over labels 0..=9.
pub fn confusion_matrix(predicted: &[u8], truth: &[u8]) -> Result<[[usize; 10]; 10]> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let mut m = [[0usize; 10]; 10];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p > 9 || t > 9 {
            return Err(Error::InvalidParameter(format!("label out of range: {p}/{t}")));
        }
        m[t as usize][p as usize] += 1;
    }
    Ok(m)
}

/// Confusion matrix as CSV, restricted to the labels that occur.
pub fn confusion_csv(m: &[[usize; 10]; 10]) -> String {
    let used: Vec<usize> = (0..10)
        .filter(|&l| (0..10).any(|o| m[l][o] > 0 || m[o][l] > 0))
        .collect();
    let mut out = String::from("truth\\predicted");
    for l in &used {
        out.push_str(&format!(",{l}"));
    }
    out.push('\n');
    for &t in &used {
        out.push_str(&t.to_string());
        for &p in &used {
            out.push_str(&format!(",{}", m[t][p]));
        }
        out.push('\n');
    }
    out
}
