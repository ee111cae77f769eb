//! Spectrum of the detraced kernel and the leading feature basis.
//!
//! A feature is `X = (1/√n) Σ_i X^i δ_{x_i}`. The sample deltas satisfy
//! `⟨δ_{x_i}, δ_{x_j}⟩_ρ = n δ_ij` in the Fisher metric, so unit Euclidean
//! coefficient vectors are exactly Fisher-orthonormal features.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::kernel::{KernelMatrix, KernelStage};
use crate::{Error, Result};

/// Largest tolerated `|K_ij - K_ji|` before refusing to eigendecompose.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Full spectrum, eigenvalues descending, eigenvectors in matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    /// `η_1 ≥ … ≥ η_k`.
    pub eigenvalues: Vec<f64>,
    /// n × k, column `j` holds the coefficients `X_j^i`.
    pub coefficients: DMatrix<f64>,
    /// Index pairs `(a, a+1)` whose eigenvalues lie within [`DEGENERACY_TOL`].
    pub degenerate: Vec<(usize, usize)>,
}

impl FeatureBasis {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Fisher inner product `⟨X_a, X_b⟩_ρ` of two basis features.
    pub fn fisher_inner(&self, a: usize, b: usize) -> f64 {
        self.coefficients.column(a).dot(&self.coefficients.column(b))
    }

    /// Keep only the first `k` features.
    pub fn truncated(&self, k: usize) -> Result<FeatureBasis> {
        if k == 0 || k > self.k() {
            return Err(Error::KOutOfRange { k, max: self.k() });
        }
        Ok(FeatureBasis {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            coefficients: self.coefficients.columns(0, k).into_owned(),
            degenerate: self.degenerate.iter().copied().filter(|&(_, b)| b < k).collect(),
        })
    }
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Dense symmetric eigensolve of a detraced kernel.
pub fn eigendecompose(kernel: &KernelMatrix) -> Result<Spectrum> {
    if kernel.stage != KernelStage::Detraced {
        return Err(Error::WrongStage {
            expected: KernelStage::Detraced.name(),
            found: kernel.stage.name(),
        });
    }
    symmetric_spectrum(&kernel.entries)
}

/// Eigendecomposition of any symmetric matrix: descending eigenvalues, and
/// each eigenvector signed so its largest-magnitude entry is positive.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let worst = max_asymmetry(m);
    if worst > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(worst));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut lead = 0;
        for i in 1..n {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        vectors.column_mut(dst).copy_from(&(col * sign));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// The `k` most relevant features.
pub fn top_features(spectrum: &Spectrum, k: usize) -> Result<FeatureBasis> {
    let n = spectrum.eigenvalues.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, max: n });
    }
    let eigenvalues = spectrum.eigenvalues[..k].to_vec();
    let degenerate: Vec<(usize, usize)> = (1..k)
        .filter(|&b| (eigenvalues[b - 1] - eigenvalues[b]).abs() <= DEGENERACY_TOL)
        .map(|b| (b - 1, b))
        .collect();
    if !degenerate.is_empty() {
        log::warn!("degenerate eigenvalue pairs among top {k}: {degenerate:?}");
    }
    Ok(FeatureBasis {
        eigenvalues,
        coefficients: spectrum.eigenvectors.columns(0, k).into_owned(),
        degenerate,
    })
}
