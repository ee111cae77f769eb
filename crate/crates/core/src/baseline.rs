//! Gaussian RBF kernel PCA, the fixed-kernel baseline.
//!
//! Inputs are blurred with the same channel blur before the Gram matrix is
//! formed (switchable with [`RbfParams::apply_blur`]).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{blur, ChannelParams};
use crate::dataset::Dataset;
use crate::projection::{ComponentMatrix, ProjectionMethod};
use crate::spectral::symmetric_spectrum;
use crate::{Error, Result};

pub const MIN_EIGENVALUE: f64 = 1e-12;

/// Eigenvector scaling of the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RbfScaling {
    /// `α = v/√λ`: training components `√λ v`.
    #[default]
    InverseSqrt,
    /// `α = v/λ`: training components `v`, every component with the same norm.
    Whitened,
}

impl RbfScaling {
    pub fn name(self) -> &'static str {
        match self {
            RbfScaling::InverseSqrt => "sqrt",
            RbfScaling::Whitened => "whitened",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "sqrt" => Some(RbfScaling::InverseSqrt),
            "whitened" => Some(RbfScaling::Whitened),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfParams {
    /// Kernel width in grayscale-vector Euclidean units.
    pub delta: f64,
    pub apply_blur: bool,
    /// Double-center the Gram matrix (standard kernel PCA).
    pub centered: bool,
    pub scaling: RbfScaling,
}

impl RbfParams {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        Ok(RbfParams {
            delta,
            apply_blur: true,
            centered: true,
            scaling: RbfScaling::InverseSqrt,
        })
    }
}

/// Columns of `points`, blurred when requested.
fn prepared_inputs(points: &Dataset, params: &RbfParams, channel: &ChannelParams) -> Result<DMatrix<f64>> {
    if !params.apply_blur {
        return Ok(points.points().clone());
    }
    let cols: Vec<Vec<f64>> = (0..points.len())
        .into_par_iter()
        .map(|i| blur(points.point(i), channel))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_vec(
        points.dim(),
        points.len(),
        cols.into_iter().flatten().collect(),
    ))
}

fn squared_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.norm_squared()).collect()
}

/// `exp(-‖a_i - b_j‖² / 2δ²)` between the columns of `a` and `b`.
fn cross_kernel(a: &DMatrix<f64>, b: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let na = squared_norms(a);
    let nb = squared_norms(b);
    let mut g = a.tr_mul(b);
    let scale = 1.0 / (2.0 * delta * delta);
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let d2 = (na[i] + nb[j] - 2.0 * g[(i, j)]).max(0.0);
            g[(i, j)] = (-d2 * scale).exp();
        }
    }
    g
}

fn gram(x: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let mut k = cross_kernel(x, x, delta);
    let n = k.nrows();
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in i + 1..n {
            k[(j, i)] = k[(i, j)];
        }
    }
    k
}

/// RBF Gram matrix of the (optionally blurred) points.
pub fn rbf_kernel(points: &Dataset, params: &RbfParams, channel: &ChannelParams) -> Result<DMatrix<f64>> {
    RbfParams::new(params.delta)?;
    let x = prepared_inputs(points, params, channel)?;
    Ok(gram(&x, params.delta))
}

/// Double-centered copy of a symmetric kernel plus the row means and grand
/// mean needed to center out-of-sample rows.
pub fn center_kernel(kernel: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, f64) {
    let n = kernel.nrows();
    let row_means: Vec<f64> = kernel.row_iter().map(|r| r.sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let centered = DMatrix::from_fn(n, n, |i, j| kernel[(i, j)] - (row_means[i] + row_means[j]) + grand);
    (centered, row_means, grand)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfBasis {
    pub eigenvalues: Vec<f64>,
    /// n × k eigenvectors scaled by `1/√λ` (or `1/λ` when whitened).
    pub alphas: DMatrix<f64>,
    pub row_means: Vec<f64>,
    pub grand_mean: f64,
    pub centered: bool,
    /// Components of the training points themselves (n × k).
    pub training_components: DMatrix<f64>,
}

impl RbfBasis {
    pub fn k(&self) -> usize {
        self.alphas.ncols()
    }

    /// Components of points given their raw kernel rows against the
    /// training set (one row per point).
    pub fn project_rows(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.alphas.nrows();
        if rows.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.ncols(),
            });
        }
        let mut r = rows.clone();
        if self.centered {
            for mut row in r.row_iter_mut() {
                let mean = row.sum() / n as f64;
                for (i, v) in row.iter_mut().enumerate() {
                    *v = *v - mean - self.row_means[i] + self.grand_mean;
                }
            }
        }
        Ok(r * &self.alphas)
    }
}

/// Kernel PCA on a precomputed Gram matrix, double-centered.
pub fn kpca_fit(kernel: &DMatrix<f64>, k: usize) -> Result<RbfBasis> {
    kpca_fit_with(kernel, k, true)
}

/// Kernel PCA with or without double-centering.
pub fn kpca_fit_with(kernel: &DMatrix<f64>, k: usize, centered: bool) -> Result<RbfBasis> {
    kpca_fit_scaled(kernel, k, centered, RbfScaling::InverseSqrt)
}

pub fn kpca_fit_scaled(kernel: &DMatrix<f64>, k: usize, centered: bool, scaling: RbfScaling) -> Result<RbfBasis> {
    let n = kernel.nrows();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, max: n });
    }
    let (work, row_means, grand_mean) = if centered {
        center_kernel(kernel)
    } else {
        (kernel.clone(), vec![0.0; n], 0.0)
    };
    let spectrum = symmetric_spectrum(&work)?;
    let mut alphas = DMatrix::zeros(n, k);
    let mut training_components = DMatrix::zeros(n, k);
    for j in 0..k {
        let lambda = spectrum.eigenvalues[j];
        if lambda <= MIN_EIGENVALUE {
            return Err(Error::NonPositiveEigenvalue {
                index: j,
                value: lambda,
            });
        }
        let v = spectrum.eigenvectors.column(j);
        let (a, t) = match scaling {
            RbfScaling::InverseSqrt => (1.0 / lambda.sqrt(), lambda.sqrt()),
            RbfScaling::Whitened => (1.0 / lambda, 1.0),
        };
        alphas.column_mut(j).copy_from(&(v * a));
        training_components.column_mut(j).copy_from(&(v * t));
    }
    Ok(RbfBasis {
        eigenvalues: spectrum.eigenvalues[..k].to_vec(),
        alphas,
        row_means,
        grand_mean,
        centered,
        training_components,
    })
}

/// Components of one new point.
pub fn kpca_project(
    z: &[f64],
    basis: &RbfBasis,
    training: &Dataset,
    params: &RbfParams,
    channel: &ChannelParams,
) -> Result<Vec<f64>> {
    if z.len() != training.dim() {
        return Err(Error::DimensionMismatch {
            expected: training.dim(),
            found: z.len(),
        });
    }
    let single = Dataset::new(DMatrix::from_column_slice(z.len(), 1, z), None)?;
    let model = RbfModel::from_parts(training, *params, *channel, basis.clone())?;
    Ok(model.project(&single)?.values.iter().copied().collect())
}

/// A fitted baseline: prepared training inputs plus the basis.
#[derive(Debug, Clone)]
pub struct RbfModel {
    pub params: RbfParams,
    pub channel: ChannelParams,
    train: DMatrix<f64>,
    pub basis: RbfBasis,
}

impl RbfModel {
    pub fn fit(training: &Dataset, params: RbfParams, channel: ChannelParams, k: usize) -> Result<Self> {
        RbfParams::new(params.delta)?;
        let train = prepared_inputs(training, &params, &channel)?;
        let basis = kpca_fit_scaled(&gram(&train, params.delta), k, params.centered, params.scaling)?;
        Ok(RbfModel {
            params,
            channel,
            train,
            basis,
        })
    }

    fn from_parts(training: &Dataset, params: RbfParams, channel: ChannelParams, basis: RbfBasis) -> Result<Self> {
        let train = prepared_inputs(training, &params, &channel)?;
        Ok(RbfModel {
            params,
            channel,
            train,
            basis,
        })
    }

    pub fn training_components(&self, labels: Option<&[u8]>) -> ComponentMatrix {
        ComponentMatrix::new(self.basis.training_components.clone(), ProjectionMethod::Rbf).with_labels(labels)
    }

    pub fn project(&self, points: &Dataset) -> Result<ComponentMatrix> {
        if points.dim() != self.train.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.train.nrows(),
                found: points.dim(),
            });
        }
        let x = prepared_inputs(points, &self.params, &self.channel)?;
        let rows = cross_kernel(&x, &self.train, self.params.delta);
        Ok(ComponentMatrix::new(self.basis.project_rows(&rows)?, ProjectionMethod::Rbf).with_labels(points.labels()))
    }
}
