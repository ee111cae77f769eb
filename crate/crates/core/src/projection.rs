//! Out-of-sample projections onto the relevant features.
//!
//! Two estimators of the components of a new point `z`:
//!
//! * **fast** treats `z` as a channel output and projects on the images of
//!   the features: `z^j = Σ_i X_j^i w_i(z)` with `w` the responsibilities.
//!   No blur is applied to `z` and no integration is needed.
//! * **Monte Carlo** treats `z` as a channel input. It averages the
//!   responsibilities of `T` outputs drawn from `p(·|z)` and divides by the
//!   eigenvalue: `z̃^j = (1/η_j) Σ_i X_j^i w̄_i`.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{BlurredSet, Channel, ChannelParams, GaussianChannel};
use crate::dataset::Dataset;
use crate::rng::{self, StreamRng};
use crate::spectral::FeatureBasis;
use crate::{Error, Result};

/// Default `|η|` floor for the Monte Carlo projection.
pub const ETA_FLOOR: f64 = 1e-6;

const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectionMethod {
    Proj,
    Proj0,
    Rbf,
}

impl ProjectionMethod {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionMethod::Proj => "proj",
            ProjectionMethod::Proj0 => "proj0",
            ProjectionMethod::Rbf => "rbf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "proj" => Some(ProjectionMethod::Proj),
            "proj0" => Some(ProjectionMethod::Proj0),
            "rbf" => Some(ProjectionMethod::Rbf),
            _ => None,
        }
    }
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rows are points, columns are components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMatrix {
    pub values: DMatrix<f64>,
    pub method: ProjectionMethod,
    pub labels: Option<Vec<u8>>,
}

impl ComponentMatrix {
    pub fn new(values: DMatrix<f64>, method: ProjectionMethod) -> Self {
        ComponentMatrix {
            values,
            method,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Option<&[u8]>) -> Self {
        self.labels = labels.map(<[u8]>::to_vec);
        self
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    /// CSV with header `point_index,c1,…,ck[,label]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_index");
        for j in 1..=self.k() {
            out.push_str(&format!(",c{j}"));
        }
        if self.labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for r in 0..self.rows() {
            out.push_str(&r.to_string());
            for c in 0..self.k() {
                out.push_str(&format!(",{:e}", self.values[(r, c)]));
            }
            if let Some(l) = &self.labels {
                out.push_str(&format!(",{}", l[r]));
            }
            out.push('\n');
        }
        out
    }
}

fn check_basis<C: Channel>(channel: &C, refs: &C::Reference, basis: &FeatureBasis) -> Result<()> {
    let n = channel.reference_len(refs);
    if basis.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.n(),
        });
    }
    Ok(())
}

/// Fast components of channel outputs, one row per output.
pub fn project_fast_with<C: Channel>(
    channel: &C,
    refs: &C::Reference,
    basis: &FeatureBasis,
    outputs: &[C::Output],
) -> Result<DMatrix<f64>> {
    check_basis(channel, refs, basis)?;
    let w = channel.posteriors(refs, outputs)?;
    Ok(w.tr_mul(&basis.coefficients))
}

/// Monte Carlo components of one channel input from `samples` draws.
pub fn project_mc_with<C: Channel>(
    channel: &C,
    refs: &C::Reference,
    basis: &FeatureBasis,
    input: &C::Input,
    samples: usize,
    rng: &mut StreamRng,
    eta_floor: f64,
) -> Result<Vec<f64>> {
    check_basis(channel, refs, basis)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    check_eigenvalues(basis, eta_floor)?;
    let outputs = channel.sample_input(input, samples, rng)?;
    let post = channel.posteriors(refs, &outputs)?;
    let mean = post.column_mean();
    let raw = basis.coefficients.tr_mul(&mean);
    Ok(raw.iter().zip(&basis.eigenvalues).map(|(v, eta)| v / eta).collect())
}

fn check_eigenvalues(basis: &FeatureBasis, floor: f64) -> Result<()> {
    for (index, &value) in basis.eigenvalues.iter().enumerate() {
        if value.abs() <= floor {
            return Err(Error::DegenerateEigenvalue { index, value, floor });
        }
    }
    Ok(())
}

/// Fast components of a single raw point `z`.
pub fn project_fast(
    z: &[f64],
    basis: &FeatureBasis,
    blurred_set: &BlurredSet,
    params: &ChannelParams,
) -> Result<Vec<f64>> {
    let channel = GaussianChannel::new(*params)?;
    let row = project_fast_with(&channel, blurred_set, basis, &[z.to_vec()])?;
    Ok(row.iter().copied().collect())
}

/// Monte Carlo components of a single point `z`, `samples` draws from `stream`.
pub fn project_mc(
    z: &[f64],
    basis: &FeatureBasis,
    blurred_set: &BlurredSet,
    params: &ChannelParams,
    samples: usize,
    stream: &mut StreamRng,
) -> Result<Vec<f64>> {
    let channel = GaussianChannel::new(*params)?;
    project_mc_with(&channel, blurred_set, basis, z, samples, stream, ETA_FLOOR)
}

/// Fast components for every point of `points` (blocks of 64 share one
/// matrix product).
pub fn project_batch_fast(
    points: &Dataset,
    basis: &FeatureBasis,
    blurred_set: &BlurredSet,
    params: &ChannelParams,
) -> Result<ComponentMatrix> {
    let channel = GaussianChannel::new(*params)?;
    let k = basis.k();
    let blocks: Vec<DMatrix<f64>> = (0..points.len().div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH;
            let hi = (lo + BATCH).min(points.len());
            let outputs: Vec<Vec<f64>> = (lo..hi).map(|p| points.point(p).to_vec()).collect();
            project_fast_with(&channel, blurred_set, basis, &outputs)
        })
        .collect::<Result<_>>()?;
    let mut values = DMatrix::zeros(points.len(), k);
    for (b, block) in blocks.iter().enumerate() {
        values.rows_mut(b * BATCH, block.nrows()).copy_from(block);
    }
    Ok(ComponentMatrix::new(values, ProjectionMethod::Proj).with_labels(points.labels()))
}

/// Monte Carlo components for every point; point `p` uses stream `(seed, p)`.
pub fn project_batch_mc(
    points: &Dataset,
    basis: &FeatureBasis,
    blurred_set: &BlurredSet,
    params: &ChannelParams,
    samples: usize,
    seed: u64,
) -> Result<ComponentMatrix> {
    let channel = GaussianChannel::new(*params)?;
    check_eigenvalues(basis, ETA_FLOOR)?;
    let rows: Vec<Vec<f64>> = (0..points.len())
        .into_par_iter()
        .map(|p| {
            let mut rng = rng::stream(seed, p as u64);
            project_mc_with(
                &channel,
                blurred_set,
                basis,
                points.point(p),
                samples,
                &mut rng,
                ETA_FLOOR,
            )
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(points.len(), basis.k(), |r, c| rows[r][c]);
    Ok(ComponentMatrix::new(values, ProjectionMethod::Proj0).with_labels(points.labels()))
}
