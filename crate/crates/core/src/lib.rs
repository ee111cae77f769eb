//! Channel-adapted kernel PCA.
//!
//! A noisy coarse-graining channel (Gaussian blur followed by additive
//! Gaussian pixel noise) is combined with the empirical distribution of a
//! dataset to produce a data-dependent kernel
//!
//! ```text
//! K_ij = ∫ dx p(x|x_i) p(x|x_j) / Σ_k p(x|x_k)
//! ```
//!
//! whose leading eigenvectors are the features that best survive the
//! channel. The crate estimates that kernel by Monte Carlo, extracts the
//! spectrum, projects new points onto the features and evaluates them with a
//! distance-weighted nearest-neighbour classifier against an RBF kernel-PCA
//! baseline.
//!
//! The pipeline, module by module:
//!
//! * [`dataset`]: IDX parsing and seeded per-class subsets.
//! * [`channel`]: blur, noise sampling, log densities and responsibilities.
//! * [`kernel`]: Monte Carlo kernel estimate, symmetrization, detracing.
//! * [`spectral`]: dense symmetric eigendecomposition and feature bases.
//! * [`projection`]: closed-form and Monte Carlo out-of-sample projections.
//! * [`baseline`]: RBF kernel PCA.
//! * [`classifier`]: weighted kNN and error rates.
//! * [`experiment`]: configuration, persistence and end-to-end runs.

pub mod baseline;
pub mod channel;
pub mod classifier;
pub mod dataset;
mod error;
pub mod experiment;
pub mod kernel;
pub mod projection;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};

pub use baseline::{kpca_fit, kpca_project, rbf_kernel, RbfBasis, RbfParams, RbfScaling};
pub use channel::{
    blur, log_density_sq, responsibilities, sample_output, BlurredSet, Channel, ChannelParams, GaussianChannel,
    NoiseModel,
};
pub use classifier::{error_rate, knn_classify, VoteWeighting};
pub use dataset::{parse_idx_images, parse_idx_labels, read_idx_pair, select_subset, Dataset, ImageSet, LabelSet};
pub use kernel::{asymmetry, detrace, estimate_kernel, symmetrize, KernelMatrix, KernelStage};
pub use projection::{project_fast, project_mc, ComponentMatrix, ProjectionMethod};
pub use spectral::{eigendecompose, top_features, FeatureBasis, Spectrum};
