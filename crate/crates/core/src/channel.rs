//! The coarse-graining channel: Gaussian blur followed by Gaussian pixel noise.
//!
//! Transition densities are `p(f|g) ∝ exp(-‖f - A g‖² / h²)` where `A` is a
//! separable Gaussian blur of standard deviation `sigma` pixels. That density
//! corresponds to i.i.d. pixel noise of standard deviation `h / √2`.
//!
//! Everything density-related stays in the log domain. Posterior weights
//! ("responsibilities") over the reference points are a max-shifted softmax.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::rng::StreamRng;
use crate::{Error, Result};

/// How the noise scale `h` maps to per-pixel noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Density `exp(-‖f - Ag‖² / h²)`: standard deviation `h/√2`.
    #[default]
    Exponent,
    /// Per-pixel variance `h`: density `exp(-‖f - Ag‖² / 2h)`.
    Variance,
}

impl NoiseModel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::Exponent => "exponent",
            NoiseModel::Variance => "variance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "exponent" => Some(NoiseModel::Exponent),
            "variance" => Some(NoiseModel::Variance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Blur standard deviation in pixels.
    pub sigma: f64,
    /// Noise scale in grayscale units.
    pub h: f64,
    pub rows: usize,
    pub cols: usize,
    pub noise: NoiseModel,
}

impl ChannelParams {
    pub fn new(sigma: f64, h: f64, rows: usize, cols: usize) -> Result<Self> {
        let p = ChannelParams {
            sigma,
            h,
            rows,
            cols,
            noise: NoiseModel::Exponent,
        };
        p.validate()?;
        Ok(p)
    }

    /// MNIST geometry with the given blur and noise.
    pub fn mnist(sigma: f64, h: f64) -> Result<Self> {
        ChannelParams::new(sigma, h, 28, 28)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!("h must be > 0, got {}", self.h)));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    /// Per-pixel noise standard deviation implied by the transition density.
    pub fn noise_std(&self) -> f64 {
        match self.noise {
            NoiseModel::Exponent => self.h / std::f64::consts::SQRT_2,
            NoiseModel::Variance => self.h.sqrt(),
        }
    }

    /// `h_eff²` such that the transition density is `exp(-‖f - Ag‖² / h_eff²)`.
    pub fn exponent_scale(&self) -> f64 {
        match self.noise {
            NoiseModel::Exponent => self.h * self.h,
            NoiseModel::Variance => 2.0 * self.h,
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.pixels() {
            return Err(Error::DimensionMismatch {
                expected: self.pixels(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian weights for offsets `-r..=r`, `r = ceil(3σ)`.
pub fn gaussian_stencil(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn convolve_axis(src: &[f64], dst: &mut [f64], rows: usize, cols: usize, stencil: &[f64], horizontal: bool) {
    let r = (stencil.len() / 2) as isize;
    for y in 0..rows {
        for x in 0..cols {
            let mut acc = 0.0;
            for (k, &w) in stencil.iter().enumerate() {
                let d = k as isize - r;
                let (yy, xx) = if horizontal {
                    (y as isize, x as isize + d)
                } else {
                    (y as isize + d, x as isize)
                };
                if yy >= 0 && xx >= 0 && (yy as usize) < rows && (xx as usize) < cols {
                    acc += w * src[yy as usize * cols + xx as usize];
                }
            }
            dst[y * cols + x] = acc;
        }
    }
}

/// Separable Gaussian blur with zero padding. `sigma = 0` is the identity.
pub fn blur(image: &[f64], params: &ChannelParams) -> Result<Vec<f64>> {
    params.check_len(image.len())?;
    if params.sigma == 0.0 {
        return Ok(image.to_vec());
    }
    let stencil = gaussian_stencil(params.sigma);
    let mut tmp = vec![0.0; image.len()];
    let mut out = vec![0.0; image.len()];
    convolve_axis(image, &mut tmp, params.rows, params.cols, &stencil, true);
    convolve_axis(&tmp, &mut out, params.rows, params.cols, &stencil, false);
    Ok(out)
}

/// One channel output for a raw image: `A·image + ε`, `ε ~ N(0, h²/2)` per pixel.
pub fn sample_output(image: &[f64], params: &ChannelParams, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let mut out = blur(image, params)?;
    add_noise(&mut out, params.noise_std(), rng);
    Ok(out)
}

fn add_noise(v: &mut [f64], std: f64, rng: &mut StreamRng) {
    for x in v.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *x += std * e;
    }
}

/// `-‖f - blurred‖² / h²`: the log transition density up to a constant shared
/// by all reference points.
pub fn log_density_sq(f: &[f64], blurred: &[f64], h: f64) -> Result<f64> {
    if f.len() != blurred.len() {
        return Err(Error::DimensionMismatch {
            expected: blurred.len(),
            found: f.len(),
        });
    }
    let d2: f64 = f.iter().zip(blurred).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(-d2 / (h * h))
}

/// Max-shifted softmax in place. Empty input is left alone.
pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return;
    }
    let mut total = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in logits.iter_mut() {
        *v /= total;
    }
}

/// Blurred reference points `A x_i` (one per column) with their squared norms.
#[derive(Debug, Clone)]
pub struct BlurredSet {
    points: DMatrix<f64>,
    norms: Vec<f64>,
}

impl BlurredSet {
    pub fn new(data: &Dataset, params: &ChannelParams) -> Result<Self> {
        params.check_len(data.dim())?;
        let columns: Vec<Vec<f64>> = (0..data.len())
            .into_par_iter()
            .map(|i| blur(data.point(i), params))
            .collect::<Result<_>>()?;
        let m = data.dim();
        let flat: Vec<f64> = columns.into_iter().flatten().collect();
        Ok(BlurredSet::from_matrix(DMatrix::from_vec(m, data.len(), flat)))
    }

    /// Wrap already-blurred points (one per column).
    pub fn from_matrix(points: DMatrix<f64>) -> Self {
        let norms = points.column_iter().map(|c| c.norm_squared()).collect();
        BlurredSet { points, norms }
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

    pub fn point(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.points.as_slice()[i * m..(i + 1) * m]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Log densities `-‖f - Ax‖² / h²` of every output (columns of
    /// `outputs`) against every reference point, via `‖f‖² - 2 f·Ax + ‖Ax‖²`.
    /// Result is n × outputs.
    pub fn log_densities(&self, outputs: &DMatrix<f64>, h: f64) -> Result<DMatrix<f64>> {
        self.scaled_log_densities(outputs, h * h)
    }

    /// As [`BlurredSet::log_densities`] with `h²` replaced by `scale`.
    pub fn scaled_log_densities(&self, outputs: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
        if outputs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: outputs.nrows(),
            });
        }
        let mut g = self.points.tr_mul(outputs);
        let inv = 1.0 / scale;
        for (s, mut col) in g.column_iter_mut().enumerate() {
            let fnorm = outputs.column(s).norm_squared();
            for (k, v) in col.iter_mut().enumerate() {
                *v = -(fnorm - 2.0 * *v + self.norms[k]) * inv;
            }
        }
        Ok(g)
    }
}

/// Posterior weights `p(f|x_j) / Σ_k p(f|x_k)` over the blurred references.
pub fn responsibilities(f: &[f64], blurred_set: &BlurredSet, h: f64) -> Result<Vec<f64>> {
    let col = DMatrix::from_column_slice(f.len(), 1, f);
    let mut w = blurred_set.log_densities(&col, h)?.as_slice().to_vec();
    softmax_in_place(&mut w);
    Ok(w)
}

/// A stochastic map `p(y|x)` together with a finite set of reference inputs
/// `x_1..x_n` (the training points).
///
/// The kernel estimator and the projections only need three things: draws
/// from `p(·|x_i)` for a reference point, draws from `p(·|z)` for an arbitrary
/// input, and log likelihoods of outputs against every reference point.
pub trait Channel: Sync {
    type Input: ?Sized + Sync;
    type Output: Send + Sync;
    /// Per-dataset precomputation.
    type Reference: Sync;

    fn reference_len(&self, refs: &Self::Reference) -> usize;

    fn sample_reference(
        &self,
        refs: &Self::Reference,
        index: usize,
        count: usize,
        rng: &mut StreamRng,
    ) -> Vec<Self::Output>;

    fn sample_input(&self, input: &Self::Input, count: usize, rng: &mut StreamRng) -> Result<Vec<Self::Output>>;

    /// `log p(y_s | x_k)` up to a constant per output. Shape n × outputs.
    fn log_likelihoods(&self, refs: &Self::Reference, outputs: &[Self::Output]) -> Result<DMatrix<f64>>;

    /// Responsibilities of each output, one probability vector per column.
    fn posteriors(&self, refs: &Self::Reference, outputs: &[Self::Output]) -> Result<DMatrix<f64>> {
        let mut l = self.log_likelihoods(refs, outputs)?;
        for mut col in l.column_iter_mut() {
            softmax_in_place(col.as_mut_slice());
        }
        Ok(l)
    }
}

/// The blur-plus-noise channel over images.
#[derive(Debug, Clone, Copy)]
pub struct GaussianChannel {
    params: ChannelParams,
}

impl GaussianChannel {
    pub fn new(params: ChannelParams) -> Result<Self> {
        params.validate()?;
        log::debug!(
            "channel sigma={} h={} ({}) -> per-pixel noise std {:.4}",
            params.sigma,
            params.h,
            params.noise.name(),
            params.noise_std()
        );
        Ok(GaussianChannel { params })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn prepare(&self, data: &Dataset) -> Result<BlurredSet> {
        BlurredSet::new(data, &self.params)
    }
}

impl Channel for GaussianChannel {
    type Input = [f64];
    type Output = Vec<f64>;
    type Reference = BlurredSet;

    fn reference_len(&self, refs: &BlurredSet) -> usize {
        refs.len()
    }

    fn sample_reference(&self, refs: &BlurredSet, index: usize, count: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
        let base = refs.point(index);
        let std = self.params.noise_std();
        (0..count)
            .map(|_| {
                let mut f = base.to_vec();
                add_noise(&mut f, std, rng);
                f
            })
            .collect()
    }

    fn sample_input(&self, input: &[f64], count: usize, rng: &mut StreamRng) -> Result<Vec<Vec<f64>>> {
        let base = blur(input, &self.params)?;
        let std = self.params.noise_std();
        Ok((0..count)
            .map(|_| {
                let mut f = base.clone();
                add_noise(&mut f, std, rng);
                f
            })
            .collect())
    }

    fn log_likelihoods(&self, refs: &BlurredSet, outputs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let m = refs.dim();
        let mut flat = Vec::with_capacity(m * outputs.len());
        for f in outputs {
            if f.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: f.len(),
                });
            }
            flat.extend_from_slice(f);
        }
        refs.scaled_log_densities(&DMatrix::from_vec(m, outputs.len(), flat), self.params.exponent_scale())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    fn params(sigma: f64, h: f64, rows: usize, cols: usize) -> ChannelParams {
        ChannelParams::new(sigma, h, rows, cols).unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        assert_eq!(blur(&img, &params(0.0, 1.0, 3, 4)).unwrap(), img);
    }

    #[test]
    fn constant_image_interior_preserved() {
        let p = params(1.0, 1.0, 12, 12);
        let out = blur(&vec![0.7; 144], &p).unwrap();
        // radius 3: pixels at distance >= 3 from every edge see no padding
        for y in 0..12 {
            for x in 0..12 {
                let v = out[y * 12 + x];
                if (3..9).contains(&y) && (3..9).contains(&x) {
                    assert_abs_diff_eq!(v, 0.7, epsilon = 1e-12);
                } else if y == 0 || x == 0 || y == 11 || x == 11 {
                    assert!(v < 0.7);
                }
            }
        }
    }

    #[test]
    fn stencil_radius_and_mass() {
        let s = gaussian_stencil(1.0);
        assert_eq!(s.len(), 7);
        assert_abs_diff_eq!(s.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(gaussian_stencil(0.4).len(), 5);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            blur(&[0.0; 5], &params(1.0, 1.0, 2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ChannelParams::new(-1.0, 1.0, 2, 2).is_err());
        assert!(ChannelParams::new(1.0, 0.0, 2, 2).is_err());
    }

    #[test]
    fn vanishing_noise_returns_blur() {
        let p = params(1.0, 1e-9, 5, 5);
        let img: Vec<f64> = (0..25).map(|i| (i % 7) as f64 / 7.0).collect();
        let out = sample_output(&img, &p, &mut stream(3, 0)).unwrap();
        for (a, b) in out.iter().zip(blur(&img, &p).unwrap()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn identical_streams_identical_samples() {
        let p = params(1.0, 1.3, 4, 4);
        let img = vec![0.5; 16];
        let a = sample_output(&img, &p, &mut stream(9, 2)).unwrap();
        let b = sample_output(&img, &p, &mut stream(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_models() {
        let p = params(1.0, 2.0, 2, 2);
        assert_abs_diff_eq!(p.noise_std(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(p.exponent_scale(), 4.0);
        let v = p.with_noise(NoiseModel::Variance);
        assert_abs_diff_eq!(v.noise_std(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(v.exponent_scale(), 4.0);
        let v = params(1.0, 1.317, 2, 2).with_noise(NoiseModel::Variance);
        assert_abs_diff_eq!(v.noise_std().powi(2), 1.317, epsilon = 1e-12);
    }

    #[test]
    fn log_density_arithmetic() {
        assert_eq!(log_density_sq(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(log_density_sq(&[2.0, 0.0], &[0.0, 0.0], 2.0).unwrap(), -1.0);
        assert!(log_density_sq(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn responsibilities_edge_cases() {
        let one = BlurredSet::from_matrix(DMatrix::from_column_slice(2, 1, &[0.3, 0.1]));
        assert_eq!(responsibilities(&[5.0, -2.0], &one, 0.1).unwrap(), vec![1.0]);

        let two = BlurredSet::from_matrix(DMatrix::from_column_slice(1, 2, &[-1.0, 1.0]));
        let w = responsibilities(&[0.0], &two, 0.7).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_point_softmax_closed_form() {
        // ‖f - Ax_1‖² = 0, ‖f - Ax_2‖² = D, h = 1
        for d_over_h2 in [50.0f64, 1e4] {
            let refs = BlurredSet::from_matrix(DMatrix::from_column_slice(1, 2, &[0.0, d_over_h2.sqrt()]));
            let w = responsibilities(&[0.0], &refs, 1.0).unwrap();
            let expected = 1.0 / (1.0 + (-d_over_h2).exp());
            assert!(w.iter().all(|v| v.is_finite()));
            assert_abs_diff_eq!(w[0], expected, epsilon = 1e-12);
            assert_abs_diff_eq!(w[0] + w[1], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn batch_log_density_matches_scalar() {
        let mut rng = stream(1, 1);
        let m = 30;
        let refs = DMatrix::from_fn(m, 6, |_, _| rng.random::<f64>());
        let outs = DMatrix::from_fn(m, 4, |_, _| rng.random::<f64>() * 2.0 - 0.5);
        let set = BlurredSet::from_matrix(refs.clone());
        let batch = set.log_densities(&outs, 1.3).unwrap();
        for s in 0..4 {
            for k in 0..6 {
                let f: Vec<f64> = outs.column(s).iter().copied().collect();
                let direct = log_density_sq(&f, set.point(k), 1.3).unwrap();
                assert_abs_diff_eq!(batch[(k, s)], direct, epsilon = 1e-10);
            }
        }
    }
}
