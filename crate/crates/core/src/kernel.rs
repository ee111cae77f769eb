//! Monte Carlo estimate of the relevance kernel.
//!
//! Row `i` of the raw estimate is the average responsibility vector of `S`
//! channel outputs drawn from `p(·|x_i)`:
//!
//! ```text
//! K'_ij = (1/S) Σ_s p(f_s|x_j) / Σ_k p(f_s|x_k),   f_s ~ p(·|x_i)
//! ```
//!
//! Rows are exactly stochastic at any `S`. The exact kernel is symmetric, so
//! `|K'_ij - K'_ji|` measures Monte Carlo error; the final kernel is the
//! symmetric part, and detracing subtracts `1/n` to move the normalization
//! direction (all-ones, eigenvalue 1) to eigenvalue 0.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{Channel, ChannelParams, GaussianChannel};
use crate::dataset::Dataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelStage {
    Raw,
    Symmetrized,
    Detraced,
}

impl KernelStage {
    pub fn name(self) -> &'static str {
        match self {
            KernelStage::Raw => "raw",
            KernelStage::Symmetrized => "symmetrized",
            KernelStage::Detraced => "detraced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(KernelStage::Raw),
            "symmetrized" => Some(KernelStage::Symmetrized),
            "detraced" => Some(KernelStage::Detraced),
            _ => None,
        }
    }
}

impl fmt::Display for KernelStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KernelMeta {
    pub seed: u64,
    pub samples_per_row: usize,
    pub channel: Option<ChannelParams>,
    /// Filled in by [`symmetrize`].
    pub asymmetry: Option<f64>,
    /// Entries clamped into [0,1] after symmetrization.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub stage: KernelStage,
    pub meta: KernelMeta,
}

impl KernelMatrix {
    pub fn new(entries: DMatrix<f64>, stage: KernelStage, meta: KernelMeta) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(KernelMatrix { entries, stage, meta })
    }

    pub fn raw(entries: DMatrix<f64>) -> Result<Self> {
        KernelMatrix::new(entries, KernelStage::Raw, KernelMeta::default())
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    fn expect_stage(&self, stage: KernelStage) -> Result<()> {
        if self.stage != stage {
            return Err(Error::WrongStage {
                expected: stage.name(),
                found: self.stage.name(),
            });
        }
        Ok(())
    }
}

/// Raw kernel rows for an arbitrary channel, `samples_per_row` draws per row.
///
/// Row `i` uses stream `(seed, i)` and writes only its own row, so the
/// result is bitwise independent of the rayon pool size.
pub fn estimate_kernel_with<C: Channel>(
    channel: &C,
    refs: &C::Reference,
    samples_per_row: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let n = channel.reference_len(refs);
    if samples_per_row == 0 {
        return Err(Error::InsufficientSamples { total: 0, points: n });
    }
    // Bounded batches keep the n × batch posterior matrix small.
    let batch = samples_per_row.min((1 << 22) / n.max(1)).max(1);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let mut acc = vec![0.0; n];
            let mut remaining = samples_per_row;
            while remaining > 0 {
                let take = remaining.min(batch);
                let outputs = channel.sample_reference(refs, i, take, &mut rng);
                let post = channel.posteriors(refs, &outputs)?;
                for col in post.column_iter() {
                    for (a, w) in acc.iter_mut().zip(col.iter()) {
                        *a += w;
                    }
                }
                remaining -= take;
            }
            let inv = 1.0 / samples_per_row as f64;
            acc.iter_mut().for_each(|a| *a *= inv);
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Raw Monte Carlo kernel of the blur-plus-noise channel over `data`.
///
/// Each row gets `⌊total_samples / n⌋` samples; the remainder is dropped.
pub fn estimate_kernel(
    data: &Dataset,
    params: &ChannelParams,
    total_samples: usize,
    seed: u64,
) -> Result<KernelMatrix> {
    let n = data.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if total_samples < n {
        return Err(Error::InsufficientSamples {
            total: total_samples,
            points: n,
        });
    }
    let channel = GaussianChannel::new(*params)?;
    let refs = channel.prepare(data)?;
    let per_row = total_samples / n;
    log::info!(
        "kernel: n={n}, {per_row} samples per row, sigma={} h={} ({}) -> per-pixel noise std {:.4}",
        params.sigma,
        params.h,
        params.noise.name(),
        params.noise_std()
    );
    let entries = estimate_kernel_with(&channel, &refs, per_row, seed)?;
    KernelMatrix::new(
        entries,
        KernelStage::Raw,
        KernelMeta {
            seed,
            samples_per_row: per_row,
            channel: Some(*params),
            asymmetry: None,
            clamped: 0,
        },
    )
}

/// Mean relative asymmetry `|K'_ij - K'_ji| / ((K'_ij + K'_ji)/2)` over pairs
/// `i < j` whose mean exceeds `1e-6 / n`. Returns 0 when no pair qualifies.
pub fn asymmetry(raw: &KernelMatrix) -> Result<f64> {
    raw.expect_stage(KernelStage::Raw)?;
    let n = raw.n();
    let floor = 1e-6 / n.max(1) as f64;
    let k = &raw.entries;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let mean = 0.5 * (k[(i, j)] + k[(j, i)]);
            if mean > floor {
                total += (k[(i, j)] - k[(j, i)]).abs() / mean;
                pairs += 1;
            }
        }
    }
    Ok(if pairs == 0 { 0.0 } else { total / pairs as f64 })
}

/// `½(K' + K'ᵀ)`, clamped into [0,1]; records the asymmetry and clamp count.
pub fn symmetrize(raw: &KernelMatrix) -> Result<KernelMatrix> {
    let asym = asymmetry(raw)?;
    let n = raw.n();
    let k = &raw.entries;
    let mut out = DMatrix::zeros(n, n);
    let mut clamped = 0;
    for i in 0..n {
        for j in i..n {
            let mut v = 0.5 * (k[(i, j)] + k[(j, i)]);
            if !(0.0..=1.0).contains(&v) {
                v = v.clamp(0.0, 1.0);
                clamped += if i == j { 1 } else { 2 };
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    if clamped > 0 {
        log::warn!("symmetrize: clamped {clamped} entries into [0,1]");
    }
    let mut meta = raw.meta.clone();
    meta.asymmetry = Some(asym);
    meta.clamped = clamped;
    KernelMatrix::new(out, KernelStage::Symmetrized, meta)
}

/// `K - 1/n` elementwise.
pub fn detrace(sym: &KernelMatrix) -> Result<KernelMatrix> {
    sym.expect_stage(KernelStage::Symmetrized)?;
    let shift = 1.0 / sym.n() as f64;
    KernelMatrix::new(sym.entries.map(|v| v - shift), KernelStage::Detraced, sym.meta.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn tiny_params() -> ChannelParams {
        ChannelParams::new(0.5, 0.8, 2, 3).unwrap()
    }

    #[test]
    fn single_point_kernel_is_one() {
        let ds = Dataset::from_rows(&[vec![0.2; 6]], None).unwrap();
        let k = estimate_kernel(&ds, &tiny_params(), 17, 5).unwrap();
        assert_eq!(k.entries, dmatrix![1.0]);
        assert_eq!(k.meta.samples_per_row, 17);
    }

    #[test]
    fn identical_points_split_evenly() {
        let ds = Dataset::from_rows(&[vec![0.4; 6], vec![0.4; 6]], None).unwrap();
        let k = estimate_kernel(&ds, &tiny_params(), 200, 1).unwrap();
        for v in k.entries.iter() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn too_few_samples() {
        let ds = Dataset::from_rows(&[vec![0.0; 6], vec![1.0; 6]], None).unwrap();
        assert!(matches!(
            estimate_kernel(&ds, &tiny_params(), 1, 0),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn rows_are_stochastic_at_small_s() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..6).map(|p| ((i * 7 + p * 3) % 5) as f64 / 4.0).collect())
            .collect();
        let ds = Dataset::from_rows(&rows, None).unwrap();
        let k = estimate_kernel(&ds, &tiny_params(), 10, 3).unwrap();
        for r in k.entries.row_iter() {
            assert_abs_diff_eq!(r.sum(), 1.0, epsilon = 1e-12);
            assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn asymmetry_examples() {
        let sym = KernelMatrix::raw(dmatrix![0.5, 0.5; 0.5, 0.5]).unwrap();
        assert_eq!(asymmetry(&sym).unwrap(), 0.0);
        let k = KernelMatrix::raw(dmatrix![0.5, 0.4; 0.6, 0.5]).unwrap();
        assert_abs_diff_eq!(asymmetry(&k).unwrap(), 0.4, epsilon = 1e-15);
        let one = KernelMatrix::raw(dmatrix![1.0]).unwrap();
        assert_eq!(asymmetry(&one).unwrap(), 0.0);
    }

    #[test]
    fn symmetrize_examples() {
        let k = KernelMatrix::raw(dmatrix![0.5, 0.4; 0.6, 0.5]).unwrap();
        let s = symmetrize(&k).unwrap();
        assert_eq!(s.entries, dmatrix![0.5, 0.5; 0.5, 0.5]);
        assert_eq!(s.stage, KernelStage::Symmetrized);
        assert_abs_diff_eq!(s.meta.asymmetry.unwrap(), 0.4, epsilon = 1e-15);

        let already = dmatrix![0.7, 0.3; 0.3, 0.7];
        let s = symmetrize(&KernelMatrix::raw(already.clone()).unwrap()).unwrap();
        assert_eq!(s.entries, already);
        assert_eq!(s.meta.clamped, 0);
    }

    #[test]
    fn symmetrize_clamps_and_counts() {
        let k = KernelMatrix::raw(dmatrix![1.0 + 1e-15, -1e-16; 0.0, 1.0]).unwrap();
        let s = symmetrize(&k).unwrap();
        assert_eq!(s.meta.clamped, 3);
        assert_eq!(s.entries[(0, 0)], 1.0);
        assert_eq!(s.entries[(0, 1)], 0.0);
    }

    #[test]
    fn detrace_examples() {
        let s = symmetrize(&KernelMatrix::raw(dmatrix![0.5, 0.5; 0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(detrace(&s).unwrap().entries, dmatrix![0.0, 0.0; 0.0, 0.0]);
        let s = symmetrize(&KernelMatrix::raw(dmatrix![1.0]).unwrap()).unwrap();
        assert_eq!(detrace(&s).unwrap().entries, dmatrix![0.0]);
    }

    #[test]
    fn stage_checks() {
        let raw = KernelMatrix::raw(dmatrix![1.0]).unwrap();
        assert!(matches!(detrace(&raw), Err(Error::WrongStage { .. })));
        let s = symmetrize(&raw).unwrap();
        assert!(matches!(symmetrize(&s), Err(Error::WrongStage { .. })));
    }
}
