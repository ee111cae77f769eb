//! Monte Carlo estimate of the relevance kernel on a small MNIST subset,
//! then symmetrize and detrace it.
//!
//! cargo run --example estimate_kernel -- [data/mnist] [total_samples]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::{detrace, estimate_kernel, read_idx_pair, select_subset, symmetrize, ChannelParams};

fn main() -> relevance_pca::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist".into()));
    let total: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12_800);
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let digits: BTreeSet<u8> = [5, 6].into_iter().collect();
    let data = select_subset(&images, &labels, &digits, 64, 0)?;
    let params = ChannelParams::mnist(1.0, 1.317)?;

    let raw = estimate_kernel(&data, &params, total, 42)?;
    let n = raw.n();
    let worst_row = raw
        .entries
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    println!("n = {n}, {} samples per row", raw.meta.samples_per_row);
    println!("max |row sum - 1| = {worst_row:.2e}");

    let sym = symmetrize(&raw)?;
    println!(
        "asymmetry = {:.3}, clamped = {}",
        sym.meta.asymmetry.unwrap(),
        sym.meta.clamped
    );
    let diag = sym.entries.diagonal().mean();
    println!(
        "mean diagonal {diag:.3}, mean off-diagonal {:.5}",
        (n as f64 - n as f64 * diag) / (n * (n - 1)) as f64
    );

    let same: f64 = (0..64)
        .flat_map(|i| (0..64).map(move |j| (i, j)))
        .map(|(i, j)| sym.entries[(i, j)])
        .sum();
    let cross: f64 = (0..64)
        .flat_map(|i| (64..128).map(move |j| (i, j)))
        .map(|(i, j)| sym.entries[(i, j)])
        .sum();
    println!("kernel mass within class 5: {same:.2}, between 5 and 6: {cross:.2}");

    let det = detrace(&sym)?;
    println!(
        "max |detraced row sum| {:.2e}",
        det.entries.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    );
    Ok(())
}
