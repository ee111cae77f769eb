//! Gaussian-kernel PCA on blurred images, with out-of-sample projection.
//!
//! cargo run --example rbf_baseline -- [data/mnist] [delta]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::baseline::RbfModel;
use relevance_pca::{read_idx_pair, select_subset, ChannelParams, RbfParams};

fn main() -> relevance_pca::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist".into()));
    let delta: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(40.0);
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let digits: BTreeSet<u8> = [5, 6].into_iter().collect();
    let train = select_subset(&images, &labels, &digits, 100, 0)?;
    let (test_images, test_labels) =
        read_idx_pair(dir.join("t10k-images-idx3-ubyte"), dir.join("t10k-labels-idx1-ubyte"))?;
    let fresh = select_subset(&test_images, &test_labels, &digits, 3, 0)?;

    let model = RbfModel::fit(&train, RbfParams::new(delta)?, ChannelParams::mnist(1.0, 1.317)?, 4)?;
    println!("delta = {delta}, eigenvalues {:?}", model.basis.eigenvalues);

    let train_c = model.training_components(train.labels());
    let again = model.project(&train)?;
    let gap = (&train_c.values - &again.values).abs().max();
    println!("training components reproduced out of sample to {gap:.1e}");

    let comps = model.project(&fresh)?;
    for p in 0..fresh.len() {
        let row: Vec<String> = (0..4).map(|j| format!("{:+.4}", comps.values[(p, j)])).collect();
        println!("digit {}: {}", fresh.labels().unwrap()[p], row.join(" "));
    }
    Ok(())
}
