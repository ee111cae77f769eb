//! Error rate against the number of relevant features, using fast
//! projections and the distance-weighted nearest-neighbour vote.
//!
//! cargo run --example knn_classify -- [data/mnist]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::classifier::{confusion_matrix, knn_classify_with, VoteWeighting};
use relevance_pca::dataset::restrict_to_digits;
use relevance_pca::projection::project_batch_fast;
use relevance_pca::{
    detrace, eigendecompose, error_rate, estimate_kernel, read_idx_pair, select_subset, symmetrize, top_features,
    BlurredSet, ChannelParams,
};

fn main() -> relevance_pca::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into()));
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let (test_images, test_labels) =
        read_idx_pair(dir.join("t10k-images-idx3-ubyte"), dir.join("t10k-labels-idx1-ubyte"))?;
    let digits: BTreeSet<u8> = [5, 6].into_iter().collect();
    let train = select_subset(&images, &labels, &digits, 128, 0)?;
    let test = restrict_to_digits(&test_images, &test_labels, &digits)?;

    let params = ChannelParams::mnist(1.0, 1.317)?;
    let kernel = detrace(&symmetrize(&estimate_kernel(&train, &params, 10_000, 42)?)?)?;
    let basis = top_features(&eigendecompose(&kernel)?, 8)?;
    let set = BlurredSet::new(&train, &params)?;
    let tr = project_batch_fast(&train, &basis, &set, &params)?;
    let te = project_batch_fast(&test, &basis, &set, &params)?;

    let truth = test.labels().unwrap();
    println!("{} train, {} test points", train.len(), test.len());
    for k in 1..=8 {
        let pred = knn_classify_with(
            &tr.values,
            train.labels().unwrap(),
            &te.values,
            k,
            3,
            VoteWeighting::InverseDistance,
        )?;
        println!("k = {k}: error {:.2}%", error_rate(&pred, truth)?);
    }

    let pred = knn_classify_with(
        &tr.values,
        train.labels().unwrap(),
        &te.values,
        4,
        3,
        VoteWeighting::InverseDistance,
    )?;
    let cm = confusion_matrix(&pred, truth)?;
    println!("confusion at k = 4 (rows true, columns predicted):");
    for t in [5, 6] {
        println!("  {t}: {:5} {:5}", cm[t][5], cm[t][6]);
    }
    Ok(())
}
