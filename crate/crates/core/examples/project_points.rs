//! Project held-out images onto relevant features with the fast formula
//! and with the Monte Carlo one.
//!
//! cargo run --example project_points -- [data/mnist]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::projection::{project_batch_fast, project_batch_mc};
use relevance_pca::rng::stream;
use relevance_pca::{
    detrace, eigendecompose, estimate_kernel, project_fast, project_mc, read_idx_pair, select_subset, symmetrize,
    top_features, BlurredSet, ChannelParams,
};

fn main() -> relevance_pca::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into()));
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let (test_images, test_labels) =
        read_idx_pair(dir.join("t10k-images-idx3-ubyte"), dir.join("t10k-labels-idx1-ubyte"))?;
    let digits: BTreeSet<u8> = [5, 6].into_iter().collect();
    let train = select_subset(&images, &labels, &digits, 64, 0)?;
    let test = select_subset(&test_images, &test_labels, &digits, 3, 0)?;

    let params = ChannelParams::mnist(1.0, 1.317)?;
    let kernel = detrace(&symmetrize(&estimate_kernel(&train, &params, 12_800, 42)?)?)?;
    let basis = top_features(&eigendecompose(&kernel)?, 3)?;
    let set = BlurredSet::new(&train, &params)?;

    for p in 0..test.len() {
        let z = test.point(p);
        let fast = project_fast(z, &basis, &set, &params)?;
        let mut rng = stream(9, p as u64);
        let mc = project_mc(z, &basis, &set, &params, 400, &mut rng)?;
        println!(
            "digit {}  proj {:+.3} {:+.3} {:+.3}  proj0 {:+.3} {:+.3} {:+.3}",
            test.labels().unwrap()[p],
            fast[0],
            fast[1],
            fast[2],
            mc[0],
            mc[1],
            mc[2]
        );
    }

    let all_fast = project_batch_fast(&test, &basis, &set, &params)?;
    let all_mc = project_batch_mc(&test, &basis, &set, &params, 400, 9)?;
    println!("\n{}", all_fast.to_csv());
    println!("{}", all_mc.to_csv());
    Ok(())
}
