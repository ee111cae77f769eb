//! Relevances and relevant features of an estimated kernel.
//!
//! cargo run --example relevant_features -- [data/mnist]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::{
    detrace, eigendecompose, estimate_kernel, read_idx_pair, select_subset, symmetrize, top_features, ChannelParams,
};

fn main() -> relevance_pca::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into()));
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let digits: BTreeSet<u8> = [5, 6].into_iter().collect();
    let data = select_subset(&images, &labels, &digits, 64, 0)?;
    let params = ChannelParams::mnist(1.0, 1.317)?;
    let kernel = detrace(&symmetrize(&estimate_kernel(&data, &params, 12_800, 42)?)?)?;

    let spectrum = eigendecompose(&kernel)?;
    let basis = top_features(&spectrum, 8)?;
    println!("top relevances:");
    for (j, eta) in basis.eigenvalues.iter().enumerate() {
        println!("  eta_{} = {eta:.4}", j + 1);
    }
    let total: f64 = spectrum.eigenvalues.iter().sum();
    println!("sum of all relevances (trace) = {total:.3}");

    // per-class average of each feature's coefficients
    let lab = data.labels().unwrap();
    for j in 0..3 {
        let col = basis.coefficients.column(j);
        let mean = |d: u8| {
            let v: Vec<f64> = (0..data.len()).filter(|&i| lab[i] == d).map(|i| col[i]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        println!(
            "feature {}: mean coefficient on 5s {:+.4}, on 6s {:+.4}",
            j + 1,
            mean(5),
            mean(6)
        );
    }

    println!("Fisher Gram matrix of the first three features:");
    for a in 0..3 {
        let row: Vec<String> = (0..3).map(|b| format!("{:+.3}", basis.fisher_inner(a, b))).collect();
        println!("  {}", row.join(" "));
    }
    if !basis.degenerate.is_empty() {
        println!("degenerate pairs: {:?}", basis.degenerate);
    }
    Ok(())
}
