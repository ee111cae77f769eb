//! Load the MNIST training files, count the classes and draw a seeded
//! per-class subset.
//!
//! cargo run --example parse_mnist -- [data/mnist]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::{read_idx_pair, select_subset};

fn shade(v: f64) -> char {
    [' ', '.', ':', '+', '#'][((v * 4.999) as usize).min(4)]
}

fn main() -> relevance_pca::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into()));
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    println!("{} images of {}x{}", images.count, images.rows, images.cols);

    let mut counts = [0usize; 10];
    for &l in &labels.labels {
        counts[l as usize] += 1;
    }
    for (d, c) in counts.iter().enumerate() {
        println!("digit {d}: {c}");
    }

    println!("\nfirst image (label {}):", labels.labels[0]);
    for row in images.image(0).chunks(images.cols) {
        println!("{}", row.iter().map(|&v| shade(v)).collect::<String>());
    }

    let digits: BTreeSet<u8> = [5, 6].into_iter().collect();
    let subset = select_subset(&images, &labels, &digits, 8, 0)?;
    println!(
        "\nsubset: {} points of dimension {}, labels {:?}",
        subset.len(),
        subset.dim(),
        subset.labels().unwrap()
    );
    Ok(())
}
