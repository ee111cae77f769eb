//! Push one image through the blur-plus-noise channel and look at the
//! posterior over a handful of reference images.
//!
//! cargo run --example blur_channel -- [data/mnist]

use std::collections::BTreeSet;
use std::path::PathBuf;

use relevance_pca::channel::{blur, responsibilities, sample_output, NoiseModel};
use relevance_pca::rng::stream;
use relevance_pca::{read_idx_pair, select_subset, BlurredSet, ChannelParams};

fn shade(v: f64) -> char {
    [' ', '.', ':', '+', '#'][((v.clamp(0.0, 1.0) * 4.999) as usize).min(4)]
}

fn main() -> relevance_pca::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into()));
    let (images, labels) = read_idx_pair(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let digits: BTreeSet<u8> = [3, 5, 6].into_iter().collect();
    let refs = select_subset(&images, &labels, &digits, 4, 1)?;

    let params = ChannelParams::mnist(1.0, 1.317)?;
    let alt = params.with_noise(NoiseModel::Variance);
    println!(
        "pixel noise std: {:.3} (exponent convention), {:.3} (variance convention)",
        params.noise_std(),
        alt.noise_std()
    );

    let x = refs.point(0);
    let a = blur(x, &params)?;
    let mut rng = stream(7, 0);
    let f = sample_output(x, &params, &mut rng)?;
    println!("\noriginal | blurred | one channel output");
    for r in 0..28 {
        let line = |img: &[f64]| img[r * 28..(r + 1) * 28].iter().map(|&v| shade(v)).collect::<String>();
        println!("{} | {} | {}", line(x), line(&a), line(&f));
    }

    let set = BlurredSet::new(&refs, &params)?;
    let w = responsibilities(&f, &set, params.h)?;
    println!("\nposterior over the {} reference images:", refs.len());
    for (i, wi) in w.iter().enumerate() {
        println!("  #{i:2} digit {}  {wi:.4}", refs.labels().unwrap()[i]);
    }
    Ok(())
}
