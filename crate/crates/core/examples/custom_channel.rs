//! The kernel, spectrum and projections work for any type implementing
//! `Channel`. Here: a symmetric random walk step on a ring of 12 sites,
//! small enough to compute the kernel exactly and compare.
//!
//! cargo run --example custom_channel

use nalgebra::DMatrix;
use rand::Rng;
use relevance_pca::channel::Channel;
use relevance_pca::kernel::{detrace, estimate_kernel_with, symmetrize, KernelMatrix};
use relevance_pca::projection::project_fast_with;
use relevance_pca::rng::StreamRng;
use relevance_pca::spectral::{eigendecompose, top_features};

const SITES: usize = 12;

/// Stay with probability `1 - 2q`, step left or right with `q` each.
struct RingWalk {
    q: f64,
}

impl RingWalk {
    fn p(&self, y: usize, x: usize) -> f64 {
        match (y + SITES - x) % SITES {
            0 => 1.0 - 2.0 * self.q,
            1 | 11 => self.q,
            _ => 0.0,
        }
    }
}

impl Channel for RingWalk {
    type Input = usize;
    type Output = usize;
    type Reference = Vec<usize>;

    fn reference_len(&self, refs: &Vec<usize>) -> usize {
        refs.len()
    }

    fn sample_reference(&self, refs: &Vec<usize>, index: usize, count: usize, rng: &mut StreamRng) -> Vec<usize> {
        self.sample_input(&refs[index], count, rng).unwrap()
    }

    fn sample_input(&self, x: &usize, count: usize, rng: &mut StreamRng) -> relevance_pca::Result<Vec<usize>> {
        Ok((0..count)
            .map(|_| {
                let u: f64 = rng.random();
                if u < self.q {
                    (x + 1) % SITES
                } else if u < 2.0 * self.q {
                    (x + SITES - 1) % SITES
                } else {
                    *x
                }
            })
            .collect())
    }

    fn log_likelihoods(&self, refs: &Vec<usize>, outputs: &[usize]) -> relevance_pca::Result<DMatrix<f64>> {
        Ok(DMatrix::from_fn(refs.len(), outputs.len(), |k, s| {
            self.p(outputs[s], refs[k]).ln()
        }))
    }
}

fn main() -> relevance_pca::Result<()> {
    let walk = RingWalk { q: 0.25 };
    let refs = vec![0, 1, 2, 6, 7];
    let mc = estimate_kernel_with(&walk, &refs, 50_000, 1)?;

    let mut exact = DMatrix::zeros(refs.len(), refs.len());
    for y in 0..SITES {
        let z: f64 = refs.iter().map(|&x| walk.p(y, x)).sum();
        if z == 0.0 {
            continue;
        }
        for (i, &a) in refs.iter().enumerate() {
            for (j, &b) in refs.iter().enumerate() {
                exact[(i, j)] += walk.p(y, a) * walk.p(y, b) / z;
            }
        }
    }
    println!("Monte Carlo kernel:{mc:.3}exact:{exact:.3}");
    println!("largest deviation {:.4}", (&mc - &exact).abs().max());

    let kernel = detrace(&symmetrize(&KernelMatrix::raw(exact)?)?)?;
    let basis = top_features(&eigendecompose(&kernel)?, 2)?;
    println!("relevances {:.4?}", basis.eigenvalues);
    // sites no reference point can reach have no posterior
    let outputs: Vec<usize> = (0..SITES)
        .filter(|&y| refs.iter().any(|&x| walk.p(y, x) > 0.0))
        .collect();
    let comps = project_fast_with(&walk, &refs, &basis, &outputs)?;
    for (row, y) in outputs.iter().enumerate() {
        println!("site {y:2}: {:+.3} {:+.3}", comps[(row, 0)], comps[(row, 1)]);
    }
    Ok(())
}
