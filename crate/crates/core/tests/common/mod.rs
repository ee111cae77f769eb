//! Shared test fixtures: an exactly enumerable discrete channel, a closed-form
//! 3×3 symmetric eigenvalue solver, and small synthetic IDX files.
#![allow(dead_code)]

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use relevance_pca::channel::Channel;
use relevance_pca::rng::StreamRng;
use relevance_pca::Result;

pub const SITES: usize = 16;

/// A channel on the sites `0..16` of a line: `p(y|x) ∝ exp(-(y-x)²/h²)`,
/// normalized explicitly over the sites.
#[derive(Debug, Clone)]
pub struct DiscreteChannel {
    pub h: f64,
    /// `table[x][y] = p(y|x)`
    pub table: Vec<Vec<f64>>,
}

impl DiscreteChannel {
    pub fn new(h: f64) -> Self {
        let table = (0..SITES)
            .map(|x| {
                let row: Vec<f64> = (0..SITES)
                    .map(|y| (-((y as f64 - x as f64).powi(2)) / (h * h)).exp())
                    .collect();
                let z: f64 = row.iter().sum();
                row.into_iter().map(|v| v / z).collect()
            })
            .collect();
        DiscreteChannel { h, table }
    }

    pub fn p(&self, y: usize, x: usize) -> f64 {
        self.table[x][y]
    }

    fn draw(&self, x: usize, rng: &mut StreamRng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for y in 0..SITES {
            acc += self.table[x][y];
            if u < acc {
                return y;
            }
        }
        SITES - 1
    }

    /// Exact kernel by summation over all sites.
    pub fn exact_kernel(&self, points: &[usize]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for y in 0..SITES {
            let denom: f64 = points.iter().map(|&x| self.p(y, x)).sum();
            for i in 0..n {
                for j in 0..n {
                    k[(i, j)] += self.p(y, points[i]) * self.p(y, points[j]) / denom;
                }
            }
        }
        k
    }

    /// Exact responsibilities of an output site.
    pub fn exact_weights(&self, points: &[usize], y: usize) -> Vec<f64> {
        let denom: f64 = points.iter().map(|&x| self.p(y, x)).sum();
        points.iter().map(|&x| self.p(y, x) / denom).collect()
    }

    /// Exact mean responsibilities of outputs drawn from `p(·|z)`.
    pub fn exact_mean_weights(&self, points: &[usize], z: usize) -> Vec<f64> {
        let mut w = vec![0.0; points.len()];
        for y in 0..SITES {
            for (a, b) in w.iter_mut().zip(self.exact_weights(points, y)) {
                *a += self.p(y, z) * b;
            }
        }
        w
    }
}

impl Channel for DiscreteChannel {
    type Input = usize;
    type Output = usize;
    type Reference = Vec<usize>;

    fn reference_len(&self, refs: &Vec<usize>) -> usize {
        refs.len()
    }

    fn sample_reference(&self, refs: &Vec<usize>, index: usize, count: usize, rng: &mut StreamRng) -> Vec<usize> {
        (0..count).map(|_| self.draw(refs[index], rng)).collect()
    }

    fn sample_input(&self, input: &usize, count: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
        Ok((0..count).map(|_| self.draw(*input, rng)).collect())
    }

    fn log_likelihoods(&self, refs: &Vec<usize>, outputs: &[usize]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_fn(refs.len(), outputs.len(), |k, s| {
            self.p(outputs[s], refs[k]).ln()
        }))
    }
}

/// Eigenvalues of a symmetric 3×3 matrix from the trigonometric solution of
/// its characteristic cubic, descending.
pub fn cubic_eigenvalues(a: &DMatrix<f64>) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    if p1 == 0.0 {
        let mut d = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
        d.sort_by(|x, y| y.total_cmp(x));
        return d;
    }
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (a - DMatrix::identity(3, 3) * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// Small synthetic 8×8 "digits": each class is a bright bar at its own
/// position plus deterministic speckle.
pub fn synthetic_idx(count_per_class: usize, classes: &[u8], seed: u64) -> (Vec<u8>, Vec<u8>) {
    let (rows, cols) = (8usize, 8usize);
    let mut rng = relevance_pca::rng::stream(seed, 0);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..count_per_class {
        for &c in classes {
            let bar = c as usize % rows;
            for y in 0..rows {
                for x in 0..cols {
                    let base: f64 = if y == bar || x == (bar + 3) % cols { 0.9 } else { 0.05 };
                    let v = (base + 0.1 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
                    pixels.push((v * 255.0).round() as u8);
                }
            }
            labels.push(c);
            let _ = i;
        }
    }
    let n = labels.len() as u32;
    let mut img = 0x0803u32.to_be_bytes().to_vec();
    for d in [n, rows as u32, cols as u32] {
        img.extend_from_slice(&d.to_be_bytes());
    }
    img.extend_from_slice(&pixels);
    let mut lab = 0x0801u32.to_be_bytes().to_vec();
    lab.extend_from_slice(&n.to_be_bytes());
    lab.extend_from_slice(&labels);
    (img, lab)
}

/// Write synthetic train and test IDX files with the standard MNIST names.
pub fn write_synthetic_mnist(dir: &Path, classes: &[u8], train_per_class: usize, test_per_class: usize) {
    use relevance_pca::experiment::config::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};
    std::fs::create_dir_all(dir).unwrap();
    let (ti, tl) = synthetic_idx(train_per_class, classes, 1);
    let (vi, vl) = synthetic_idx(test_per_class, classes, 2);
    std::fs::write(dir.join(TRAIN_IMAGES), ti).unwrap();
    std::fs::write(dir.join(TRAIN_LABELS), tl).unwrap();
    std::fs::write(dir.join(TEST_IMAGES), vi).unwrap();
    std::fs::write(dir.join(TEST_LABELS), vl).unwrap();
}

/// MNIST directory for data-dependent checks, if the files are present.
pub fn mnist_dir() -> Option<std::path::PathBuf> {
    let dir = std::env::var_os("RELPCA_MNIST_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-images-idx3-ubyte").is_file().then_some(dir)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
