mod common;

use common::{cubic_eigenvalues, log_log_slope, DiscreteChannel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use relevance_pca::kernel::{detrace, estimate_kernel_with, symmetrize, KernelMatrix};
use relevance_pca::projection::{project_fast_with, project_mc_with, ETA_FLOOR};
use relevance_pca::rng::stream;
use relevance_pca::spectral::{eigendecompose, top_features, FeatureBasis};

const POINTS: [usize; 3] = [3, 5, 9];

fn basis_of(kernel: &DMatrix<f64>, k: usize) -> FeatureBasis {
    let sym = symmetrize(&KernelMatrix::raw(kernel.clone()).unwrap()).unwrap();
    let spec = eigendecompose(&detrace(&sym).unwrap()).unwrap();
    top_features(&spec, k).unwrap()
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn mc_kernel_matches_exact() {
    let ch = DiscreteChannel::new(2.0);
    let refs = POINTS.to_vec();
    let s = 10_000;
    let mc = estimate_kernel_with(&ch, &refs, s, 11).unwrap();
    let exact = ch.exact_kernel(&refs);
    assert!(max_abs_diff(&mc, &exact) < 5.0 / (s as f64).sqrt());
}

#[test]
fn exact_kernel_is_already_symmetric() {
    let ch = DiscreteChannel::new(1.5);
    let exact = ch.exact_kernel(&POINTS);
    let sym = symmetrize(&KernelMatrix::raw(exact.clone()).unwrap()).unwrap();
    assert!(max_abs_diff(&sym.entries, &exact) <= 1e-15);
    for row in exact.row_iter() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ones_vector_is_null_after_detracing() {
    let ch = DiscreteChannel::new(2.5);
    let exact = ch.exact_kernel(&[1, 4, 6, 12]);
    let d = detrace(&symmetrize(&KernelMatrix::raw(exact).unwrap()).unwrap()).unwrap();
    let ones = DMatrix::from_element(4, 1, 1.0);
    let q = (ones.transpose() * &d.entries * &ones)[(0, 0)] / 4.0;
    assert!(q.abs() < 1e-12);
}

#[test]
fn eigenvalues_match_cubic_formula() {
    let ch = DiscreteChannel::new(2.0);
    let exact = ch.exact_kernel(&POINTS);
    let d = detrace(&symmetrize(&KernelMatrix::raw(exact).unwrap()).unwrap()).unwrap();
    let spec = eigendecompose(&d).unwrap();
    let cubic = cubic_eigenvalues(&d.entries);
    for (a, b) in spec.eigenvalues.iter().zip(cubic) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    let basis = top_features(&spec, 2).unwrap();
    assert_eq!(basis.k(), 2);
    assert!(basis.eigenvalues[0] >= basis.eigenvalues[1]);
    assert!((basis.fisher_inner(0, 0) - 1.0).abs() < 1e-12);
    assert!(basis.fisher_inner(0, 1).abs() < 1e-12);
    for j in 0..2 {
        assert!(basis.coefficients.column(j).sum().abs() < 1e-12);
    }
}

#[test]
fn fast_projection_matches_exact_weights() {
    let ch = DiscreteChannel::new(2.0);
    let refs = POINTS.to_vec();
    let basis = basis_of(&ch.exact_kernel(&refs), 2);
    let outputs: Vec<usize> = (0..common::SITES).collect();
    let got = project_fast_with(&ch, &refs, &basis, &outputs).unwrap();
    for (row, &y) in outputs.iter().enumerate() {
        let w = ch.exact_weights(&refs, y);
        for j in 0..2 {
            let want: f64 = (0..3).map(|i| basis.coefficients[(i, j)] * w[i]).sum();
            assert!((got[(row, j)] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn mc_projection_matches_exact_mean_weights() {
    let ch = DiscreteChannel::new(2.0);
    let refs = POINTS.to_vec();
    let basis = basis_of(&ch.exact_kernel(&refs), 2);
    let t = 100_000;
    for z in [0usize, 4, 7, 15] {
        let mut rng = stream(5, z as u64);
        let got = project_mc_with(&ch, &refs, &basis, &z, t, &mut rng, ETA_FLOOR).unwrap();
        let w = ch.exact_mean_weights(&refs, z);
        for j in 0..2 {
            let want: f64 = (0..3).map(|i| basis.coefficients[(i, j)] * w[i]).sum::<f64>() / basis.eigenvalues[j];
            let scale = 1.0 / basis.eigenvalues[j];
            assert!((got[j] - want).abs() < 5.0 * scale / (t as f64).sqrt(), "z={z} j={j}");
        }
    }
}

#[test]
fn exact_proj0_reproduces_training_coefficients() {
    let ch = DiscreteChannel::new(2.0);
    let refs = vec![2usize, 6, 7, 11];
    let basis = basis_of(&ch.exact_kernel(&refs), 3);
    for (i, &x) in refs.iter().enumerate() {
        let w = ch.exact_mean_weights(&refs, x);
        for j in 0..3 {
            let v: f64 = (0..refs.len()).map(|k| basis.coefficients[(k, j)] * w[k]).sum::<f64>() / basis.eigenvalues[j];
            assert!((v - basis.coefficients[(i, j)]).abs() < 1e-10);
        }
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn kernel_is_independent_of_pool_size() {
    let ch = DiscreteChannel::new(1.7);
    let refs: Vec<usize> = vec![0, 2, 3, 8, 9, 13, 15];
    let one = in_pool(1, || estimate_kernel_with(&ch, &refs, 500, 3).unwrap());
    let four = in_pool(4, || estimate_kernel_with(&ch, &refs, 500, 3).unwrap());
    assert_eq!(one.as_slice(), four.as_slice());
}

#[test]
fn kernel_error_shrinks_as_inverse_root() {
    let ch = DiscreteChannel::new(2.0);
    let refs = POINTS.to_vec();
    let exact = ch.exact_kernel(&refs);
    let sizes = [100.0, 1_000.0, 10_000.0];
    let errs: Vec<f64> = sizes
        .iter()
        .map(|&s| {
            let seeds = 40;
            (0..seeds)
                .map(|seed| {
                    let mc = estimate_kernel_with(&ch, &refs, s as usize, seed).unwrap();
                    (&mc - &exact).norm()
                })
                .sum::<f64>()
                / seeds as f64
        })
        .collect();
    let slope = log_log_slope(&sizes, &errs);
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mc_rows_are_stochastic(
        pts in proptest::collection::btree_set(0usize..common::SITES, 1..6),
        h in 0.5f64..4.0,
        s in 1usize..200,
        seed in any::<u64>(),
    ) {
        let ch = DiscreteChannel::new(h);
        let refs: Vec<usize> = pts.into_iter().collect();
        let k = estimate_kernel_with(&ch, &refs, s, seed).unwrap();
        for row in k.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_relevances_lie_in_unit_interval(
        pts in proptest::collection::btree_set(0usize..common::SITES, 3..6),
        h in 0.3f64..5.0,
    ) {
        let ch = DiscreteChannel::new(h);
        let refs: Vec<usize> = pts.into_iter().collect();
        let exact = ch.exact_kernel(&refs);
        let sym = symmetrize(&KernelMatrix::raw(exact).unwrap()).unwrap();
        let spec = eigendecompose(&detrace(&sym).unwrap()).unwrap();
        for v in spec.eigenvalues {
            prop_assert!(v >= -1e-10 && v <= 1.0 + 1e-10);
        }
    }
}
