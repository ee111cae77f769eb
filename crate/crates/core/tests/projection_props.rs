use nalgebra::DMatrix;
use proptest::prelude::*;
use relevance_pca::projection::{project_batch_fast, project_fast};
use relevance_pca::spectral::{eigendecompose, top_features};
use relevance_pca::{detrace, estimate_kernel, symmetrize, BlurredSet, ChannelParams, Dataset, FeatureBasis};

fn fixture(n: usize) -> (Dataset, ChannelParams, BlurredSet, FeatureBasis) {
    let p = ChannelParams::new(0.8, 0.9, 4, 4).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..16)
                .map(|q| (((i * 13 + q * 5) % 17) as f64 / 16.0).powi(2))
                .collect()
        })
        .collect();
    let data = Dataset::from_rows(&rows, None).unwrap();
    let raw = estimate_kernel(&data, &p, 400 * n, 2).unwrap();
    let spec = eigendecompose(&detrace(&symmetrize(&raw).unwrap()).unwrap()).unwrap();
    let basis = top_features(&spec, 3).unwrap();
    let set = BlurredSet::new(&data, &p).unwrap();
    (data, p, set, basis)
}

#[test]
fn batched_matches_looped() {
    let (_, p, set, basis) = fixture(8);
    let pts: Vec<Vec<f64>> = (0..100)
        .map(|i| (0..16).map(|q| ((i * 31 + q * 7) % 23) as f64 / 22.0).collect())
        .collect();
    let ds = Dataset::from_rows(&pts, None).unwrap();
    let batch = project_batch_fast(&ds, &basis, &set, &p).unwrap();
    for (r, z) in pts.iter().enumerate() {
        let single = project_fast(z, &basis, &set, &p).unwrap();
        for j in 0..basis.k() {
            assert!((batch.values[(r, j)] - single[j]).abs() < 1e-10);
        }
    }
    let one = Dataset::from_rows(&pts[..1], None).unwrap();
    let b1 = project_batch_fast(&one, &basis, &set, &p).unwrap();
    let s1 = project_fast(&pts[0], &basis, &set, &p).unwrap();
    assert_eq!(b1.values.as_slice(), s1.as_slice());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn components_are_bounded_by_l1_norm(z in proptest::collection::vec(-1.0f64..2.0, 16)) {
        let (_, p, set, basis) = fixture(6);
        let c = project_fast(&z, &basis, &set, &p).unwrap();
        for j in 0..basis.k() {
            let l1: f64 = basis.coefficients.column(j).iter().map(|v| v.abs()).sum();
            prop_assert!(c[j].abs() <= l1 + 1e-12);
        }
    }

    #[test]
    fn shifting_all_points_and_query_is_invariant(
        z in proptest::collection::vec(0.0f64..1.0, 16),
        shift in -0.5f64..0.5,
    ) {
        // zero sigma keeps the blur from mixing the shift with the padding
        let p = ChannelParams::new(0.0, 1.1, 4, 4).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..16).map(|q| ((i * 3 + q) % 7) as f64 / 6.0).collect())
            .collect();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let k = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.6 } else { 0.1 });
        let spec = eigendecompose(&detrace(&symmetrize(&relevance_pca::KernelMatrix::raw(k).unwrap()).unwrap()).unwrap()).unwrap();
        let basis = top_features(&spec, 2).unwrap();
        let a = BlurredSet::new(&Dataset::from_rows(&rows, None).unwrap(), &p).unwrap();
        let b = BlurredSet::new(&Dataset::from_rows(&shifted, None).unwrap(), &p).unwrap();
        let zs: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let ca = project_fast(&z, &basis, &a, &p).unwrap();
        let cb = project_fast(&zs, &basis, &b, &p).unwrap();
        for j in 0..2 {
            prop_assert!((ca[j] - cb[j]).abs() < 1e-9);
        }
    }
}
