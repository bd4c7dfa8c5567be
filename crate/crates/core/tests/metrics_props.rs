mod common;

use common::{gaussian_image, uniform_image};
use hodw::metrics::{cross_channel_correlation, lln_diagnostic, psnr};
use hodw::{analyze, learn_dictionary, ColorImage, GroupingParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psnr_symmetric_and_permutation_invariant(seed in any::<u64>(), shift in 0usize..50) {
        let a = uniform_image(6, 9, seed);
        let b = uniform_image(6, 9, seed ^ 7);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        let n = a.as_slice().len();
        let perm = |x: &ColorImage| {
            let v: Vec<f64> = (0..n).map(|k| x.as_slice()[(k + shift) % n]).collect();
            ColorImage::from_planar(6, 9, v).unwrap()
        };
        prop_assert!((psnr(&perm(&a), &perm(&b)).unwrap() - psnr(&a, &b).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn correlation_bounded(seed in any::<u64>()) {
        let (a, b, c) = cross_channel_correlation(&uniform_image(7, 7, seed)).unwrap();
        for r in [a, b, c] {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

/// With non-overlapping single-patch groups every pixel lands in exactly one
/// group, so both sides estimate the same per-entry variance.
#[test]
fn lln_sides_agree_under_white_perturbation() {
    let params = GroupingParams { patch: 8, group_size: 1, stride: 8, window: 1 };
    let x = uniform_image(128, 128, 1);
    let b = gaussian_image(128, 128, 2);
    let (d, _) = learn_dictionary(&x, &params).unwrap();
    let sigma = 3.0;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alpha = analyze(&x.sub(&b), &d).unwrap();
    let perturbed = hodw::SparseRep {
        cores: alpha
            .cores
            .into_iter()
            .map(|t| {
                let data: Vec<f64> = t.as_slice().iter().map(|v| v + noise.sample(&mut rng)).collect();
                hodw::Tensor4::from_vec(t.dims(), data).unwrap()
            })
            .collect(),
    };
    let (lhs, rhs) = lln_diagnostic(&x, &perturbed, &d, &b).unwrap();
    let var = sigma * sigma;
    assert!((lhs - var).abs() < 0.1 * var, "lhs {lhs}");
    assert!((rhs - var).abs() < 0.1 * var, "rhs {rhs}");
}
