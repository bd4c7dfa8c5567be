#![allow(dead_code)]

use std::path::PathBuf;

use hodw::ColorImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FIXTURES: [&str; 4] = ["astronaut", "coffee", "chelsea", "rocket"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{name}.png"))
}

pub fn fixture(name: &str) -> ColorImage {
    ColorImage::load(&fixture_path(name)).expect("fixture image")
}

pub fn crop(name: &str, size: usize) -> ColorImage {
    fixture(name).center_crop(size).expect("crop")
}

pub fn gaussian_image(h: usize, w: usize, seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ColorImage::from_fn(h, w, |_, _, _| rng.sample(StandardNormal))
}

pub fn uniform_image(h: usize, w: usize, seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ColorImage::from_fn(h, w, |_, _, _| rng.gen_range(0.0..255.0))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
