//! Quality and diagnostic measurements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hodict::{analyze, synthesize, HigherOrderDictionary, SparseRep};
use crate::image::{ColorImage, CHANNELS};
use crate::regularizer::estimate_error_std;

const PEAK: f64 = 255.0;

/// Mean squared error over all `3hw` entries.
pub fn mse(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    a.check_dims(b)?;
    let n = a.as_slice().len() as f64;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// Per-channel mean squared error.
pub fn channel_mse(a: &ColorImage, b: &ColorImage) -> Result<[f64; 3]> {
    a.check_dims(b)?;
    Ok(std::array::from_fn(|c| {
        let (pa, pb) = (a.channel(c), b.channel(c));
        pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / pa.len() as f64
    }))
}

/// Peak signal-to-noise ratio in dB against a peak of 255. Identical
/// images give `f64::INFINITY`.
pub fn psnr(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / e).log10())
}

const CHANNEL_NAMES: [char; 3] = ['R', 'G', 'B'];

fn centered(x: &ColorImage, c: usize) -> Result<Vec<f64>> {
    let p = x.channel(c);
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo == hi {
        return Err(Error::ConstantChannel(CHANNEL_NAMES[c]));
    }
    let m = p.iter().sum::<f64>() / p.len() as f64;
    Ok(p.iter().map(|v| v - m).collect())
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Normalized inner products of the centered channels: `(rho_RG, rho_RB, rho_GB)`.
pub fn cross_channel_correlation(x: &ColorImage) -> Result<(f64, f64, f64)> {
    let r = centered(x, 0)?;
    let g = centered(x, 1)?;
    let b = centered(x, 2)?;
    Ok((pearson(&r, &g), pearson(&r, &b), pearson(&g, &b)))
}

/// Serialized as a number, or the string `"inf"` for identical images.
mod db {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Num(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad dB value '{t}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    #[serde(with = "db")]
    pub psnr_db: f64,
    pub channel_mse: [f64; 3],
    /// `[rho_RG, rho_RB, rho_GB]` of the evaluated image; absent when a
    /// channel is constant.
    pub correlation: Option<[f64; 3]>,
}

impl QualityReport {
    pub fn evaluate(estimate: &ColorImage, reference: &ColorImage) -> Result<Self> {
        let clipped = estimate.clipped();
        let correlation = match cross_channel_correlation(&clipped) {
            Ok((rg, rb, gb)) => Some([rg, rb, gb]),
            Err(Error::ConstantChannel(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            psnr_db: psnr(&clipped, reference)?,
            channel_mse: channel_mse(&clipped, reference)?,
            correlation,
        })
    }

    pub fn is_identical(&self) -> bool {
        self.psnr_db == f64::INFINITY
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: &'static str = "psnr_db,mse_r,mse_g,mse_b,rho_rg,rho_rb,rho_gb";

    pub fn csv_row(&self) -> String {
        let rho = match self.correlation {
            Some([a, b, c]) => format!("{a},{b},{c}"),
            None => ",,".into(),
        };
        let [r, g, b] = self.channel_mse;
        format!("{},{r},{g},{b},{rho}", fmt_db(self.psnr_db))
    }
}

pub(crate) fn fmt_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

pub const HISTOGRAM_BINS: usize = 129;

/// Histogram of `r - alpha0` over `[-4 std, 4 std]` plus its moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mean: f64,
    pub std: f64,
    pub half_range: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl ResidualStats {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        if self.half_range == 0.0 {
            return 0.0;
        }
        let width = 2.0 * self.half_range / HISTOGRAM_BINS as f64;
        -self.half_range + (k as f64 + 0.5) * width
    }
}

pub fn residual_stats(r: &SparseRep, alpha0: &SparseRep) -> Result<ResidualStats> {
    let (mean, std) = estimate_error_std(r, alpha0)?;
    let half_range = 4.0 * std;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let (mut below, mut above) = (0, 0);
    let width = 2.0 * half_range / HISTOGRAM_BINS as f64;
    for d in r.values().zip(alpha0.values()).map(|(a, b)| a - b) {
        if half_range == 0.0 {
            counts[HISTOGRAM_BINS / 2] += 1;
        } else if d < -half_range {
            below += 1;
        } else if d > half_range {
            above += 1;
        } else {
            let k = ((d + half_range) / width) as usize;
            counts[k.min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    Ok(ResidualStats {
        mean,
        std,
        half_range,
        counts,
        below,
        above,
    })
}

/// Both sides of the large-sample approximation relating pixel-domain and
/// coefficient-domain errors:
///
/// `lhs = |x - alpha.D - b|^2 / 3hw`,
/// `rhs = sum_g |r_g - alpha_g|^2 / (3 N_g p^2 L)` with `r = analyze(x - b)`.
pub fn lln_diagnostic(
    x: &ColorImage,
    alpha: &SparseRep,
    dict: &HigherOrderDictionary,
    b: &ColorImage,
) -> Result<(f64, f64)> {
    x.check_dims(b)?;
    let v = x.sub(b);
    let lhs = v.sub(&synthesize(alpha, dict)?).norm_sq() / v.as_slice().len() as f64;
    let r = analyze(&v, dict)?;
    r.check_shape(alpha)?;
    let n = r.num_coefficients();
    let rhs = if n == 0 {
        0.0
    } else {
        r.sub(alpha).values().map(|d| d * d).sum::<f64>() / n as f64
    };
    debug_assert_eq!(v.as_slice().len(), CHANNELS * x.plane_len());
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodict::{learn_dictionary, GroupingParams};
    use crate::tensor::Tensor4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn random_image(h: usize, w: usize, seed: u64) -> ColorImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ColorImage::from_fn(h, w, |_, _, _| rng.gen_range(0.0..255.0))
    }

    #[test]
    fn psnr_closed_forms() {
        let a = random_image(6, 5, 1);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let shifted = a.map(|v| v + 1.0);
        assert!((psnr(&a, &shifted).unwrap() - 20.0 * 255f64.log10()).abs() < 1e-10);
        assert!(psnr(&a, &random_image(6, 6, 1)).is_err());
    }

    #[test]
    fn psnr_matches_loop() {
        let a = random_image(7, 9, 2);
        let b = random_image(7, 9, 3);
        let mut sum = 0.0;
        for c in 0..3 {
            for i in 0..7 {
                for j in 0..9 {
                    let d = a.get(i, j, c) - b.get(i, j, c);
                    sum += d * d;
                }
            }
        }
        let want = 10.0 * (255.0f64 * 255.0 / (sum / 189.0)).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-10);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn correlation_cases() {
        let gray = ColorImage::from_fn(8, 8, |i, j, _| (i * 8 + j) as f64);
        let (a, b, c) = cross_channel_correlation(&gray).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
        let anti = ColorImage::from_fn(8, 8, |i, j, c| {
            let v = (i * 8 + j) as f64 * 3.0;
            if c == 1 { 255.0 - v } else { v }
        });
        assert!((cross_channel_correlation(&anti).unwrap().0 + 1.0).abs() < 1e-12);
        let flat = ColorImage::from_fn(4, 4, |i, _, c| if c == 2 { 9.0 } else { i as f64 });
        assert!(matches!(cross_channel_correlation(&flat), Err(Error::ConstantChannel('B'))));
    }

    #[test]
    fn correlation_affine_invariance() {
        let x = random_image(10, 10, 4);
        let (rg, rb, gb) = cross_channel_correlation(&x).unwrap();
        let mut y = x.clone();
        for v in y.channel_mut(0) {
            *v = 3.0 * *v + 11.0;
        }
        let (rg2, rb2, gb2) = cross_channel_correlation(&y).unwrap();
        assert!((rg - rg2).abs() < 1e-12 && (rb - rb2).abs() < 1e-12 && (gb - gb2).abs() < 1e-12);
        for v in y.channel_mut(0) {
            *v = -*v;
        }
        let (rg3, _, _) = cross_channel_correlation(&y).unwrap();
        assert!((rg + rg3).abs() < 1e-12);
    }

    fn rep(values: Vec<f64>) -> SparseRep {
        SparseRep {
            cores: vec![Tensor4::from_vec([values.len(), 1, 1, 1], values).unwrap()],
        }
    }

    #[test]
    fn residual_degenerate() {
        let a = rep(vec![1.0, 2.0, 3.0]);
        let s = residual_stats(&a, &a).unwrap();
        assert_eq!((s.mean, s.std), (0.0, 0.0));
        assert_eq!(s.counts[HISTOGRAM_BINS / 2], 3);
        assert_eq!(s.total(), 3);
        let s = residual_stats(&a.map(|v| v + 0.5), &a).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15);
    }

    #[test]
    fn residual_histogram_is_gaussian() {
        let n = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let zero = rep(vec![0.0; n]);
        let r = rep((0..n).map(|_| noise.sample(&mut rng)).collect());
        let s = residual_stats(&r, &zero).unwrap();
        assert_eq!(s.total(), n as u64);
        // chi-square against the normal density over the interior bins
        let width = 2.0 * s.half_range / HISTOGRAM_BINS as f64;
        let mut chi2 = 0.0;
        for k in 0..HISTOGRAM_BINS {
            let z = (s.bin_center(k) - s.mean) / s.std;
            let expected = n as f64 * width / s.std * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            if expected > 20.0 {
                chi2 += (s.counts[k] as f64 - expected).powi(2) / expected;
            }
        }
        assert!(chi2 < 2.0 * HISTOGRAM_BINS as f64, "chi2 = {chi2}");
    }

    #[test]
    fn report_serialization() {
        let a = random_image(5, 5, 8);
        let same = QualityReport::evaluate(&a, &a).unwrap();
        assert!(same.is_identical());
        let json = same.to_json().unwrap();
        assert!(json.contains("\"inf\""));
        let back: QualityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, same);
        assert!(same.csv_row().starts_with("inf,0,0,0,"));
        let other = QualityReport::evaluate(&a.map(|v| v + 1.0), &a).unwrap();
        let back: QualityReport = serde_json::from_str(&other.to_json().unwrap()).unwrap();
        assert_eq!(back, other);
    }

    #[test]
    fn lln_exact_and_zero() {
        let params = GroupingParams {
            patch: 4,
            group_size: 6,
            stride: 2,
            window: 7,
        };
        let x = random_image(12, 12, 5);
        let b = random_image(12, 12, 6).scale(0.1);
        let (d, _) = learn_dictionary(&x, &params).unwrap();
        let alpha = analyze(&x.sub(&b), &d).unwrap();
        let (lhs, rhs) = lln_diagnostic(&x, &alpha, &d, &b).unwrap();
        assert!(lhs <= 1e-12 && rhs == 0.0);
        let z = ColorImage::zeros(12, 12);
        let zero = analyze(&z, &d).unwrap();
        assert_eq!(lln_diagnostic(&z, &zero, &d, &z).unwrap(), (0.0, 0.0));
    }
}
