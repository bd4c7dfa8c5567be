//! Per-channel structurally random Walsh-Hadamard sensing.
//!
//! Each channel `C` is sensed as
//! `y_C = sqrt(N/M) * P_rows * (H/sqrt(N)) * diag(sign_C) * pad(x_C)`,
//! where `N` is the padded length (next power of two of `h*w`), `H` the
//! Sylvester Hadamard matrix and `P_rows` keeps `M` randomly chosen rows.
//! Rows of the resulting matrix are orthogonal with squared norm `N/M`.

mod file;
mod wht;

pub use file::{read_measurements, write_measurements, MAGIC, VERSION};
pub use wht::{fwht, fwht_in_place};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{ColorImage, CHANNELS};

/// Realized randomness of one channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelPattern {
    /// `+1` / `-1` per padded position.
    pub signs: Vec<i8>,
    /// Strictly increasing selected rows in `[0, N)`.
    pub rows: Vec<u32>,
}

/// Block-diagonal sensing operator `diag(Phi_R, Phi_G, Phi_B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingOperator {
    height: usize,
    width: usize,
    n_pad: usize,
    subrate: f64,
    m: usize,
    seed: u64,
    channels: [ChannelPattern; CHANNELS],
}

/// Measurements `y = [y_R; y_G; y_B]` with the operator metadata they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub height: usize,
    pub width: usize,
    pub subrate: f64,
    pub seed: u64,
    pub y: [Vec<f64>; CHANNELS],
}

impl MeasurementSet {
    pub fn zeros(op: &SensingOperator) -> Self {
        Self {
            height: op.height,
            width: op.width,
            subrate: op.subrate,
            seed: op.seed,
            y: std::array::from_fn(|_| vec![0.0; op.m]),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.y.iter().flatten().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &MeasurementSet) -> f64 {
        self.y
            .iter()
            .zip(&other.y)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    /// `self - other`, channel by channel.
    pub fn sub(&self, other: &MeasurementSet) -> MeasurementSet {
        let mut out = self.clone();
        for (a, b) in out.y.iter_mut().zip(&other.y) {
            for (x, y) in a.iter_mut().zip(b) {
                *x -= y;
            }
        }
        out
    }
}

/// Measurements per channel for an `h x w` image at `subrate`.
pub fn measurement_count(height: usize, width: usize, subrate: f64) -> usize {
    (subrate * (height * width) as f64).floor() as usize
}

impl SensingOperator {
    /// Draws a fresh operator. Deterministic in `(height, width, subrate, seed)`;
    /// channel `c` uses stream `c` of a ChaCha20 generator keyed by `seed`.
    pub fn build(height: usize, width: usize, subrate: f64, seed: u64) -> Result<Self> {
        if !(subrate > 0.0 && subrate <= 1.0) {
            return Err(Error::param(format!("subrate {subrate} outside (0, 1]")));
        }
        if height == 0 || width == 0 {
            return Err(Error::param("image must have at least one pixel"));
        }
        let m = measurement_count(height, width, subrate);
        if m == 0 {
            return Err(Error::param(format!(
                "subrate {subrate} yields no measurements for {height}x{width}"
            )));
        }
        let n_pad = (height * width).next_power_of_two();
        let channels = std::array::from_fn(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let signs = (0..n_pad).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let mut rows: Vec<u32> = index::sample(&mut rng, n_pad, m)
                .into_iter()
                .map(|r| r as u32)
                .collect();
            rows.sort_unstable();
            ChannelPattern { signs, rows }
        });
        Ok(Self {
            height,
            width,
            n_pad,
            subrate,
            m,
            seed,
            channels,
        })
    }

    /// Reassembles an operator from realized patterns (e.g. read from disk).
    pub fn from_parts(
        height: usize,
        width: usize,
        subrate: f64,
        seed: u64,
        channels: [ChannelPattern; CHANNELS],
    ) -> Result<Self> {
        let n_pad = (height * width).next_power_of_two();
        let m = channels[0].rows.len();
        if height == 0 || width == 0 || m == 0 {
            return Err(Error::shape("empty operator"));
        }
        for ch in &channels {
            if ch.signs.len() != n_pad || ch.rows.len() != m {
                return Err(Error::shape("channel pattern sizes disagree"));
            }
            if ch.signs.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::shape("sign entries must be +1 or -1"));
            }
            if ch.rows.windows(2).any(|w| w[0] >= w[1])
                || ch.rows.last().is_some_and(|&r| r as usize >= n_pad)
            {
                return Err(Error::shape("rows must be strictly increasing and below N"));
            }
        }
        Ok(Self {
            height,
            width,
            n_pad,
            subrate,
            m,
            seed,
            channels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_pad(&self) -> usize {
        self.n_pad
    }

    pub fn subrate(&self) -> f64 {
        self.subrate
    }

    /// Measurements per channel.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel(&self, c: usize) -> &ChannelPattern {
        &self.channels[c]
    }

    /// `N/M`, the squared row norm; also the nonzero eigenvalue of
    /// `Phi^T Phi` when `h*w` is a power of two.
    pub fn gain(&self) -> f64 {
        self.n_pad as f64 / self.m as f64
    }

    fn check_image(&self, x: &ColorImage) -> Result<()> {
        if x.dims() != (self.height, self.width) {
            return Err(Error::shape(format!(
                "image {}x{} vs operator {}x{}",
                x.height(),
                x.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    fn sense_channel(&self, c: usize, plane: &[f64]) -> Vec<f64> {
        let pat = &self.channels[c];
        let mut buf = vec![0.0; self.n_pad];
        for ((b, &v), &s) in buf.iter_mut().zip(plane).zip(&pat.signs) {
            *b = f64::from(s) * v;
        }
        fwht_in_place(&mut buf).expect("padded length is a power of two");
        let scale = 1.0 / (self.m as f64).sqrt();
        pat.rows.iter().map(|&r| buf[r as usize] * scale).collect()
    }

    fn adjoint_channel(&self, c: usize, y: &[f64], plane: &mut [f64]) {
        let pat = &self.channels[c];
        let mut buf = vec![0.0; self.n_pad];
        for (&r, &v) in pat.rows.iter().zip(y) {
            buf[r as usize] = v;
        }
        fwht_in_place(&mut buf).expect("padded length is a power of two");
        let scale = 1.0 / (self.m as f64).sqrt();
        for ((p, &b), &s) in plane.iter_mut().zip(&buf).zip(&pat.signs) {
            *p = f64::from(s) * b * scale;
        }
    }

    /// `y = Phi x`.
    pub fn sense(&self, x: &ColorImage) -> Result<MeasurementSet> {
        self.check_image(x)?;
        let y: Vec<Vec<f64>> = (0..CHANNELS)
            .into_par_iter()
            .map(|c| self.sense_channel(c, x.channel(c)))
            .collect();
        let mut it = y.into_iter();
        Ok(MeasurementSet {
            height: self.height,
            width: self.width,
            subrate: self.subrate,
            seed: self.seed,
            y: std::array::from_fn(|_| it.next().unwrap()),
        })
    }

    /// `Phi^T y`.
    pub fn adjoint(&self, y: &MeasurementSet) -> Result<ColorImage> {
        if y.y.iter().any(|v| v.len() != self.m) {
            return Err(Error::shape(format!(
                "measurement lengths {:?} vs M = {}",
                y.y.iter().map(Vec::len).collect::<Vec<_>>(),
                self.m
            )));
        }
        let mut out = ColorImage::zeros(self.height, self.width);
        let n = out.plane_len();
        out.as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(c, plane)| self.adjoint_channel(c, &y.y[c], plane));
        Ok(out)
    }

    /// Back-projection `Phi^T y`, the default starting image.
    pub fn back_project(&self, y: &MeasurementSet) -> Result<ColorImage> {
        self.adjoint(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_is_deterministic() {
        let a = SensingOperator::build(12, 10, 0.3, 99).unwrap();
        let b = SensingOperator::build(12, 10, 0.3, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_pad(), 128);
        assert_eq!(a.m(), 36);
    }

    #[test]
    fn full_rate_selects_every_row() {
        let op = SensingOperator::build(8, 8, 1.0, 1).unwrap();
        assert_eq!(op.m(), 64);
        for c in 0..3 {
            assert_eq!(op.channel(c).rows, (0..64).collect::<Vec<u32>>());
        }
    }

    #[test]
    fn seeds_and_channels_differ() {
        // Seeds 1 and 2 produce different row sets for a 16x16 image at 0.3.
        let a = SensingOperator::build(16, 16, 0.3, 1).unwrap();
        let b = SensingOperator::build(16, 16, 0.3, 2).unwrap();
        assert_ne!(a.channel(0).rows, b.channel(0).rows);
        assert_ne!(a.channel(0).rows, a.channel(1).rows);
        assert_ne!(a.channel(1).signs, a.channel(2).signs);
    }

    #[test]
    fn invalid_subrates() {
        for s in [0.0, -0.1, 1.2, f64::NAN] {
            assert!(SensingOperator::build(8, 8, s, 0).is_err());
        }
        // floor(0.01 * 64) = 0 measurements
        assert!(SensingOperator::build(8, 8, 0.01, 0).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let op = SensingOperator::build(6, 7, 0.4, 3).unwrap();
        let y = op.sense(&ColorImage::zeros(6, 7)).unwrap();
        assert!(y.y.iter().flatten().all(|&v| v == 0.0));
        let x = op.adjoint(&MeasurementSet::zeros(&op)).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dims_checked() {
        let op = SensingOperator::build(8, 8, 0.5, 3).unwrap();
        assert!(op.sense(&ColorImage::zeros(8, 9)).is_err());
        let mut y = MeasurementSet::zeros(&op);
        y.y[1].pop();
        assert!(op.adjoint(&y).is_err());
    }
}
