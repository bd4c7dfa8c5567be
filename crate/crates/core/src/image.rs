//! Planar real-valued RGB images and 8-bit file I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Number of color channels (R, G, B).
pub const CHANNELS: usize = 3;

/// An `h x w x 3` image of real values, nominally in `[0, 255]`.
///
/// Storage is channel-planar: pixel `(i, j)` of channel `c` lives at
/// `c*h*w + i*w + j`, so each channel is one contiguous row-major plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ColorImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; CHANNELS * height * width],
        }
    }

    pub fn from_planar(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != CHANNELS * height * width {
            return Err(Error::shape(format!(
                "planar buffer of {} values does not match {height}x{width}x3",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Builds an image from a function of `(row, col, channel)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(CHANNELS * height * width);
        for c in 0..CHANNELS {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(i, j, c));
                }
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Pixels per channel.
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        self.data[(channel * self.height + row) * self.width + col] = value;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &ColorImage) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_dims(&self, other: &ColorImage) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "image {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &ColorImage) -> ColorImage {
        debug_assert!(self.same_dims(other));
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ColorImage) -> ColorImage {
        debug_assert!(self.same_dims(other));
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, k: f64) -> ColorImage {
        self.map(|v| v * k)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ColorImage {
        ColorImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, other: &ColorImage, f: impl Fn(f64, f64) -> f64) -> ColorImage {
        ColorImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &ColorImage) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Copy with every value clamped to `[0, 255]`.
    pub fn clipped(&self) -> ColorImage {
        self.map(|v| v.clamp(0.0, 255.0))
    }

    /// Sub-image with top-left corner `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<ColorImage> {
        if row + height > self.height || col + width > self.width || height == 0 || width == 0 {
            return Err(Error::param(format!(
                "crop {height}x{width} at ({row}, {col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Ok(ColorImage::from_fn(height, width, |i, j, c| self.get(row + i, col + j, c)))
    }

    /// Centered `size x size` crop, or the whole image when it is smaller.
    pub fn center_crop(&self, size: usize) -> Result<ColorImage> {
        let h = size.min(self.height);
        let w = size.min(self.width);
        self.crop((self.height - h) / 2, (self.width - w) / 2, h, w)
    }

    /// Quantizes to 8-bit RGB: clip to `[0, 255]`, then round half away from zero.
    pub fn to_rgb8(&self) -> image::RgbImage {
        let mut out = image::RgbImage::new(self.width as u32, self.height as u32);
        for (x, y, px) in out.enumerate_pixels_mut() {
            let (i, j) = (y as usize, x as usize);
            for c in 0..CHANNELS {
                px.0[c] = self.get(i, j, c).clamp(0.0, 255.0).round() as u8;
            }
        }
        out
    }

    pub fn from_rgb8(img: &image::RgbImage) -> ColorImage {
        let (w, h) = img.dimensions();
        ColorImage::from_fn(h as usize, w as usize, |i, j, c| {
            f64::from(img.get_pixel(j as u32, i as u32).0[c])
        })
    }

    /// Reads an 8-bit PNG or binary PPM file.
    pub fn load(path: &Path) -> Result<ColorImage> {
        let dynamic = image::open(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if dynamic.color().bytes_per_pixel() / dynamic.color().channel_count() != 1 {
            return Err(Error::Image {
                path: path.to_path_buf(),
                message: "only 8-bit images are supported".into(),
            });
        }
        Ok(ColorImage::from_rgb8(&dynamic.to_rgb8()))
    }

    /// Writes an 8-bit image; the format follows the extension (`.png`, `.ppm`).
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_rgb8().save(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
