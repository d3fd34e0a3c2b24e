//! Real- and complex-valued pixel grids.
//!
//! `Image` is the common currency of the crate: scene images live in the
//! nominal range [0, 1], sampling patterns use whatever range their protocol
//! produces. Pixels are stored row-major.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major pixel data. Rejects empty dimensions,
    /// length mismatches and non-finite values.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        if !pixels.iter().all(|p| p.is_finite()) {
            return Err(Error::invalid("image contains non-finite pixel values".to_string()));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Image::new(width, height, vec![0.0; width * height])
    }

    /// Fills pixels from `f(x, y)` in row-major order.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in &self.pixels {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }

    /// Pixel-wise map, preserving dimensions.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn clipped(&self, lo: f64, hi: f64) -> Image {
        self.map(|p| p.clamp(lo, hi))
    }

    /// Affinely rescales pixel values so the min..max range maps onto [0, 1].
    /// A constant image maps to all zeros.
    pub fn normalized_unit(&self) -> Image {
        let (lo, hi) = self.min_max();
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            return self.map(|_| 0.0);
        }
        self.map(|p| (p - lo) / (hi - lo))
    }

    /// Bilinear resize. Sample positions are aligned so that the corners of
    /// the source and destination grids coincide.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("resize target dimensions must be positive"));
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let sx = if width > 1 { (self.width - 1) as f64 / (width - 1) as f64 } else { 0.0 };
        let sy = if height > 1 { (self.height - 1) as f64 / (height - 1) as f64 } else { 0.0 };
        Image::from_fn(width, height, |x, y| {
            let fx = x as f64 * sx;
            let fy = y as f64 * sy;
            let x0 = fx.floor() as usize;
            let y0 = fy.floor() as usize;
            let x1 = (x0 + 1).min(self.width - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            let tx = fx - x0 as f64;
            let ty = fy - y0 as f64;
            let p00 = self.get(x0, y0);
            let p10 = self.get(x1, y0);
            let p01 = self.get(x0, y1);
            let p11 = self.get(x1, y1);
            p00 * (1.0 - tx) * (1.0 - ty) + p10 * tx * (1.0 - ty) + p01 * (1.0 - tx) * ty + p11 * tx * ty
        })
    }
}

/// Complex-valued grid, used by the Morlet wavelet before the real part is
/// taken for sampling.
#[derive(Debug, Clone)]
pub struct ComplexImage {
    width: usize,
    height: usize,
    pixels: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("complex image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid("complex pixel buffer length mismatch"));
        }
        Ok(ComplexImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    pub fn mean(&self) -> Complex64 {
        self.pixels.iter().sum::<Complex64>() / self.pixels.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.pixels.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn real_part(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| p.re).collect(),
        }
    }
}
