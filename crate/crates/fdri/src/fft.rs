//! Thin 2D FFT layer over rustfft.
//!
//! Conventions: forward transform is unnormalized, inverse divides by the
//! total sample count, so `ifft2(fft2(x)) == x`. Data is row-major.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Planned forward/inverse transforms for one (width, height) pair.
/// Cheap to clone (plans are reference counted) and safe to share across
/// threads; scratch buffers are per call.
#[derive(Clone)]
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    fn pass(&self, data: &mut [Complex64], forward: bool) {
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        for line in data.chunks_exact_mut(self.width) {
            row.process(line);
        }
        let mut t = transpose(data, self.width, self.height);
        for line in t.chunks_exact_mut(self.height) {
            col.process(line);
        }
        let back = transpose(&t, self.height, self.width);
        data.copy_from_slice(&back);
    }

    /// In-place unnormalized forward 2D FFT of row-major data.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.pass(data, true);
    }

    /// In-place inverse 2D FFT, normalized by 1/(width*height).
    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.pass(data, false);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transform of a real buffer.
    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = data[y * width + x];
        }
    }
    out
}

/// Reorders a row-major spectrum so the DC bin lands at the image center,
/// for display purposes.
pub fn shift_center(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    let hx = width / 2;
    let hy = height / 2;
    for y in 0..height {
        for x in 0..width {
            let sx = (x + hx) % width;
            let sy = (y + hy) % height;
            out[sy * width + sx] = data[y * width + x];
        }
    }
    out
}
