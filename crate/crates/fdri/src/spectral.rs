//! Fourier-domain regularization filter and circulant operators.
//!
//! The quadratic criterion minimized by the reconstruction is a sum of
//! squared convolution norms whose transfer functions collapse into a single
//! diagonal Fourier-domain weight `gamma`, parameterized by `mu` in [0, 1]:
//! the `(1 - mu)^2` term weights the discrete-gradient filters `sin(w_x)`,
//! `sin(w_y)`, the `mu^2` term weights a `1/|w|`-type high-frequency penalty,
//! and `eps` keeps the weight finite everywhere. Note that the gradient
//! transfer functions vanish at the Nyquist frequency (w = pi), so at
//! `mu = 0` only `eps` controls that corner of the spectrum; the composite
//! criterion with the default `mu = 0.5` balances both terms.
//!
//! Circulant operators C^p (diagonal in the Fourier basis) are applied by
//! 2D FFT, filtering, and inverse FFT.

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::image::Image;
use std::f64::consts::PI;

/// Frequency pairs (w_x, w_y) in radians/pixel for every row-major grid
/// index, in the standard unshifted DFT ordering: index j along an axis of
/// length N maps to w = 2*pi*j'/N with j' = j for j <= N/2 and j' = j - N
/// otherwise, which places the Nyquist frequency at +pi.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    width: usize,
    height: usize,
    omegas: Vec<(f64, f64)>,
}

fn axis_omega(j: usize, n: usize) -> f64 {
    let j_signed = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
    2.0 * PI * j_signed as f64 / n as f64
}

/// Builds the frequency grid for a `width` x `height` image.
pub fn freq_grid(width: usize, height: usize) -> Result<FrequencyGrid> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!("frequency grid dimensions must be positive, got {width}x{height}")));
    }
    let mut omegas = Vec::with_capacity(width * height);
    for y in 0..height {
        let wy = axis_omega(y, height);
        for x in 0..width {
            omegas.push((axis_omega(x, width), wy));
        }
    }
    Ok(FrequencyGrid { width, height, omegas })
}

impl FrequencyGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[(f64, f64)] {
        &self.omegas
    }

    pub fn omega(&self, index: usize) -> (f64, f64) {
        self.omegas[index]
    }
}

/// Diagonal Fourier-domain weights together with the parameters that
/// generated them. All weights are finite and strictly positive, centrally
/// symmetric over the grid, and maximal at DC.
#[derive(Debug, Clone)]
pub struct SpectralFilter {
    grid: FrequencyGrid,
    gamma: Vec<f64>,
    mu: f64,
    eps: f64,
}

impl SpectralFilter {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }
}

/// Evaluates the composite filter weights over a frequency grid.
///
/// gamma = [(1-mu)^2 (sin^2 w_x + sin^2 w_y) + mu^2 (w_x^2 + w_y^2)/(2 pi^2) + eps]^(-1/2)
pub fn build_gamma(grid: &FrequencyGrid, mu: f64, eps: f64) -> Result<SpectralFilter> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::invalid(format!("mu must lie in [0, 1], got {mu}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("eps must be positive and finite, got {eps}")));
    }
    let grad_w = (1.0 - mu) * (1.0 - mu);
    let hf_w = mu * mu / (2.0 * PI * PI);
    let gamma = grid
        .omegas()
        .iter()
        .map(|&(wx, wy)| {
            let grad = wx.sin().powi(2) + wy.sin().powi(2);
            let hf = wx * wx + wy * wy;
            1.0 / (grad_w * grad + hf_w * hf + eps).sqrt()
        })
        .collect();
    Ok(SpectralFilter { grid: grid.clone(), gamma, mu, eps })
}

/// Relative tolerance on the imaginary residue left after the inverse FFT.
/// The filter is centrally symmetric so a real input must produce a real
/// output; anything above this indicates a symmetry bug.
const IMAG_RESIDUE_TOL: f64 = 1e-6;

/// A circulant operator prepared for repeated application at one resolution.
/// Holds the FFT plans and the exponentiated weights.
///
/// The `power` argument selects among the four operators the pipeline needs.
/// Its magnitude picks the operator family and its sign inverts within the
/// family:
///
/// | power | operator                  | spectral weight |
/// |-------|---------------------------|-----------------|
/// | +2    | criterion matrix C        | gamma^-2        |
/// | -2    | C^-1                      | gamma^+2        |
/// | +1    | F* Gamma F (C^-1/2)       | gamma^+1        |
/// | -1    | F* Gamma^-1 F (C^+1/2)    | gamma^-1        |
pub struct CirculantKernel {
    plan: Fft2,
    weights: Vec<f64>,
}

/// Spectral-weight exponent of gamma for a given operator power.
fn weight_exponent(power: i32) -> Option<i32> {
    match power {
        2 => Some(-2),
        -2 => Some(2),
        1 => Some(1),
        -1 => Some(-1),
        _ => None,
    }
}

impl CirculantKernel {
    pub fn new(filter: &SpectralFilter, power: i32) -> Result<Self> {
        let exponent = weight_exponent(power).ok_or_else(|| {
            Error::invalid(format!("circulant power must be one of +2, -2, +1, -1, got {power}"))
        })?;
        let weights = filter.gamma().iter().map(|&g| g.powi(exponent)).collect();
        Ok(CirculantKernel { plan: Fft2::new(filter.width(), filter.height()), weights })
    }

    /// Applies the operator to a real image: inverse-FFT(weights . FFT(x)).
    /// The imaginary part of the result is verified to be negligible and
    /// discarded rather than silently dropped.
    pub fn apply(&self, image: &Image) -> Result<Image> {
        if image.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "image size {}x{} does not match filter grid",
                image.width(),
                image.height()
            )));
        }
        let out = self.apply_slice(image.pixels())?;
        Image::new(image.width(), image.height(), out)
    }

    /// Same as `apply` but on a raw row-major buffer, for callers that treat
    /// matrix rows as images.
    pub fn apply_slice(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        if pixels.len() != self.weights.len() {
            return Err(Error::invalid("buffer length does not match filter grid".to_string()));
        }
        let mut buf = self.plan.forward_real(pixels);
        for (v, w) in buf.iter_mut().zip(&self.weights) {
            *v *= *w;
        }
        self.plan.inverse(&mut buf);
        let mut real_sq = 0.0;
        let mut imag_sq = 0.0;
        for v in &buf {
            real_sq += v.re * v.re;
            imag_sq += v.im * v.im;
        }
        if imag_sq.sqrt() > IMAG_RESIDUE_TOL * real_sq.sqrt().max(f64::MIN_POSITIVE) {
            return Err(Error::InternalConsistency(format!(
                "imaginary residue {:.3e} exceeds {IMAG_RESIDUE_TOL:e} of output norm {:.3e}",
                imag_sq.sqrt(),
                real_sq.sqrt()
            )));
        }
        Ok(buf.into_iter().map(|v| v.re).collect())
    }
}

/// One-shot application of the selected circulant operator to an image.
pub fn apply_circulant(filter: &SpectralFilter, image: &Image, power: i32) -> Result<Image> {
    CirculantKernel::new(filter, power)?.apply(image)
}

/// Filter with every weight equal to `value`; only reachable from tests,
/// where the exact scalar-cancellation cases need it.
#[cfg(test)]
pub(crate) fn uniform_filter(width: usize, height: usize, value: f64) -> SpectralFilter {
    let grid = freq_grid(width, height).expect("positive dimensions");
    let n = grid.len();
    SpectralFilter { grid, gamma: vec![value; n], mu: 0.5, eps: 1.0 }
}

/// Value of the quadratic criterion E(x) = sum_i gamma_i^-2 |x_hat_i|^2,
/// with the unitary FFT scaling so it agrees with the quadratic form x' C x.
pub fn criterion_energy(filter: &SpectralFilter, image: &Image) -> Result<f64> {
    if image.len() != filter.gamma().len() {
        return Err(Error::invalid("image size does not match filter grid".to_string()));
    }
    let plan = Fft2::new(filter.width(), filter.height());
    let spectrum = plan.forward_real(image.pixels());
    let scale = 1.0 / image.len() as f64;
    Ok(spectrum
        .iter()
        .zip(filter.gamma())
        .map(|(v, &g)| v.norm_sqr() * scale / (g * g))
        .sum())
}
