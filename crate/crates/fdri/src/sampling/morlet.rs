//! Morlet (Gabor) wavelets and noise-convolved sampling patterns.

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::image::{ComplexImage, Image};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Envelope width (pixels), periods within the envelope, and modulation
/// orientation of a Morlet wavelet. The zero-mean correction and the
/// normalization constant are computed on the discrete grid, not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorletParams {
    sigma: f64,
    n_p: f64,
    theta: f64,
}

impl MorletParams {
    pub fn new(sigma: f64, n_p: f64, theta: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if !(n_p > 0.0) || !n_p.is_finite() {
            return Err(Error::invalid(format!("n_p must be positive, got {n_p}")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta must be finite".to_string()));
        }
        // Canonical angle in [0, 2*pi) so theta and theta + 2*pi give the
        // same wavelet up to rounding.
        Ok(MorletParams { sigma, n_p, theta: theta.rem_euclid(2.0 * PI) })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_p(&self) -> f64 {
        self.n_p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Modulation wavevector magnitude pi * n_p / (2 sigma), in radians per
    /// pixel. The schedule that generates parameters works in units of
    /// n_p / (2 sigma), i.e. this value divided by pi.
    pub fn omega(&self) -> f64 {
        PI * self.n_p / (2.0 * self.sigma)
    }
}

/// Complex Morlet wavelet centered on the grid:
///
/// g = N exp(-(x^2+y^2)/(2 sigma^2)) (exp(i (pi n_p / 2 sigma)(x cos theta + y sin theta)) - kappa)
///
/// kappa and N are computed numerically on the grid so that mean(g) = 0 and
/// ||g|| = 1 hold exactly in the discrete sense.
pub fn morlet_wavelet(params: &MorletParams, width: usize, height: usize) -> Result<ComplexImage> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("wavelet grid dimensions must be positive"));
    }
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let k0 = PI * params.n_p / (2.0 * params.sigma);
    let (ct, st) = (params.theta.cos(), params.theta.sin());
    let inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);

    let n = width * height;
    let mut envelope = Vec::with_capacity(n);
    let mut carrier = Vec::with_capacity(n);
    let mut env_sum = 0.0;
    let mut mod_sum = Complex64::default();
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let env = (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp();
            let phase = k0 * (dx * ct + dy * st);
            let osc = Complex64::new(phase.cos(), phase.sin());
            env_sum += env;
            mod_sum += env * osc;
            envelope.push(env);
            carrier.push(osc);
        }
    }
    // kappa enforces zero mean; on a symmetric grid it is real up to rounding.
    let kappa = mod_sum / env_sum;
    let mut pixels: Vec<Complex64> = envelope
        .iter()
        .zip(&carrier)
        .map(|(&env, osc)| env * (osc - kappa))
        .collect();
    let norm = pixels.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::InternalConsistency(
            "morlet wavelet has zero norm on this grid".to_string(),
        ));
    }
    let scale = 1.0 / norm;
    for p in pixels.iter_mut() {
        *p *= scale;
    }
    ComplexImage::new(width, height, pixels)
}

/// Zero-mean correction of the wavelet on the grid (real part; the imaginary
/// part vanishes on the symmetric grid). Exposed for diagnostics.
pub fn morlet_kappa(params: &MorletParams, width: usize, height: usize) -> Result<f64> {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let k0 = PI * params.n_p / (2.0 * params.sigma);
    let (ct, st) = (params.theta.cos(), params.theta.sin());
    let inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);
    let mut env_sum = 0.0;
    let mut mod_sum = Complex64::default();
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let env = (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp();
            let phase = k0 * (dx * ct + dy * st);
            env_sum += env;
            mod_sum += env * Complex64::new(phase.cos(), phase.sin());
        }
    }
    if env_sum <= 0.0 {
        return Err(Error::InternalConsistency("degenerate morlet envelope".to_string()));
    }
    Ok((mod_sum / env_sum).re)
}

/// Sampling pattern: the real part of the wavelet circularly convolved with
/// unit-variance white Gaussian noise, standardized to zero mean and unit
/// l2 norm. Deterministic in (params, seed, resolution).
pub fn morlet_noise_pattern(
    params: &MorletParams,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<Image> {
    let wavelet = morlet_wavelet(params, width, height)?.real_part();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..width * height)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();

    let plan = Fft2::new(width, height);
    let w_hat = plan.forward_real(wavelet.pixels());
    let mut buf = plan.forward_real(&noise);
    for (b, w) in buf.iter_mut().zip(&w_hat) {
        *b *= *w;
    }
    plan.inverse(&mut buf);

    let mut pixels: Vec<f64> = buf.into_iter().map(|v| v.re).collect();
    let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
    for p in pixels.iter_mut() {
        *p -= mean;
    }
    let norm = pixels.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm <= f64::MIN_POSITIVE {
        return Err(Error::InternalConsistency(
            "noise-convolved pattern collapsed to zero".to_string(),
        ));
    }
    for p in pixels.iter_mut() {
        *p /= norm;
    }
    Image::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelet_has_zero_mean_and_unit_norm() {
        let params = MorletParams::new(6.0, 2.0, 0.7).unwrap();
        let g = morlet_wavelet(&params, 32, 32).unwrap();
        assert!(g.mean().norm() < 1e-12);
        assert!((g.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_matches_continuum_value() {
        // For n_p = 1 the continuum correction is exp(-(pi/2)^2 / 2).
        let params = MorletParams::new(8.0, 1.0, 0.0).unwrap();
        let kappa = morlet_kappa(&params, 64, 64).unwrap();
        let continuum = (-(PI / 2.0) * (PI / 2.0) / 2.0f64).exp();
        assert!((continuum - 0.29127).abs() < 1e-4);
        assert!((kappa - continuum).abs() < 1e-3, "kappa {kappa} vs {continuum}");
    }

    #[test]
    fn pattern_is_deterministic() {
        let params = MorletParams::new(4.0, 2.0, 1.1).unwrap();
        let a = morlet_noise_pattern(&params, 99, 32, 32).unwrap();
        let b = morlet_noise_pattern(&params, 99, 32, 32).unwrap();
        assert_eq!(a.pixels(), b.pixels());
        let c = morlet_noise_pattern(&params, 100, 32, 32).unwrap();
        assert_ne!(a.pixels(), c.pixels());
    }

    #[test]
    fn pattern_is_standardized() {
        let params = MorletParams::new(4.0, 2.0, 0.0).unwrap();
        let p = morlet_noise_pattern(&params, 5, 32, 32).unwrap();
        assert!(p.mean().abs() < 1e-12);
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pattern_invariant_under_full_turn() {
        let a = MorletParams::new(4.0, 2.0, 0.9).unwrap();
        let b = MorletParams::new(4.0, 2.0, 0.9 + 2.0 * PI).unwrap();
        let pa = morlet_noise_pattern(&a, 7, 16, 16).unwrap();
        let pb = morlet_noise_pattern(&b, 7, 16, 16).unwrap();
        let diff = pa
            .pixels()
            .iter()
            .zip(pb.pixels())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "max diff {diff}");
    }

    #[test]
    fn params_validate() {
        assert!(MorletParams::new(0.0, 1.0, 0.0).is_err());
        assert!(MorletParams::new(1.0, 0.0, 0.0).is_err());
        assert!(MorletParams::new(1.0, 1.0, f64::NAN).is_err());
    }
}
