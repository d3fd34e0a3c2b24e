//! Image-quality metrics, sampling-spectrum diagnostics, and the
//! reconstruction micro-benchmark.

use crate::error::{Error, Result};
use crate::fft::{shift_center, Fft2};
use crate::image::Image;
use crate::reconstruction::{Precision, ReconstructionMatrix};
use crate::sampling::PatternSet;
use crate::spectral::freq_grid;
use serde::{Serialize, Serializer};
use std::time::Instant;

/// JSON cannot carry IEEE infinities; report them as the string "inf".
pub(crate) fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

pub(crate) fn serialize_opt_db<S: Serializer>(
    v: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => serialize_db(x, s),
        None => s.serialize_none(),
    }
}

/// PSNR/MSE pair with the peak convention that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    #[serde(serialize_with = "serialize_db")]
    pub psnr_db: f64,
    pub mse: f64,
    pub peak: f64,
}

/// Peak signal-to-noise ratio, 10 log10(peak^2 / mse). Zero error reports
/// +infinity.
pub fn psnr(reference: &Image, test: &Image, peak: f64) -> Result<QualityReport> {
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(Error::invalid(format!(
            "resolution mismatch: {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::invalid("peak must be positive"));
    }
    let n = reference.len() as f64;
    let mse = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    let psnr_db = if mse > 0.0 { 10.0 * (peak * peak / mse).log10() } else { f64::INFINITY };
    Ok(QualityReport { psnr_db, mse, peak })
}

/// Per-pixel deviation below this fraction of the peak counts as exact when
/// evaluating reconstructions.
const EXACT_TOL: f64 = 1e-10;

/// Evaluation-path PSNR: the reconstruction is clipped to [0, peak] first
/// (never in the reconstruction path itself), and a result within the
/// clipping tolerance of the reference everywhere reports +infinity.
pub fn evaluate_reconstruction(reference: &Image, reconstruction: &Image, peak: f64) -> Result<QualityReport> {
    let clipped = reconstruction.clipped(0.0, peak);
    let max_dev = reference
        .pixels()
        .iter()
        .zip(clipped.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if max_dev <= EXACT_TOL * peak {
        return Ok(QualityReport { psnr_db: f64::INFINITY, mse: 0.0, peak });
    }
    psnr(reference, &clipped, peak)
}

/// Unshifted sum of normalized Fourier magnitudes over the set's patterns.
fn accumulated_magnitude(set: &PatternSet) -> Vec<f64> {
    let w = set.width();
    let h = set.height();
    let plan = Fft2::new(w, h);
    let mut acc = vec![0.0; w * h];
    for p in set.patterns() {
        let spec = plan.forward_real(p.pixels());
        let norm = spec.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(&spec) {
            *a += v.norm() / norm;
        }
    }
    acc
}

/// Mean absolute-spectrum map sum_i |m_hat_i| / ||m_hat_i||, returned with
/// DC at the image center for display.
pub fn mean_spectrum(set: &PatternSet) -> Result<Image> {
    if set.is_empty() {
        return Err(Error::invalid("pattern set is empty"));
    }
    let acc = accumulated_magnitude(set);
    Image::new(set.width(), set.height(), shift_center(&acc, set.width(), set.height()))
}

/// Fraction of the mean-spectrum mass lying at radial frequencies above
/// `omega_cut` (radians/pixel).
pub fn high_frequency_fraction(set: &PatternSet, omega_cut: f64) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("pattern set is empty"));
    }
    let acc = accumulated_magnitude(set);
    let grid = freq_grid(set.width(), set.height())?;
    let mut high = 0.0;
    let mut total = 0.0;
    for (v, &(wx, wy)) in acc.iter().zip(grid.omegas()) {
        total += v;
        if (wx * wx + wy * wy).sqrt() > omega_cut {
            high += v;
        }
    }
    if total == 0.0 {
        return Err(Error::invalid("pattern set has zero spectral mass"));
    }
    Ok(high / total)
}

/// Latency statistics of repeated reconstructions.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub iterations: usize,
    pub warmup: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub precision: Precision,
    pub k: usize,
    pub n: usize,
}

/// Times `iterations` reconstructions of the same measurement vector,
/// excluding a short warm-up. The reconstruction output is not perturbed by
/// benchmarking; callers can reuse it.
pub fn bench_reconstruct(
    p: &ReconstructionMatrix,
    y: &[f64],
    iterations: usize,
    precision: Precision,
) -> Result<BenchReport> {
    if iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    if y.len() != p.k() {
        return Err(Error::invalid("measurement length does not match k"));
    }
    let warmup = iterations.min(3);
    let mut latencies_ms = Vec::with_capacity(iterations);
    match precision {
        Precision::F64 => {
            for i in 0..warmup + iterations {
                let t = Instant::now();
                let out = p.apply(y)?;
                let dt = t.elapsed().as_secs_f64() * 1e3;
                std::hint::black_box(&out);
                if i >= warmup {
                    latencies_ms.push(dt);
                }
            }
        }
        Precision::F32 => {
            let p32 = p.to_f32();
            let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
            for i in 0..warmup + iterations {
                let t = Instant::now();
                let out = p32.apply_f32(&y32)?;
                let dt = t.elapsed().as_secs_f64() * 1e3;
                std::hint::black_box(&out);
                if i >= warmup {
                    latencies_ms.push(dt);
                }
            }
        }
    }
    latencies_ms.sort_by(|a, b| a.partial_cmp(b).expect("finite latencies"));
    let median_ms = latencies_ms[latencies_ms.len() / 2];
    let mean_ms = latencies_ms.iter().sum::<f64>() / latencies_ms.len() as f64;
    let p99_idx = ((latencies_ms.len() as f64 * 0.99).ceil() as usize).saturating_sub(1);
    let p99_ms = latencies_ms[p99_idx.min(latencies_ms.len() - 1)];
    Ok(BenchReport {
        iterations,
        warmup,
        median_ms,
        mean_ms,
        p99_ms,
        precision,
        k: p.k(),
        n: p.n(),
    })
}
