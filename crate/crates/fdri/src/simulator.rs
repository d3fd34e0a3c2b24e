//! Simulated single-pixel measurements and the streaming frame pipeline.
//!
//! A measurement is the inner product of the scene with every sampling
//! pattern, optionally perturbed by additive Gaussian noise whose standard
//! deviation is `noise_sigma` times the RMS of the clean measurement
//! (`noise_sigma = 0` gives the exact product). The stream pipeline plays a
//! producer/consumer pair: the producer emits one measurement vector per
//! frame period (the DMD pacing), the consumer reconstructs frames in order
//! and accounts for deadline misses. The scene is held constant within one
//! frame's exposures.

use crate::digest::mix_seed;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg;
use crate::metrics;
use crate::reconstruction::{reconstruct, Precision, ReconstructionMatrix, ReconstructionMatrixF32};
use crate::sampling::MeasurementMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::sync::mpsc::sync_channel;
use std::time::{Duration, Instant};

/// Result of one simulated exposure sequence: k detector readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    values: Vec<f64>,
    noise_sigma: f64,
    seed: u64,
    source_digest: String,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>, noise_sigma: f64, seed: u64, source_digest: String) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("measurement vector cannot be empty"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("measurement vector contains non-finite values"));
        }
        Ok(MeasurementVector { values, noise_sigma, seed, source_digest })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }
}

fn add_noise(values: &mut [f64], noise_sigma: f64, seed: u64) {
    if noise_sigma == 0.0 {
        return;
    }
    let k = values.len() as f64;
    let rms = values.iter().map(|v| v * v).sum::<f64>().sqrt() / k.sqrt();
    let std = noise_sigma * rms;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for v in values.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *v += std * g;
    }
}

/// Simulates one exposure sequence: y_i = <m_i, x> + eta_i, deterministic in
/// (M, scene, noise_sigma, seed).
pub fn measure(
    m: &MeasurementMatrix,
    scene: &Image,
    noise_sigma: f64,
    seed: u64,
) -> Result<MeasurementVector> {
    if scene.width() != m.width() || scene.height() != m.height() {
        return Err(Error::invalid(format!(
            "scene resolution {}x{} does not match measurement matrix {}x{}",
            scene.width(),
            scene.height(),
            m.width(),
            m.height()
        )));
    }
    if noise_sigma < 0.0 {
        return Err(Error::invalid("noise_sigma must be non-negative"));
    }
    let mut values = linalg::matvec_f64(m.k(), m.n(), m.entries(), scene.pixels());
    add_noise(&mut values, noise_sigma, seed);
    MeasurementVector::new(values, noise_sigma, seed, m.digest())
}

/// Single-precision measurement used by the f32 stream path; the pattern
/// entries are pre-cast once per stream.
fn measure_f32(
    m32: &[f32],
    k: usize,
    scene32: &[f32],
    noise_sigma: f64,
    seed: u64,
    digest: &str,
) -> Result<MeasurementVector> {
    let y32 = linalg::matvec_f32(k, scene32.len(), m32, scene32);
    let mut values: Vec<f64> = y32.into_iter().map(f64::from).collect();
    add_noise(&mut values, noise_sigma, seed);
    MeasurementVector::new(values, noise_sigma, seed, digest.to_string())
}

/// Clock discipline of the stream driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockMode {
    /// Logical time: no sleeping, frame timestamps follow the DMD schedule
    /// exactly. Used for deterministic tests.
    Simulated,
    /// Real sleeping producer; reconstruction latencies come from the wall
    /// clock. Used for benchmarks.
    WallClock,
}

/// Frame source for a stream run. Directories are resolved to images by the
/// CLI layer; the library consumes in-memory frames.
#[derive(Debug, Clone)]
pub enum FrameSource {
    Images(Vec<Image>),
    /// Deterministic moving-target scene.
    Synthetic { frames: usize },
}

/// Stream parameters. The number of patterns per frame comes from the
/// measurement matrix; the frame period is k / dmd_rate seconds.
#[derive(Debug, Clone)]
pub struct StreamConfig {
    /// Pattern display rate of the modulator, patterns/second.
    pub dmd_rate: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub clock: ClockMode,
    pub precision: Precision,
    /// Bound on in-flight measurement vectors between producer and consumer.
    pub queue_depth: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            dmd_rate: 22_000.0,
            noise_sigma: 0.0,
            seed: 0,
            clock: ClockMode::Simulated,
            precision: Precision::F64,
            queue_depth: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub latency_ms: f64,
    #[serde(serialize_with = "metrics::serialize_opt_db")]
    pub psnr_vs_source: Option<f64>,
    pub deadline_missed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StreamReport {
    pub mode: ClockMode,
    pub precision: Precision,
    pub dmd_rate: f64,
    pub k: usize,
    pub frame_period_ms: f64,
    pub achieved_fps: f64,
    pub deadline_misses: usize,
    pub frames: Vec<FrameRecord>,
}

pub struct StreamOutcome {
    pub report: StreamReport,
    pub frames: Vec<Image>,
}

/// Deterministic moving-target frames: a soft disk following a Lissajous
/// path over a shallow background ramp.
pub fn synthetic_frames(width: usize, height: usize, count: usize) -> Result<Vec<Image>> {
    let r = width.min(height) as f64 / 6.0;
    (0..count)
        .map(|t| {
            let phase = t as f64 / 40.0;
            let cx = width as f64 * (0.5 + 0.3 * (2.0 * std::f64::consts::PI * phase).cos());
            let cy = height as f64 * (0.5 + 0.3 * (4.0 * std::f64::consts::PI * phase).sin());
            Image::from_fn(width, height, |x, y| {
                let background = 0.1 + 0.2 * (x as f64 / width as f64);
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                // smooth edge over two pixels
                let edge = ((r - d) / 2.0).clamp(0.0, 1.0);
                background + (0.9 - background) * edge
            })
        })
        .collect()
}

fn resolve_frames(source: FrameSource, width: usize, height: usize) -> Result<Vec<Image>> {
    let frames = match source {
        FrameSource::Images(images) => images
            .into_iter()
            .map(|img| img.resize_bilinear(width, height))
            .collect::<Result<Vec<_>>>()?,
        FrameSource::Synthetic { frames } => synthetic_frames(width, height, frames)?,
    };
    if frames.is_empty() {
        return Err(Error::invalid("frame source is empty"));
    }
    Ok(frames)
}

/// Drives the full stream: the producer emits one measurement vector per
/// frame period, the consumer reconstructs in arrival order. Deadline misses
/// (reconstruction latency above the frame period) are reported, never
/// fatal.
///
/// The detector readings are simulated before the clock starts: in the
/// physical system the camera produces them, so only reconstruction
/// competes with the frame period on the PC side.
pub fn run_stream(
    config: &StreamConfig,
    p: &ReconstructionMatrix,
    m: &MeasurementMatrix,
    source: FrameSource,
) -> Result<StreamOutcome> {
    if p.k() != m.k() || p.n() != m.n() {
        return Err(Error::invalid("reconstruction and measurement shapes do not match"));
    }
    let m_digest = m.digest();
    if p.provenance().m_digest != m_digest {
        return Err(Error::Provenance(format!(
            "reconstruction matrix was computed from a different measurement matrix (expected {}, got {})",
            &p.provenance().m_digest[..12.min(p.provenance().m_digest.len())],
            &m_digest[..12]
        )));
    }
    if !(config.dmd_rate > 0.0) {
        return Err(Error::invalid("dmd_rate must be positive"));
    }
    if config.queue_depth == 0 {
        return Err(Error::invalid("queue_depth must be at least 1"));
    }
    let scenes = resolve_frames(source, m.width(), m.height())?;
    let k = m.k();
    let period = k as f64 / config.dmd_rate;
    let period_ms = period * 1e3;

    // Per-precision working copies, prepared before the clock starts.
    let p32: Option<ReconstructionMatrixF32> = match config.precision {
        Precision::F32 => Some(p.to_f32()),
        Precision::F64 => None,
    };

    // Detector readings for every frame, simulated up front (the camera's
    // job, not the reconstruction PC's).
    let measurements: Vec<MeasurementVector> = match config.precision {
        Precision::F32 => {
            let m32: Vec<f32> = m.entries().iter().map(|&v| v as f32).collect();
            scenes
                .iter()
                .enumerate()
                .map(|(i, scene)| {
                    let scene32: Vec<f32> = scene.pixels().iter().map(|&v| v as f32).collect();
                    measure_f32(&m32, k, &scene32, config.noise_sigma, mix_seed(config.seed, i as u64), &m_digest)
                })
                .collect::<Result<_>>()?
        }
        Precision::F64 => scenes
            .iter()
            .enumerate()
            .map(|(i, scene)| measure(m, scene, config.noise_sigma, mix_seed(config.seed, i as u64)))
            .collect::<Result<_>>()?,
    };

    let mut records = Vec::with_capacity(scenes.len());
    let mut outputs = Vec::with_capacity(scenes.len());
    let mut producer_result: Result<()> = Ok(());
    let t0 = Instant::now();

    std::thread::scope(|scope| {
        let (tx, rx) = sync_channel::<(usize, MeasurementVector)>(config.queue_depth);
        let measurements = &measurements;
        let producer = scope.spawn(move || -> Result<()> {
            for (i, y) in measurements.iter().enumerate() {
                if config.clock == ClockMode::WallClock {
                    let target = t0 + Duration::from_secs_f64(i as f64 * period);
                    let now = Instant::now();
                    if target > now {
                        std::thread::sleep(target - now);
                    }
                }
                if tx.send((i, y.clone())).is_err() {
                    break; // consumer gone; nothing meaningful to report
                }
            }
            Ok(())
        });

        for (i, y) in rx.iter() {
            let started = Instant::now();
            let frame = match &p32 {
                Some(p32) => p32.apply(y.values()),
                None => reconstruct(p, &y),
            };
            let frame = match frame {
                Ok(f) => f,
                Err(e) => {
                    producer_result = Err(e);
                    break;
                }
            };
            let latency_ms = started.elapsed().as_secs_f64() * 1e3;
            let psnr = metrics::evaluate_reconstruction(&scenes[i], &frame, 1.0)
                .ok()
                .map(|q| q.psnr_db);
            records.push(FrameRecord {
                frame_index: i,
                latency_ms,
                psnr_vs_source: psnr,
                deadline_missed: latency_ms > period_ms,
            });
            outputs.push(frame);
        }

        match producer.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) => {
                if producer_result.is_ok() {
                    producer_result = Err(e);
                }
            }
            Err(_) => {
                producer_result = Err(Error::InternalConsistency("stream producer panicked".to_string()));
            }
        }
    });
    producer_result?;

    let n_frames = records.len();
    let achieved_fps = match config.clock {
        // logical schedule: exactly one frame per period
        ClockMode::Simulated => 1.0 / period,
        ClockMode::WallClock => n_frames as f64 / t0.elapsed().as_secs_f64().max(f64::MIN_POSITIVE),
    };
    let deadline_misses = records.iter().filter(|r| r.deadline_missed).count();
    Ok(StreamOutcome {
        report: StreamReport {
            mode: config.clock,
            precision: config.precision,
            dmd_rate: config.dmd_rate,
            k,
            frame_period_ms: period_ms,
            achieved_fps,
            deadline_misses,
            frames: records,
        },
        frames: outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{assemble_measurement_matrix, dct_basis_function, PatternSet, Protocol};

    fn complete_dct_matrix(w: usize, h: usize) -> MeasurementMatrix {
        let mut patterns = Vec::new();
        for v in 0..h {
            for u in 0..w {
                patterns.push(dct_basis_function(u, v, w, h).unwrap());
            }
        }
        let set = PatternSet::new(Protocol::Dct, patterns, false, "complete".to_string(), None).unwrap();
        assemble_measurement_matrix(&set, false).unwrap()
    }

    #[test]
    fn zero_scene_measures_zero() {
        let m = complete_dct_matrix(4, 4);
        let y = measure(&m, &Image::zeros(4, 4).unwrap(), 0.0, 0).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn basis_scene_measures_unit_vector() {
        let m = complete_dct_matrix(4, 4);
        let scene = dct_basis_function(2, 1, 4, 4).unwrap();
        let y = measure(&m, &scene, 0.0, 0).unwrap();
        // row index of (2,1) in the assembly order used above
        let idx = 4 + 2; // row of (u, v) = (2, 1)
        for (i, &v) in y.values().iter().enumerate() {
            let expected = if i == idx { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "row {i}: {v}");
        }
    }

    #[test]
    fn hand_written_matrix_brute_force() {
        let scene = Image::new(4, 4, (1..=16).map(|v| v as f64 * 0.1).collect()).unwrap();
        let mut entries = vec![0.0; 2 * 16];
        for (i, e) in entries.iter_mut().enumerate() {
            *e = match i {
                0..=15 => ((i % 3) as f64) - 1.0,
                _ => 0.5 * ((i % 5) as f64),
            };
        }
        let m = MeasurementMatrix::new(4, 4, entries.clone(), "hand".to_string()).unwrap();
        let y = measure(&m, &scene, 0.0, 0).unwrap();
        for r in 0..2 {
            let mut acc = 0.0;
            for c in 0..16 {
                acc += entries[r * 16 + c] * scene.pixels()[c];
            }
            assert!((y.values()[r] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_is_deterministic_and_noise_seeded() {
        let m = complete_dct_matrix(4, 4);
        let scene = Image::from_fn(4, 4, |x, y| (x + y) as f64 / 8.0).unwrap();
        let a = measure(&m, &scene, 0.05, 7).unwrap();
        let b = measure(&m, &scene, 0.05, 7).unwrap();
        assert_eq!(a.values(), b.values());
        let c = measure(&m, &scene, 0.05, 8).unwrap();
        assert_ne!(a.values(), c.values());
        let clean = measure(&m, &scene, 0.0, 7).unwrap();
        assert_ne!(a.values(), clean.values());
    }

    #[test]
    fn measure_rejects_resolution_mismatch() {
        let m = complete_dct_matrix(4, 4);
        assert!(measure(&m, &Image::zeros(8, 8).unwrap(), 0.0, 0).is_err());
    }

    // -----------------------------------------------------------------
    // stream pipeline
    // -----------------------------------------------------------------

    use crate::reconstruction::precompute_pinv;

    fn stream_fixture(w: usize, h: usize) -> (ReconstructionMatrix, MeasurementMatrix) {
        let m = complete_dct_matrix(w, h);
        let (p, _) = precompute_pinv(&m).unwrap();
        (p, m)
    }

    #[test]
    fn static_scene_reconstructions_are_identical() {
        let (p, m) = stream_fixture(8, 8);
        let scene = Image::from_fn(8, 8, |x, y| ((x + 2 * y) % 5) as f64 / 5.0).unwrap();
        let config = StreamConfig::default();
        let out = run_stream(&config, &p, &m, FrameSource::Images(vec![scene; 10])).unwrap();
        assert_eq!(out.frames.len(), 10);
        for f in &out.frames[1..] {
            assert_eq!(f.pixels(), out.frames[0].pixels());
        }
        assert_eq!(out.report.deadline_misses, 0);
    }

    #[test]
    fn simulated_rate_is_dmd_rate_over_k() {
        let (p, m) = stream_fixture(8, 8);
        let config = StreamConfig { dmd_rate: 22_000.0, ..StreamConfig::default() };
        let out = run_stream(&config, &p, &m, FrameSource::Synthetic { frames: 5 }).unwrap();
        let expected = 22_000.0 / m.k() as f64;
        let rel = (out.report.achieved_fps - expected).abs() / expected;
        assert!(rel < 1e-3, "rate {} vs {expected}", out.report.achieved_fps);
        assert!((out.report.frame_period_ms - m.k() as f64 / 22.0).abs() < 1e-9);
    }

    #[test]
    fn frames_stay_in_order_and_match_sources() {
        let (p, m) = stream_fixture(8, 8);
        let scenes: Vec<Image> = (0..6)
            .map(|i| Image::from_fn(8, 8, |x, y| ((x + y + i) % 7) as f64 / 7.0).unwrap())
            .collect();
        let out = run_stream(
            &StreamConfig::default(),
            &p,
            &m,
            FrameSource::Images(scenes.clone()),
        )
        .unwrap();
        for (i, frame) in out.frames.iter().enumerate() {
            assert_eq!(out.report.frames[i].frame_index, i);
            let err: f64 = frame
                .pixels()
                .iter()
                .zip(scenes[i].pixels())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err / scenes[i].norm() < 1e-10, "frame {i} does not match its source");
            assert!(out.report.frames[i].psnr_vs_source.unwrap().is_infinite());
        }
    }

    #[test]
    fn f32_stream_recovers_sources_to_single_precision() {
        let (p, m) = stream_fixture(16, 16);
        let scenes: Vec<Image> = (0..3)
            .map(|i| Image::from_fn(16, 16, |x, y| ((x * 2 + y + i) % 9) as f64 / 9.0).unwrap())
            .collect();
        let config = StreamConfig { precision: Precision::F32, ..StreamConfig::default() };
        let out = run_stream(&config, &p, &m, FrameSource::Images(scenes.clone())).unwrap();
        for (frame, scene) in out.frames.iter().zip(&scenes) {
            let err: f64 = frame
                .pixels()
                .iter()
                .zip(scene.pixels())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err / scene.norm() < 1e-6, "f32 error {}", err / scene.norm());
        }
    }

    #[test]
    fn stream_rejects_foreign_reconstruction_matrix() {
        let (p, _) = stream_fixture(8, 8);
        let other = {
            let mut patterns = Vec::new();
            for v in 0..8 {
                for u in 0..8 {
                    patterns.push(dct_basis_function(u, v, 8, 8).unwrap());
                }
            }
            patterns.reverse();
            let set = PatternSet::new(Protocol::Dct, patterns, false, "r".to_string(), None).unwrap();
            assemble_measurement_matrix(&set, false).unwrap()
        };
        let err = run_stream(
            &StreamConfig::default(),
            &p,
            &other,
            FrameSource::Synthetic { frames: 1 },
        );
        assert!(matches!(err, Err(Error::Provenance(_))));
    }

    #[test]
    fn empty_source_is_rejected() {
        let (p, m) = stream_fixture(8, 8);
        let err = run_stream(&StreamConfig::default(), &p, &m, FrameSource::Images(vec![]));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn stream_is_deterministic_with_noise() {
        let (p, m) = stream_fixture(8, 8);
        let config = StreamConfig { noise_sigma: 0.02, seed: 9, ..StreamConfig::default() };
        let a = run_stream(&config, &p, &m, FrameSource::Synthetic { frames: 4 }).unwrap();
        let b = run_stream(&config, &p, &m, FrameSource::Synthetic { frames: 4 }).unwrap();
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert_eq!(x.pixels(), y.pixels());
        }
    }
}
