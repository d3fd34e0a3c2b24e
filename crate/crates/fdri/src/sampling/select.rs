//! Database-driven selection of compressive sampling subsets.
//!
//! For the orthogonal protocols every database image is transformed and the
//! basis functions are ranked by their mean absolute coefficient, so the
//! selected subset concentrates on the spectral content real images actually
//! occupy. Morlet-noise sampling instead estimates the significant radial
//! frequency band of the database and spreads wavelet parameters over it.

use crate::digest::DigestBuilder;
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::image::Image;
use crate::sampling::{dct, morlet, walsh, PatternSet, Protocol};
use crate::spectral::freq_grid;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Morlet parameters from the linear frequency-to-envelope schedule:
///
/// sigma = sigma_min + (sigma_max - sigma_min) (omega_max - omega)/(omega_max - omega_min)
/// n_p   = 2 sigma omega
///
/// omega here is the n_p/(2 sigma) ratio; in radians/pixel the modulation
/// frequency is pi times larger.
pub fn sigma_schedule(
    omega: f64,
    sigma_min: f64,
    sigma_max: f64,
    omega_min: f64,
    omega_max: f64,
    theta: f64,
) -> Result<morlet::MorletParams> {
    if !(sigma_min < sigma_max) {
        return Err(Error::invalid(format!(
            "sigma range must satisfy sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]"
        )));
    }
    if !(omega_min < omega_max) {
        return Err(Error::invalid(format!(
            "omega range must be nondegenerate, got [{omega_min}, {omega_max}]"
        )));
    }
    if !(omega_min <= omega && omega <= omega_max) {
        return Err(Error::invalid(format!(
            "omega {omega} outside schedule range [{omega_min}, {omega_max}]"
        )));
    }
    let sigma = sigma_min + (sigma_max - sigma_min) * (omega_max - omega) / (omega_max - omega_min);
    let n_p = 2.0 * sigma * omega;
    morlet::MorletParams::new(sigma, n_p, theta)
}

/// Number of modulation orientations cycled over [0, pi).
const N_THETA: usize = 4;
/// Smallest Gaussian envelope width of the schedule, in pixels.
const SIGMA_MIN: f64 = 2.0;

fn pattern_seed(seed: u64, index: usize) -> u64 {
    crate::digest::mix_seed(seed, index as u64)
}

struct Database {
    images: Vec<Image>,
    digest: String,
}

fn prepare_database(image_db: &[Image], width: usize, height: usize) -> Result<Database> {
    let images: Vec<Image> = image_db
        .iter()
        .map(|img| img.resize_bilinear(width, height))
        .collect::<Result<_>>()?;
    let mut d = DigestBuilder::new().u64(images.len() as u64);
    for img in &images {
        d = d.f64s(img.pixels());
    }
    Ok(Database { digest: d.hex(), images })
}

/// Ranks 2D transform indices by mean absolute coefficient over the
/// database, descending; ties (and the empty-database fallback, where every
/// score is zero) resolve to ascending (index sum, first index).
fn rank_indices(
    scores: Vec<f64>,
    width: usize,
    index_of: impl Fn(usize) -> (usize, usize),
) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then_with(|| {
                let (ua, va) = index_of(a);
                let (ub, vb) = index_of(b);
                (ua + va, ua).cmp(&(ub + vb, ub))
            })
    });
    let _ = width;
    order.into_iter().map(index_of).collect()
}

fn select_orthogonal(
    protocol: Protocol,
    k: usize,
    db: &Database,
    width: usize,
    height: usize,
) -> Result<(Vec<Image>, String)> {
    let n = width * height;
    if k > n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {n} functions of the complete {protocol} basis"
        )));
    }
    let mut scores = vec![0.0; n];
    for img in &db.images {
        let coeffs = match protocol {
            Protocol::Dct => dct::dct2_coefficients(img),
            Protocol::WalshHadamard => walsh::wht2_coefficients(img)?,
            Protocol::MorletNoise => unreachable!(),
        };
        for (s, c) in scores.iter_mut().zip(&coeffs) {
            *s += c.abs();
        }
    }
    if !db.images.is_empty() {
        let inv = 1.0 / db.images.len() as f64;
        for s in scores.iter_mut() {
            *s *= inv;
        }
    } else if protocol == Protocol::WalshHadamard {
        // surface the resolution error even without database analysis
        walsh::wht2_coefficients(&Image::zeros(width, height)?)?;
    }

    let ranked = rank_indices(scores, width, |i| (i % width, i / width));
    let patterns: Result<Vec<Image>> = ranked[..k]
        .par_iter()
        .map(|&(u, v)| match protocol {
            Protocol::Dct => dct::dct_basis_function(u, v, width, height),
            Protocol::WalshHadamard => walsh::walsh_pair_function(u, v, width, height),
            Protocol::MorletNoise => unreachable!(),
        })
        .collect();
    let meta = if db.images.is_empty() {
        "deterministic low-frequency order (no database); ties (sum, first) ascending".to_string()
    } else {
        format!(
            "ranked by mean |coefficient| over {} images (db {})",
            db.images.len(),
            &db.digest[..12]
        )
    };
    Ok((patterns?, meta))
}

/// Radially averaged magnitude profile of the database's mean DFT spectrum.
/// Returns the significant band [omega_lo, omega_hi] in radians/pixel, where
/// significant means at least 1% of the profile peak (DC excluded).
fn significant_band(db: &Database, width: usize, height: usize) -> Result<Option<(f64, f64)>> {
    if db.images.is_empty() {
        return Ok(None);
    }
    let n = width * height;
    let plan = Fft2::new(width, height);
    let mut mean_mag = vec![0.0; n];
    for img in &db.images {
        let spec = plan.forward_real(img.pixels());
        for (m, s) in mean_mag.iter_mut().zip(&spec) {
            *m += s.norm();
        }
    }
    let grid = freq_grid(width, height)?;
    let d_omega = 2.0 * PI / width.max(height) as f64;
    let n_bands = (PI * 2.0f64.sqrt() / d_omega).ceil() as usize + 1;
    let mut band_sum = vec![0.0; n_bands];
    let mut band_count = vec![0usize; n_bands];
    for (i, &(wx, wy)) in grid.omegas().iter().enumerate() {
        let r = (wx * wx + wy * wy).sqrt();
        if r == 0.0 {
            continue; // DC carries brightness, not structure
        }
        let b = ((r / d_omega).round() as usize).min(n_bands - 1);
        band_sum[b] += mean_mag[i];
        band_count[b] += 1;
    }
    let profile: Vec<f64> = band_sum
        .iter()
        .zip(&band_count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let significant: Vec<usize> = (1..n_bands)
        .filter(|&b| band_count[b] > 0 && profile[b] >= 0.01 * peak)
        .collect();
    match (significant.first(), significant.last()) {
        (Some(&lo), Some(&hi)) => {
            let w_lo = lo as f64 * d_omega;
            let w_hi = (hi as f64 * d_omega).min(PI);
            Ok(Some((w_lo, w_hi.max(w_lo + d_omega).min(PI))))
        }
        _ => Ok(None),
    }
}

fn select_morlet(
    k: usize,
    db: &Database,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<(Vec<Image>, String)> {
    let d_omega = 2.0 * PI / width.max(height) as f64;
    let (band, band_desc) = match significant_band(db, width, height)? {
        Some(band) => (band, format!("db band ({} images, db {})", db.images.len(), &db.digest[..12])),
        None => ((d_omega, PI / 2.0), "default band (no database)".to_string()),
    };
    // Schedule works in n_p/(2 sigma) units: radians/pixel divided by pi.
    let omega_lo = band.0 / PI;
    let omega_hi = band.1 / PI;
    let sigma_max = (width.min(height) as f64 / 4.0).max(SIGMA_MIN + 1.0);

    let n_cells = k.div_ceil(N_THETA);
    let patterns: Result<Vec<Image>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let cell = i / N_THETA;
            let t = if n_cells > 1 { cell as f64 / (n_cells - 1) as f64 } else { 0.0 };
            let omega = omega_lo + (omega_hi - omega_lo) * t;
            let theta = (i % N_THETA) as f64 * PI / N_THETA as f64;
            let params = sigma_schedule(omega, SIGMA_MIN, sigma_max, omega_lo, omega_hi, theta)?;
            morlet::morlet_noise_pattern(&params, pattern_seed(seed, i), width, height)
        })
        .collect();
    let meta = format!(
        "{band_desc}; omega [{:.4}, {:.4}] rad/px, sigma [{SIGMA_MIN}, {sigma_max}], {N_THETA} orientations, seed {seed}",
        band.0, band.1
    );
    Ok((patterns?, meta))
}

/// Selects a ranked compressive pattern set for the given protocol.
///
/// Database images are resized to the target resolution before analysis.
/// With an empty database the orthogonal protocols fall back to a
/// deterministic low-frequency ranking and Morlet sampling to a default
/// frequency band. The result is byte-stable in (protocol, k, database
/// content, resolution, seed).
pub fn select_patterns(
    protocol: Protocol,
    k: usize,
    image_db: &[Image],
    width: usize,
    height: usize,
    seed: u64,
) -> Result<PatternSet> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("pattern resolution must be positive"));
    }
    let db = prepare_database(image_db, width, height)?;
    let (patterns, meta, set_seed) = match protocol {
        Protocol::Dct | Protocol::WalshHadamard => {
            let (p, m) = select_orthogonal(protocol, k, &db, width, height)?;
            (p, m, None)
        }
        Protocol::MorletNoise => {
            let (p, m) = select_morlet(k, &db, width, height, seed)?;
            (p, m, Some(seed))
        }
    };
    PatternSet::new(protocol, patterns, false, meta, set_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_database_ranks_dc_first() {
        let db = vec![Image::from_fn(8, 8, |_, _| 0.5).unwrap()];
        let set = select_patterns(Protocol::Dct, 4, &db, 8, 8, 0).unwrap();
        // rank 1 = (0,0): the constant basis function
        let p0 = &set.patterns()[0];
        assert!(p0.pixels().iter().all(|&v| (v - 0.125).abs() < 1e-12));
    }

    #[test]
    fn single_basis_image_ranks_itself_first() {
        let img = dct::dct_basis_function(3, 2, 16, 16).unwrap();
        let set = select_patterns(Protocol::Dct, 2, &[img.clone()], 16, 16, 0).unwrap();
        for (a, b) in set.patterns()[0].pixels().iter().zip(img.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_database_dct_is_zigzag() {
        let set = select_patterns(Protocol::Dct, 6, &[], 8, 8, 0).unwrap();
        // antidiagonal order: (0,0), (0,1), (1,0), (0,2), (1,1), (2,0)
        let expected = [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)];
        for (i, &(u, v)) in expected.iter().enumerate() {
            let f = dct::dct_basis_function(u, v, 8, 8).unwrap();
            for (a, b) in set.patterns()[i].pixels().iter().zip(f.pixels()) {
                assert!((a - b).abs() < 1e-12, "pattern {i} is not ({u},{v})");
            }
        }
    }

    #[test]
    fn empty_database_walsh_is_sequency_order() {
        let set = select_patterns(Protocol::WalshHadamard, 3, &[], 8, 8, 0).unwrap();
        for (i, &(sx, sy)) in [(0, 0), (0, 1), (1, 0)].iter().enumerate() {
            let f = walsh::walsh_pair_function(sx, sy, 8, 8).unwrap();
            assert_eq!(set.patterns()[i].pixels(), f.pixels(), "pattern {i} is not ({sx},{sy})");
        }
    }

    #[test]
    fn selection_is_deterministic() {
        let db = vec![
            Image::from_fn(16, 16, |x, y| ((x * 3 + y) as f64 * 0.71).sin().abs()).unwrap(),
            Image::from_fn(16, 16, |x, y| ((x + y * 2) as f64 * 0.31).cos().abs()).unwrap(),
        ];
        for protocol in [Protocol::Dct, Protocol::WalshHadamard, Protocol::MorletNoise] {
            let a = select_patterns(protocol, 7, &db, 16, 16, 42).unwrap();
            let b = select_patterns(protocol, 7, &db, 16, 16, 42).unwrap();
            assert_eq!(a.digest(), b.digest(), "{protocol}");
        }
    }

    #[test]
    fn morlet_seed_changes_patterns() {
        let a = select_patterns(Protocol::MorletNoise, 3, &[], 16, 16, 1).unwrap();
        let b = select_patterns(Protocol::MorletNoise, 3, &[], 16, 16, 2).unwrap();
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn oversized_k_rejected_for_orthogonal_only() {
        assert!(select_patterns(Protocol::Dct, 65, &[], 8, 8, 0).is_err());
        assert!(select_patterns(Protocol::WalshHadamard, 65, &[], 8, 8, 0).is_err());
        assert!(select_patterns(Protocol::MorletNoise, 65, &[], 8, 8, 0).is_ok());
    }

    #[test]
    fn walsh_rejects_non_power_of_two_even_without_db() {
        assert!(select_patterns(Protocol::WalshHadamard, 4, &[], 12, 8, 0).is_err());
    }

    #[test]
    fn schedule_endpoints() {
        let lo = sigma_schedule(0.1, 2.0, 16.0, 0.1, 0.9, 0.0).unwrap();
        assert!((lo.sigma() - 16.0).abs() < 1e-12);
        let hi = sigma_schedule(0.9, 2.0, 16.0, 0.1, 0.9, 0.0).unwrap();
        assert!((hi.sigma() - 2.0).abs() < 1e-12);
        let mid = sigma_schedule(0.5, 2.0, 16.0, 0.1, 0.9, 0.0).unwrap();
        assert!((mid.sigma() - 9.0).abs() < 1e-12);
        assert!((mid.n_p() - 2.0 * 9.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn schedule_rejects_out_of_range_omega() {
        assert!(sigma_schedule(0.05, 2.0, 16.0, 0.1, 0.9, 0.0).is_err());
        assert!(sigma_schedule(0.95, 2.0, 16.0, 0.1, 0.9, 0.0).is_err());
        assert!(sigma_schedule(0.5, 16.0, 2.0, 0.1, 0.9, 0.0).is_err());
    }
}
