//! Sampling-pattern generation, database-driven selection, binarization and
//! measurement-matrix assembly.

pub mod dct;
pub mod morlet;
pub mod select;
pub mod walsh;

pub use dct::{dct_basis_function, dct2_coefficients};
pub use morlet::{morlet_noise_pattern, morlet_wavelet, MorletParams};
pub use select::{select_patterns, sigma_schedule};
pub use walsh::{walsh_hadamard_function, wht2_coefficients};

use crate::digest::DigestBuilder;
use crate::error::{Error, Result};
use crate::image::Image;
use std::fmt;
use std::str::FromStr;

/// Sampling protocol of a pattern set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Dct,
    WalshHadamard,
    MorletNoise,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Dct => "dct",
            Protocol::WalshHadamard => "walsh-hadamard",
            Protocol::MorletNoise => "morlet-noise",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dct" => Ok(Protocol::Dct),
            "walsh-hadamard" | "walsh" | "hadamard" => Ok(Protocol::WalshHadamard),
            "morlet-noise" | "morlet" => Ok(Protocol::MorletNoise),
            other => Err(Error::invalid(format!(
                "unknown protocol '{other}' (expected dct, walsh-hadamard or morlet-noise)"
            ))),
        }
    }
}

/// An ordered set of sampling patterns. Order is the selection ranking,
/// most significant pattern first.
#[derive(Debug, Clone)]
pub struct PatternSet {
    protocol: Protocol,
    patterns: Vec<Image>,
    binarized: bool,
    selection_meta: String,
    seed: Option<u64>,
}

impl PatternSet {
    pub fn new(
        protocol: Protocol,
        patterns: Vec<Image>,
        binarized: bool,
        selection_meta: String,
        seed: Option<u64>,
    ) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::invalid("pattern set must contain at least one pattern"));
        }
        let (w, h) = (patterns[0].width(), patterns[0].height());
        if !patterns.iter().all(|p| p.width() == w && p.height() == h) {
            return Err(Error::invalid("all patterns must share one resolution"));
        }
        if binarized {
            let ok = patterns
                .iter()
                .all(|p| p.pixels().iter().all(|&v| v == 1.0 || v == -1.0));
            if !ok {
                return Err(Error::invalid(
                    "binarized pattern set must contain only +1/-1 pixels",
                ));
            }
        }
        Ok(PatternSet { protocol, patterns, binarized, selection_meta, seed })
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn patterns(&self) -> &[Image] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn binarized(&self) -> bool {
        self.binarized
    }

    pub fn selection_meta(&self) -> &str {
        &self.selection_meta
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn width(&self) -> usize {
        self.patterns[0].width()
    }

    pub fn height(&self) -> usize {
        self.patterns[0].height()
    }

    /// Content digest covering protocol, flags and every pixel.
    pub fn digest(&self) -> String {
        let mut d = DigestBuilder::new()
            .str(self.protocol.as_str())
            .u64(self.width() as u64)
            .u64(self.height() as u64)
            .u64(self.binarized as u64)
            .u64(self.seed.unwrap_or(0));
        for p in &self.patterns {
            d = d.f64s(p.pixels());
        }
        d.hex()
    }

    /// One-line description used in provenance strings.
    pub fn descriptor(&self) -> String {
        format!(
            "{} {}x{} k={} binarized={} [{}]",
            self.protocol,
            self.width(),
            self.height(),
            self.len(),
            self.binarized,
            self.selection_meta
        )
    }
}

/// Thresholds every pattern at its own mean: pixels >= mean map to +1,
/// the rest to -1. The +-1 convention models differential detection, where
/// the measured value is the difference between on- and off-mirror light.
pub fn binarize(set: &PatternSet) -> Result<PatternSet> {
    if set.binarized() {
        return Err(Error::invalid("pattern set is already binarized"));
    }
    let patterns = set
        .patterns()
        .iter()
        .map(|p| {
            let mean = p.mean();
            p.map(|v| if v >= mean { 1.0 } else { -1.0 })
        })
        .collect();
    PatternSet::new(
        set.protocol(),
        patterns,
        true,
        format!("{}; binarized at per-pattern mean", set.selection_meta()),
        set.seed(),
    )
}

/// k x n measurement matrix whose rows are flattened sampling patterns.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    k: usize,
    n: usize,
    width: usize,
    height: usize,
    entries: Vec<f64>,
    provenance: String,
}

impl MeasurementMatrix {
    pub fn new(
        width: usize,
        height: usize,
        entries: Vec<f64>,
        provenance: String,
    ) -> Result<Self> {
        let n = width * height;
        if n == 0 {
            return Err(Error::invalid("measurement matrix resolution must be positive"));
        }
        if entries.is_empty() || entries.len() % n != 0 {
            return Err(Error::invalid(format!(
                "entry count {} is not a positive multiple of n = {n}",
                entries.len()
            )));
        }
        if !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("measurement matrix contains non-finite entries"));
        }
        let k = entries.len() / n;
        Ok(MeasurementMatrix { k, n, width, height, entries, provenance })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Digest over dimensions and entries; binds reconstruction matrices to
    /// the measurement matrix they invert.
    pub fn digest(&self) -> String {
        DigestBuilder::new()
            .u64(self.k as u64)
            .u64(self.n as u64)
            .u64(self.width as u64)
            .u64(self.height as u64)
            .f64s(&self.entries)
            .hex()
    }

    /// Row i reshaped to the pattern resolution.
    pub fn row_image(&self, i: usize) -> Result<Image> {
        Image::new(self.width, self.height, self.row(i).to_vec())
    }
}

/// Stacks a pattern set into a measurement matrix, optionally prepending a
/// white (all-ones) synchronization row.
pub fn assemble_measurement_matrix(set: &PatternSet, include_white: bool) -> Result<MeasurementMatrix> {
    if set.is_empty() {
        return Err(Error::invalid("cannot assemble a measurement matrix from an empty set"));
    }
    let n = set.width() * set.height();
    let rows = set.len() + include_white as usize;
    let mut entries = Vec::with_capacity(rows * n);
    if include_white {
        entries.extend(std::iter::repeat_n(1.0, n));
    }
    for p in set.patterns() {
        entries.extend_from_slice(p.pixels());
    }
    MeasurementMatrix::new(
        set.width(),
        set.height(),
        entries,
        format!("{}; white={}", set.descriptor(), include_white),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set() -> PatternSet {
        let patterns = (0..3)
            .map(|i| Image::from_fn(4, 4, |x, y| (x + y * 4 + i) as f64 * 0.1).unwrap())
            .collect();
        PatternSet::new(Protocol::Dct, patterns, false, "test".to_string(), None).unwrap()
    }

    #[test]
    fn protocol_parsing() {
        assert_eq!("dct".parse::<Protocol>().unwrap(), Protocol::Dct);
        assert_eq!("walsh".parse::<Protocol>().unwrap(), Protocol::WalshHadamard);
        assert_eq!("morlet-noise".parse::<Protocol>().unwrap(), Protocol::MorletNoise);
        assert!("fourier".parse::<Protocol>().is_err());
    }

    #[test]
    fn set_rejects_mixed_resolutions() {
        let patterns = vec![
            Image::zeros(4, 4).unwrap(),
            Image::zeros(8, 8).unwrap(),
        ];
        assert!(PatternSet::new(Protocol::Dct, patterns, false, String::new(), None).is_err());
    }

    #[test]
    fn binarize_constant_pattern_is_all_plus_one() {
        // Tie rule: values equal to the mean map to +1.
        let set = PatternSet::new(
            Protocol::Dct,
            vec![Image::from_fn(4, 4, |_, _| 0.3).unwrap()],
            false,
            String::new(),
            None,
        )
        .unwrap();
        let b = binarize(&set).unwrap();
        assert!(b.binarized());
        assert!(b.patterns()[0].pixels().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn binarize_dct_follows_cosine_sign() {
        let f = dct_basis_function(1, 0, 8, 8).unwrap();
        let set =
            PatternSet::new(Protocol::Dct, vec![f.clone()], false, String::new(), None).unwrap();
        let b = binarize(&set).unwrap();
        for (orig, bin) in f.pixels().iter().zip(b.patterns()[0].pixels()) {
            let expected = if *orig >= 0.0 { 1.0 } else { -1.0 };
            assert_eq!(*bin, expected);
        }
    }

    #[test]
    fn binarize_rejects_already_binarized() {
        let set = small_set();
        let once = binarize(&set).unwrap();
        assert!(binarize(&once).is_err());
    }

    #[test]
    fn rethresholding_zero_mean_sign_pattern_is_identity() {
        // Idempotence in effect: a +-1 pattern with zero mean re-thresholds
        // to itself (checked by constructing an unflagged set).
        let p = Image::from_fn(4, 4, |x, _| if x % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let set =
            PatternSet::new(Protocol::Dct, vec![p.clone()], false, String::new(), None).unwrap();
        let b = binarize(&set).unwrap();
        assert_eq!(b.patterns()[0].pixels(), p.pixels());
    }

    #[test]
    fn assemble_shapes_and_rows() {
        let set = small_set();
        let m = assemble_measurement_matrix(&set, false).unwrap();
        assert_eq!(m.k(), 3);
        assert_eq!(m.n(), 16);
        assert_eq!(m.row(0), set.patterns()[0].pixels());
    }

    #[test]
    fn assemble_with_white_prepends_ones() {
        let patterns = vec![
            Image::from_fn(4, 4, |x, _| x as f64).unwrap(),
            Image::from_fn(4, 4, |_, y| y as f64).unwrap(),
        ];
        let set = PatternSet::new(Protocol::Dct, patterns, false, String::new(), None).unwrap();
        let m = assemble_measurement_matrix(&set, true).unwrap();
        assert_eq!(m.k(), 3);
        assert!(m.row(0).iter().all(|&v| v == 1.0));
        assert_eq!(m.row(1), set.patterns()[0].pixels());
    }

    #[test]
    fn complete_dct_set_is_orthonormal() {
        let mut patterns = Vec::new();
        for v in 0..8 {
            for u in 0..8 {
                patterns.push(dct_basis_function(u, v, 8, 8).unwrap());
            }
        }
        let set = PatternSet::new(Protocol::Dct, patterns, false, String::new(), None).unwrap();
        let m = assemble_measurement_matrix(&set, false).unwrap();
        for i in 0..64 {
            for j in i..64 {
                let dot: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| a * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12, "({i},{j}): {dot}");
            }
        }
    }

    #[test]
    fn digest_tracks_content() {
        let set = small_set();
        let d1 = set.digest();
        let d2 = small_set().digest();
        assert_eq!(d1, d2);
        let b = binarize(&set).unwrap();
        assert_ne!(d1, b.digest());
    }
}
