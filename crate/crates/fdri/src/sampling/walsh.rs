//! Sequency-ordered Walsh-Hadamard functions.
//!
//! The 1D Walsh function of sequency s over N = 2^m points is the natural
//! Hadamard row at index bit-reverse(gray(s)); it has exactly s sign changes.
//! 2D functions are separable products, indexed by sequency pairs in
//! ascending (s_x + s_y, s_x) order.

use crate::error::{Error, Result};
use crate::image::Image;

fn check_pow2(width: usize, height: usize) -> Result<()> {
    if !width.is_power_of_two() || !height.is_power_of_two() {
        return Err(Error::invalid(format!(
            "walsh-hadamard sampling requires power-of-two resolution, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Sign (+1/-1) of the sequency-s Walsh function at position j, length 2^m.
pub fn walsh_sign(s: usize, j: usize, m: u32) -> f64 {
    let gray = s ^ (s >> 1);
    let r = reverse_bits(gray, m);
    if (r & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn reverse_bits(v: usize, m: u32) -> usize {
    let mut out = 0;
    for bit in 0..m {
        if v & (1 << bit) != 0 {
            out |= 1 << (m - 1 - bit);
        }
    }
    out
}

/// Sequency pairs (s_x, s_y) for a width x height grid, in the canonical
/// ranking order: ascending sequency sum, then ascending s_x.
pub fn sequency_pairs(width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(width * height);
    for sy in 0..height {
        for sx in 0..width {
            pairs.push((sx, sy));
        }
    }
    pairs.sort_by_key(|&(sx, sy)| (sx + sy, sx));
    pairs
}

/// 2D Walsh-Hadamard function for flat index s under the canonical pair
/// order; values are +-1/sqrt(n).
pub fn walsh_hadamard_function(s: usize, width: usize, height: usize) -> Result<Image> {
    check_pow2(width, height)?;
    let n = width * height;
    if s >= n {
        return Err(Error::invalid(format!("walsh index {s} out of range for {n} functions")));
    }
    let (sx, sy) = sequency_pairs(width, height)[s];
    walsh_pair_function(sx, sy, width, height)
}

/// 2D Walsh-Hadamard function for an explicit sequency pair.
pub fn walsh_pair_function(sx: usize, sy: usize, width: usize, height: usize) -> Result<Image> {
    check_pow2(width, height)?;
    if sx >= width || sy >= height {
        return Err(Error::invalid(format!(
            "sequency pair ({sx},{sy}) out of range for {width}x{height}"
        )));
    }
    let mx = width.trailing_zeros();
    let my = height.trailing_zeros();
    let scale = 1.0 / ((width * height) as f64).sqrt();
    Image::from_fn(width, height, |x, y| scale * walsh_sign(sx, x, mx) * walsh_sign(sy, y, my))
}

/// Full 2D Walsh-Hadamard transform; coefficient for pair (s_x, s_y) is
/// stored at s_y*width + s_x.
pub fn wht2_coefficients(image: &Image) -> Result<Vec<f64>> {
    let w = image.width();
    let h = image.height();
    check_pow2(w, h)?;
    let mx = w.trailing_zeros();
    let my = h.trailing_zeros();
    let sw = 1.0 / (w as f64).sqrt();
    let sh = 1.0 / (h as f64).sqrt();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for sx in 0..w {
            let mut acc = 0.0;
            for x in 0..w {
                acc += image.get(x, y) * walsh_sign(sx, x, mx);
            }
            tmp[y * w + sx] = acc * sw;
        }
    }
    let mut out = vec![0.0; w * h];
    for sy in 0..h {
        for sx in 0..w {
            let mut acc = 0.0;
            for y in 0..h {
                acc += tmp[y * w + sx] * walsh_sign(sy, y, my);
            }
            out[sy * w + sx] = acc * sh;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sequency_is_constant() {
        let f = walsh_hadamard_function(0, 8, 8).unwrap();
        for &p in f.pixels() {
            assert!((p - 1.0 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_changes_match_sequency() {
        // 1D sequency-ordered row s has exactly s sign changes (N = 8).
        let m = 3;
        for s in 0..8 {
            let row: Vec<f64> = (0..8).map(|j| walsh_sign(s, j, m)).collect();
            let changes = row.windows(2).filter(|w| w[0] != w[1]).count();
            assert_eq!(changes, s, "sequency {s}");
        }
    }

    #[test]
    fn distinct_functions_orthogonal_exactly() {
        let n = 64;
        for s in 0..n {
            let a = walsh_hadamard_function(s, 8, 8).unwrap();
            for t in (s + 1)..n {
                let b = walsh_hadamard_function(t, 8, 8).unwrap();
                let dot: f64 = a.pixels().iter().zip(b.pixels()).map(|(x, y)| x * y).sum();
                assert_eq!(dot, 0.0, "pair ({s},{t})");
            }
        }
    }

    #[test]
    fn values_are_plus_minus_inv_sqrt_n() {
        let f = walsh_hadamard_function(13, 8, 8).unwrap();
        for &p in f.pixels() {
            assert!((p.abs() - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_power_of_two_and_range() {
        assert!(walsh_hadamard_function(0, 63, 64).is_err());
        assert!(walsh_hadamard_function(0, 64, 63).is_err());
        assert!(walsh_hadamard_function(64, 8, 8).is_err());
    }

    #[test]
    fn pair_order_starts_at_dc_and_covers_all() {
        let pairs = sequency_pairs(4, 4);
        assert_eq!(pairs[0], (0, 0));
        assert_eq!(pairs.len(), 16);
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 16);
        // sums are non-decreasing
        for w in pairs.windows(2) {
            assert!(w[0].0 + w[0].1 <= w[1].0 + w[1].1);
        }
    }

    #[test]
    fn transform_recovers_basis_coefficient() {
        let img = walsh_pair_function(3, 5, 8, 8).unwrap();
        let coeffs = wht2_coefficients(&img).unwrap();
        for sy in 0..8 {
            for sx in 0..8 {
                let expected = if (sx, sy) == (3, 5) { 1.0 } else { 0.0 };
                assert!((coeffs[sy * 8 + sx] - expected).abs() < 1e-12);
            }
        }
    }
}
