//! Orthonormal 2D DCT-II basis functions and the forward transform used to
//! rank them against an image database.

use crate::error::{Error, Result};
use crate::image::Image;
use std::f64::consts::PI;

/// 1D orthonormal DCT-II factor: c(u) * cos(pi * (2x+1) * u / (2N)) with
/// c(0) = sqrt(1/N) and c(u>0) = sqrt(2/N).
pub fn dct1d(u: usize, x: usize, n: usize) -> f64 {
    let c = if u == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    c * (PI * (2.0 * x as f64 + 1.0) * u as f64 / (2.0 * n as f64)).cos()
}

/// Separable orthonormal basis function (u along x, v along y), unit norm.
pub fn dct_basis_function(u: usize, v: usize, width: usize, height: usize) -> Result<Image> {
    if u >= width || v >= height {
        return Err(Error::invalid(format!(
            "dct index ({u},{v}) out of range for {width}x{height}"
        )));
    }
    Image::from_fn(width, height, |x, y| dct1d(u, x, width) * dct1d(v, y, height))
}

/// Full 2D DCT-II of an image; coefficient (u, v) is stored at v*width + u.
pub fn dct2_coefficients(image: &Image) -> Vec<f64> {
    let w = image.width();
    let h = image.height();
    // rows first: tmp[y][u] = sum_x img[y][x] d_u(x)
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for u in 0..w {
            let mut acc = 0.0;
            for x in 0..w {
                acc += image.get(x, y) * dct1d(u, x, w);
            }
            tmp[y * w + u] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = 0.0;
            for y in 0..h {
                acc += tmp[y * w + u] * dct1d(v, y, h);
            }
            out[v * w + u] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_function_is_constant() {
        let f = dct_basis_function(0, 0, 8, 8).unwrap();
        for &p in f.pixels() {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn one_dimensional_factor_value() {
        // N = 4, u = 1, x = 0: sqrt(2/4) * cos(pi/8)
        let got = dct1d(1, 0, 4);
        assert!((got - 0.65328).abs() < 1e-5);
        assert!((got - (0.5f64).sqrt() * (PI / 8.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn distinct_functions_are_orthogonal() {
        let a = dct_basis_function(1, 0, 16, 16).unwrap();
        let b = dct_basis_function(2, 3, 16, 16).unwrap();
        let dot: f64 = a.pixels().iter().zip(b.pixels()).map(|(x, y)| x * y).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn functions_have_unit_norm() {
        for &(u, v) in &[(0, 0), (3, 5), (7, 7)] {
            let f = dct_basis_function(u, v, 8, 8).unwrap();
            assert!((f.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(dct_basis_function(8, 0, 8, 8).is_err());
        assert!(dct_basis_function(0, 8, 8, 8).is_err());
    }

    #[test]
    fn transform_recovers_basis_coefficient() {
        // The transform of a basis function is a unit impulse at its index.
        let img = dct_basis_function(3, 2, 8, 8).unwrap();
        let coeffs = dct2_coefficients(&img);
        for v in 0..8 {
            for u in 0..8 {
                let expected = if (u, v) == (3, 2) { 1.0 } else { 0.0 };
                assert!((coeffs[v * 8 + u] - expected).abs() < 1e-12);
            }
        }
    }
}
