//! Bundled test scenes.
//!
//! A small documented set of procedurally generated grayscale images used by
//! the evaluation harness and the regression tests. The generators are
//! deterministic at any resolution and produce scenes with natural-image
//! statistics: dominant low-frequency content, smooth regions, and a few
//! sharp edges. Any user-supplied image directory can stand in for them in
//! the CLI.

use crate::fft::Fft2;
use crate::image::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

fn gaussian(x: f64, y: f64, cx: f64, cy: f64, s: f64) -> f64 {
    (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp()
}

/// Soft blobs of varying size over a dark field.
fn blobs(w: usize, h: usize) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let centers: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random::<f64>() * w as f64,
                rng.random::<f64>() * h as f64,
                (0.05 + 0.12 * rng.random::<f64>()) * w.min(h) as f64,
                0.4 + 0.6 * rng.random::<f64>(),
            )
        })
        .collect();
    Image::from_fn(w, h, |x, y| {
        let mut v: f64 = 0.08;
        for &(cx, cy, s, a) in &centers {
            v += a * gaussian(x as f64, y as f64, cx, cy, s);
        }
        v.min(1.0)
    })
    .expect("valid dimensions")
    .normalized_unit()
}

/// Bright disk on a diagonal illumination ramp.
fn gradient_disk(w: usize, h: usize) -> Image {
    let r = w.min(h) as f64 / 3.5;
    let (cx, cy) = (w as f64 * 0.62, h as f64 * 0.44);
    Image::from_fn(w, h, |x, y| {
        let ramp = 0.15 + 0.35 * (x + y) as f64 / (w + h) as f64;
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        let disk = ((r - d) / 1.5).clamp(0.0, 1.0);
        ramp + (0.85 - ramp) * disk
    })
    .expect("valid dimensions")
}

/// Concentric rings under a Gaussian envelope, like a defocused target.
fn rings(w: usize, h: usize) -> Image {
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let scale = w.min(h) as f64;
    Image::from_fn(w, h, |x, y| {
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        let env = gaussian(x as f64, y as f64, cx, cy, scale * 0.35);
        0.5 + 0.45 * env * (2.0 * PI * 3.0 * d / scale).cos()
    })
    .expect("valid dimensions")
    .normalized_unit()
}

/// Vertical bars whose spatial frequency rises left to right.
fn chirp_bars(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |x, y| {
        let t = x as f64 / w as f64;
        let vertical = 0.1 * (y as f64 / h as f64);
        0.5 + 0.4 * (2.0 * PI * 5.0 * t * t).sin() + vertical
    })
    .expect("valid dimensions")
    .normalized_unit()
}

/// 1/f-type spectral-synthesis noise: random phases with a power-law
/// amplitude envelope.
fn smooth_noise(w: usize, h: usize) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(505);
    let white: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>() - 0.5).collect();
    let plan = Fft2::new(w, h);
    let mut spec = plan.forward_real(&white);
    let grid = crate::spectral::freq_grid(w, h).expect("valid dimensions");
    let k0 = 2.0 * PI / w.max(h) as f64;
    for (v, &(wx, wy)) in spec.iter_mut().zip(grid.omegas()) {
        let r = (wx * wx + wy * wy).sqrt();
        *v *= (1.0 + r / k0).powf(-1.6);
    }
    plan.inverse(&mut spec);
    Image::new(w, h, spec.into_iter().map(|c| c.re).collect())
        .expect("valid dimensions")
        .normalized_unit()
}

/// A few flat rectangles of distinct intensity, sharp edged.
fn rectangles(w: usize, h: usize) -> Image {
    let rects: [(f64, f64, f64, f64, f64); 4] = [
        (0.10, 0.15, 0.45, 0.55, 0.75),
        (0.55, 0.20, 0.85, 0.45, 0.45),
        (0.25, 0.62, 0.70, 0.88, 0.95),
        (0.62, 0.55, 0.78, 0.70, 0.25),
    ];
    Image::from_fn(w, h, |x, y| {
        let fx = x as f64 / w as f64;
        let fy = y as f64 / h as f64;
        let mut v = 0.12;
        for &(x0, y0, x1, y1, a) in &rects {
            if fx >= x0 && fx < x1 && fy >= y0 && fy < y1 {
                v = a;
            }
        }
        v
    })
    .expect("valid dimensions")
}

/// Schematic portrait: bright oval with darker features and a vignette.
fn portrait(w: usize, h: usize) -> Image {
    let (cx, cy) = (w as f64 / 2.0, h as f64 * 0.45);
    let s = w.min(h) as f64;
    Image::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let vignette = 1.0 - 0.6 * (((fx - cx).powi(2) + (fy - h as f64 * 0.5).powi(2)).sqrt() / s).min(1.0);
        let head = 0.8 * gaussian(fx, fy, cx, cy, s * 0.22);
        let eye_l = 0.5 * gaussian(fx, fy, cx - s * 0.09, cy - s * 0.05, s * 0.025);
        let eye_r = 0.5 * gaussian(fx, fy, cx + s * 0.09, cy - s * 0.05, s * 0.025);
        let mouth = 0.35 * gaussian(fx, fy, cx, cy + s * 0.1, s * 0.04);
        (0.1 + head - eye_l - eye_r - mouth) * vignette + 0.05
    })
    .expect("valid dimensions")
    .normalized_unit()
}

/// Diagonal staircase of flat steps.
fn staircase(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |x, y| {
        let t = (x as f64 / w as f64 + y as f64 / h as f64) / 2.0;
        (t * 6.0).floor() / 6.0 * 0.9 + 0.05
    })
    .expect("valid dimensions")
}

/// Two disks and a connecting bar, a simple two-target scene.
fn two_targets(w: usize, h: usize) -> Image {
    let r = w.min(h) as f64 / 9.0;
    let (ax, ay) = (w as f64 * 0.3, h as f64 * 0.35);
    let (bx, by) = (w as f64 * 0.7, h as f64 * 0.65);
    Image::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let da = ((fx - ax).powi(2) + (fy - ay).powi(2)).sqrt();
        let db = ((fx - bx).powi(2) + (fy - by).powi(2)).sqrt();
        // distance to the segment between the two centers
        let t = (((fx - ax) * (bx - ax) + (fy - ay) * (by - ay))
            / ((bx - ax).powi(2) + (by - ay).powi(2)))
        .clamp(0.0, 1.0);
        let (px, py) = (ax + t * (bx - ax), ay + t * (by - ay));
        let dline = ((fx - px).powi(2) + (fy - py).powi(2)).sqrt();
        let disks = ((r - da) / 1.5).clamp(0.0, 1.0) + ((r - db) / 1.5).clamp(0.0, 1.0);
        let bar = ((r * 0.25 - dline) / 1.5).clamp(0.0, 1.0);
        0.1 + 0.8 * (disks + 0.6 * bar).min(1.0)
    })
    .expect("valid dimensions")
}

/// Superposition of a few low-frequency plane waves.
fn waves(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |x, y| {
        let fx = x as f64 / w as f64;
        let fy = y as f64 / h as f64;
        0.5 + 0.2 * (2.0 * PI * (1.3 * fx + 0.4 * fy)).sin()
            + 0.18 * (2.0 * PI * (0.5 * fx - 1.7 * fy) + 0.8).cos()
            + 0.12 * (2.0 * PI * (2.2 * fx + 2.6 * fy) + 2.1).sin()
    })
    .expect("valid dimensions")
    .normalized_unit()
}

/// The bundled evaluation set, rendered at the requested resolution.
pub fn bundled(width: usize, height: usize) -> Vec<(&'static str, Image)> {
    vec![
        ("blobs", blobs(width, height)),
        ("gradient-disk", gradient_disk(width, height)),
        ("rings", rings(width, height)),
        ("chirp-bars", chirp_bars(width, height)),
        ("smooth-noise", smooth_noise(width, height)),
        ("rectangles", rectangles(width, height)),
        ("portrait", portrait(width, height)),
        ("staircase", staircase(width, height)),
        ("two-targets", two_targets(width, height)),
        ("waves", waves(width, height)),
    ]
}

/// Just the images, for APIs that take a database slice.
pub fn bundled_images(width: usize, height: usize) -> Vec<Image> {
    bundled(width, height).into_iter().map(|(_, img)| img).collect()
}
