//! File formats: PGM images, the binary matrix/pattern container with its
//! JSON sidecar, image-directory loading, and measurement-vector JSON.

pub mod container;
pub mod db;
pub mod pgm;

pub use container::{
    load_container, load_measurement_matrix, load_pattern_set, load_reconstruction_matrix,
    save_container, save_measurement_matrix, save_pattern_set, save_reconstruction_matrix,
    ContainerMeta, LoadedReconstruction, Payload,
};
pub use db::load_image_dir;
pub use pgm::{read_pgm, write_pgm, PgmDepth};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::simulator::MeasurementVector;
use std::path::Path;

/// Grayscale PNG output for reconstructed frames; PGM remains the
/// bit-exact reference format.
pub fn write_png(path: &Path, image: &Image, depth: PgmDepth) -> Result<()> {
    let (w, h) = (image.width() as u32, image.height() as u32);
    let result = match depth {
        PgmDepth::Eight => {
            let data: Vec<u8> = image
                .pixels()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            image::GrayImage::from_raw(w, h, data)
                .expect("buffer sized from image")
                .save_with_format(path, image::ImageFormat::Png)
        }
        PgmDepth::Sixteen => {
            let data: Vec<u16> = image
                .pixels()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 65_535.0).round() as u16)
                .collect();
            image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(w, h, data)
                .expect("buffer sized from image")
                .save_with_format(path, image::ImageFormat::Png)
        }
    };
    result.map_err(|e| Error::Format(format!("cannot encode {}: {e}", path.display())))
}

/// Measurement vectors travel as JSON documents; f64 values survive the
/// round trip exactly (serde emits shortest-roundtrip decimals).
pub fn save_measurements(y: &MeasurementVector, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(y)
        .map_err(|e| Error::Format(format!("cannot serialize measurements: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_measurements(path: &Path) -> Result<MeasurementVector> {
    let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::Format(format!("bad measurement file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurement_json_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.json");
        let y = MeasurementVector::new(
            vec![1.0 / 3.0, -2.5e-17, 1e300, 0.1 + 0.2],
            0.05,
            42,
            "digest".to_string(),
        )
        .unwrap();
        save_measurements(&y, &path).unwrap();
        let back = load_measurements(&path).unwrap();
        for (a, b) in y.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.seed(), 42);
    }
}
