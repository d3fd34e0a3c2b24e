//! Image-directory loading for the selection database and frame sources.
//!
//! Every image is converted to grayscale in [0, 1]. PGM files go through the
//! crate's own reader; PNG/JPEG decode via the `image` crate. Files are
//! visited in sorted name order so directory iteration order never affects
//! results.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::pgm;
use std::path::Path;

fn decode_with_image_crate(path: &Path) -> Result<Image> {
    let decoded = image::open(path)
        .map_err(|e| Error::Format(format!("cannot decode {}: {e}", path.display())))?;
    let luma = decoded.to_luma32f();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    Image::new(w, h, luma.into_raw().into_iter().map(f64::from).collect())
}

/// Loads every supported image in a directory, sorted by file name.
pub fn load_image_dir(path: &Path) -> Result<Vec<(String, Image)>> {
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                Some("pgm" | "png" | "jpg" | "jpeg")
            )
        })
        .collect();
    files.sort();
    let mut out = Vec::with_capacity(files.len());
    for file in files {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let img = match file.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(ext) if ext == "pgm" => pgm::read_pgm(&file)?,
            _ => decode_with_image_crate(&file)?,
        };
        out.push((name, img));
    }
    Ok(out)
}
