//! Binary PGM (P5) reader/writer, 8- and 16-bit.
//!
//! Pixel values map linearly between [0, 1] and [0, maxval]; out-of-range
//! values are clamped on write. 16-bit samples are big-endian per the format.

use crate::error::{Error, Result};
use crate::image::Image;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmDepth {
    Eight,
    Sixteen,
}

impl PgmDepth {
    fn maxval(&self) -> u32 {
        match self {
            PgmDepth::Eight => 255,
            PgmDepth::Sixteen => 65_535,
        }
    }
}

pub fn write_pgm(path: &Path, image: &Image, depth: PgmDepth) -> Result<()> {
    let maxval = depth.maxval();
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    match depth {
        PgmDepth::Eight => {
            out.extend(image.pixels().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
        }
        PgmDepth::Sixteen => {
            for &v in image.pixels() {
                let q = (v.clamp(0.0, 1.0) * 65_535.0).round() as u16;
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct HeaderParser<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderParser<'a> {
    fn token(&mut self) -> Result<&'a [u8]> {
        // skip whitespace and '#' comments
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("truncated pgm header".to_string()));
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad number in pgm header".to_string()))
    }
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut parser = HeaderParser { data: &data, pos: 0 };
    let magic = parser.token()?;
    if magic != b"P5" {
        return Err(Error::Format(format!(
            "{} is not a binary pgm (magic {:?})",
            path.display(),
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parser.number()?;
    let height = parser.number()?;
    let maxval = parser.number()?;
    if maxval == 0 || maxval > 65_535 {
        return Err(Error::Format(format!("unsupported pgm maxval {maxval}")));
    }
    // exactly one whitespace byte separates header and payload
    let payload = &data[parser.pos + 1..];
    let n = width * height;
    let pixels: Vec<f64> = if maxval <= 255 {
        if payload.len() < n {
            return Err(Error::Format("pgm payload shorter than header promises".to_string()));
        }
        payload[..n].iter().map(|&b| b as f64 / maxval as f64).collect()
    } else {
        if payload.len() < 2 * n {
            return Err(Error::Format("pgm payload shorter than header promises".to_string()));
        }
        payload[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / maxval as f64)
            .collect()
    };
    Image::new(width, height, pixels)
}
