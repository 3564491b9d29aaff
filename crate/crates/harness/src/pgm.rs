//! 8-bit binary PGM (P5) images.

use std::path::Path;

use tactile_aif::image::TactileImage;

use crate::error::{HarnessError, Result};

/// Encodes with `maxval` 255; pixels are rounded to the nearest level.
pub fn encode(img: &TactileImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(HarnessError::parse(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| HarnessError::parse(start, format!("{what} out of range")))
    }
}

/// Decodes a P5 image. With `expected` set, other dimensions are rejected.
pub fn decode(bytes: &[u8], expected: Option<(usize, usize)>) -> Result<TactileImage> {
    if !bytes.starts_with(b"P5") {
        return Err(HarnessError::parse(0, "missing P5 magic"));
    }
    let mut h = Header { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(u8::is_ascii_whitespace) {
        return Err(HarnessError::parse(2, "expected whitespace after magic"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    h.skip_space_and_comments();
    let maxval_at = h.pos;
    let maxval = h.number("maxval")?;
    if !(1..=255).contains(&maxval) {
        return Err(HarnessError::parse(maxval_at, "only 8-bit maxval (1..=255) is supported"));
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(HarnessError::parse(h.pos, "expected single whitespace before raster"));
    }
    let start = h.pos + 1;
    if width == 0 || height == 0 {
        return Err(HarnessError::parse(start, "zero image dimension"));
    }
    if let Some(exp) = expected {
        if exp != (width, height) {
            return Err(HarnessError::Dimension {
                expected: exp,
                actual: (width, height),
            });
        }
    }
    let len = width
        .checked_mul(height)
        .ok_or_else(|| HarnessError::parse(start, "image too large"))?;
    let raster = bytes.get(start..start + len).ok_or_else(|| {
        HarnessError::parse(bytes.len(), format!("truncated raster: need {len} bytes after offset {start}"))
    })?;
    if let Some(i) = raster.iter().position(|&v| usize::from(v) > maxval) {
        return Err(HarnessError::parse(start + i, "sample exceeds maxval"));
    }
    let scale = maxval as f64;
    let pixels = raster.iter().map(|&v| v as f64 / scale).collect();
    Ok(TactileImage::from_pixels(width, height, pixels)?)
}

pub fn write(path: &Path, img: &TactileImage) -> Result<()> {
    std::fs::write(path, encode(img)).map_err(|e| HarnessError::io(path, e))
}

pub fn read(path: &Path, expected: Option<(usize, usize)>) -> Result<TactileImage> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&bytes, expected)
}
