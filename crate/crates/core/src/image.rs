//! Contact-area images, rotation and self-data augmentation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 64;
pub const DEFAULT_HEIGHT: usize = 48;

/// Row-major grayscale image with every pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl TactileImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        TactileImage {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    /// Rejects buffers of the wrong length and out-of-range or non-finite values.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Shape {
                layer: 0,
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::precondition(alloc::format!(
                "pixel {i} outside [0, 1]: {}",
                pixels[i]
            )));
        }
        Ok(TactileImage {
            width,
            height,
            pixels,
        })
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn from_pixels_clamped(width: usize, height: usize, mut pixels: Vec<f64>) -> Result<Self> {
        for p in &mut pixels {
            *p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
        }
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Zero outside the image.
    #[inline]
    fn sample_or_zero(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    /// Bilinear sample at fractional pixel coordinates; out-of-bounds
    /// neighbours contribute 0.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = libm::floor(x);
        let y0 = libm::floor(y);
        let (fx, fy) = (x - x0, y - y0);
        let (xi, yi) = (x0 as isize, y0 as isize);
        let top = self.sample_or_zero(xi, yi) * (1.0 - fx) + self.sample_or_zero(xi + 1, yi) * fx;
        let bottom =
            self.sample_or_zero(xi, yi + 1) * (1.0 - fx) + self.sample_or_zero(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Sum of intensities.
    pub fn mass(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn same_dims(&self, other: &TactileImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pixel center of rotation.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }
}

/// Per-pixel mean absolute difference. Panics on mismatched dimensions.
pub fn mean_abs_diff(a: &TactileImage, b: &TactileImage) -> f64 {
    assert!(a.same_dims(b), "image dimensions differ");
    let total: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y).abs())
        .sum();
    total / a.len() as f64
}

/// Maps an output pixel offset from the center back to its source offset for
/// a rotation by `angle_deg`, counterclockwise as displayed (y axis down).
#[inline]
pub(crate) fn inverse_rotate(dx: f64, dy: f64, cos: f64, sin: f64) -> (f64, f64) {
    (cos * dx - sin * dy, sin * dx + cos * dy)
}

/// Rotates about the image center with bilinear interpolation and zero fill.
pub fn rotate(img: &TactileImage, angle_deg: f64) -> TactileImage {
    if angle_deg == 0.0 {
        return img.clone();
    }
    let theta = angle_deg.to_radians();
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let (cx, cy) = img.center();
    let mut pixels = Vec::with_capacity(img.len());
    for y in 0..img.height {
        for x in 0..img.width {
            let (sx, sy) = inverse_rotate(x as f64 - cx, y as f64 - cy, cos, sin);
            pixels.push(img.bilinear(cx + sx, cy + sy).clamp(0.0, 1.0));
        }
    }
    TactileImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Closed tilt interval in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TiltRange {
    pub lo: f64,
    pub hi: f64,
}

impl TiltRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        TiltRange { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub count: usize,
    pub tilt_range_deg: TiltRange,
    pub rng_seed: u64,
}

impl AugmentConfig {
    pub fn new(count: usize, lo: f64, hi: f64, rng_seed: u64) -> Self {
        AugmentConfig {
            count,
            tilt_range_deg: TiltRange::new(lo, hi),
            rng_seed,
        }
    }

    /// A degenerate range (`lo == hi`) is accepted and yields constant tilts.
    pub fn validate(&self) -> Result<()> {
        let r = self.tilt_range_deg;
        if self.count == 0 {
            return Err(Error::config("augmentation count must be at least 1"));
        }
        if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
            return Err(Error::config("augmentation tilt range must be finite with lo <= hi"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub image: TactileImage,
    pub tilt_deg: f64,
}

/// Tilt labels drawn by [`augment`], without rendering the images.
pub fn augment_tilts(cfg: &AugmentConfig) -> Vec<f64> {
    let mut rng = crate::seed::rng(cfg.rng_seed);
    (0..cfg.count)
        .map(|_| cfg.tilt_range_deg.sample(&mut rng))
        .collect()
}

/// Builds a labeled dataset by rotating a single straight-pose image by
/// uniformly drawn tilts.
pub fn augment(o_init: &TactileImage, cfg: &AugmentConfig) -> Result<Vec<LabeledSample>> {
    cfg.validate()?;
    Ok(augment_tilts(cfg)
        .into_iter()
        .map(|tilt_deg| LabeledSample {
            image: rotate(o_init, tilt_deg),
            tilt_deg,
        })
        .collect())
}
