//! Synthetic contact-area rendering: the footprint a grasped peg presses
//! into the sensor, rotated by its tilt and corrupted by surface noise.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{inverse_rotate, TactileImage, DEFAULT_HEIGHT, DEFAULT_WIDTH};

/// Contact footprint geometry in pixels, peg axis along the image x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    /// Flat face of a cuboid.
    Rectangle { half_length: f64, half_width: f64 },
    /// Shaft: a flat strip with rounded corners.
    RoundedRectangle {
        half_length: f64,
        half_width: f64,
        corner_radius: f64,
    },
    /// Cylinder pressed along its side: a strip whose intensity follows the
    /// circular cross-section, fading toward the long edges.
    Circle { radius: f64, half_length: f64 },
    /// Elliptical cylinder face.
    Ellipse { semi_major: f64, semi_minor: f64 },
    /// Pulley face: a ring cut to the finger-pad band `|v| <= band_half_width`.
    Annulus {
        outer_radius: f64,
        inner_radius: f64,
        band_half_width: f64,
    },
}

impl Footprint {
    /// Signed distance in pixels (negative inside).
    pub fn signed_distance(&self, u: f64, v: f64) -> f64 {
        match *self {
            Footprint::Rectangle {
                half_length,
                half_width,
            } => box_sdf(u, v, half_length, half_width, 0.0),
            Footprint::RoundedRectangle {
                half_length,
                half_width,
                corner_radius,
            } => box_sdf(u, v, half_length, half_width, corner_radius),
            Footprint::Circle {
                radius,
                half_length,
            } => box_sdf(u, v, half_length, radius, 0.0),
            Footprint::Ellipse {
                semi_major,
                semi_minor,
            } => {
                let (a2, b2) = (semi_major * semi_major, semi_minor * semi_minor);
                let f = u * u / a2 + v * v / b2 - 1.0;
                let grad = 2.0 * libm::sqrt(u * u / (a2 * a2) + v * v / (b2 * b2));
                if grad < 1e-12 {
                    -semi_minor
                } else {
                    f / grad
                }
            }
            Footprint::Annulus {
                outer_radius,
                inner_radius,
                band_half_width,
            } => {
                let r = libm::sqrt(u * u + v * v);
                (r - outer_radius)
                    .max(inner_radius - r)
                    .max(v.abs() - band_half_width)
            }
        }
    }

    /// Contact pressure profile inside the footprint, in `[0, 1]`.
    fn profile(&self, _u: f64, v: f64) -> f64 {
        match *self {
            Footprint::Circle { radius, .. } => {
                let s = (v / radius).clamp(-1.0, 1.0);
                libm::sqrt(1.0 - s * s)
            }
            _ => 1.0,
        }
    }

    /// Largest distance of any contact point from the footprint origin.
    pub fn extent(&self) -> f64 {
        match *self {
            Footprint::Rectangle {
                half_length,
                half_width,
            }
            | Footprint::RoundedRectangle {
                half_length,
                half_width,
                ..
            } => libm::hypot(half_length, half_width),
            Footprint::Circle {
                radius,
                half_length,
            } => libm::hypot(half_length, radius),
            Footprint::Ellipse { semi_major, .. } => semi_major,
            Footprint::Annulus { outer_radius, .. } => outer_radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Footprint::Rectangle {
                half_length,
                half_width,
            } => half_length > 0.0 && half_width > 0.0,
            Footprint::RoundedRectangle {
                half_length,
                half_width,
                corner_radius,
            } => {
                half_length > 0.0
                    && half_width > 0.0
                    && corner_radius >= 0.0
                    && corner_radius <= half_width.min(half_length)
            }
            Footprint::Circle {
                radius,
                half_length,
            } => radius > 0.0 && half_length > 0.0,
            Footprint::Ellipse {
                semi_major,
                semi_minor,
            } => semi_major > 0.0 && semi_minor > 0.0,
            Footprint::Annulus {
                outer_radius,
                inner_radius,
                band_half_width,
            } => inner_radius >= 0.0 && outer_radius > inner_radius && band_half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("footprint dimensions must be positive and consistent"))
        }
    }
}

fn box_sdf(u: f64, v: f64, hl: f64, hw: f64, r: f64) -> f64 {
    let qx = u.abs() - (hl - r);
    let qy = v.abs() - (hw - r);
    let outside = libm::hypot(qx.max(0.0), qy.max(0.0));
    outside + qx.max(qy).min(0.0) - r
}

/// The five reference pegs of the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PegKind {
    Shaft,
    Pulley,
    Cylinder,
    Cuboid,
    EllipticalCylinder,
}

impl PegKind {
    pub const ALL: [PegKind; 5] = [
        PegKind::Shaft,
        PegKind::Pulley,
        PegKind::Cylinder,
        PegKind::Cuboid,
        PegKind::EllipticalCylinder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PegKind::Shaft => "shaft",
            PegKind::Pulley => "pulley",
            PegKind::Cylinder => "cylinder",
            PegKind::Cuboid => "cuboid",
            PegKind::EllipticalCylinder => "elliptical_cylinder",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        PegKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Round pegs have soft, indistinct contact borders.
    pub fn is_round(self) -> bool {
        matches!(self, PegKind::Shaft | PegKind::Cylinder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PegSpec {
    pub footprint: Footprint,
    /// Physical peg width in millimetres.
    pub width_mm: f64,
    /// Width of the anti-aliased footprint edge in pixels.
    pub edge_px: f64,
    /// Noise level in `[0, 1]`.
    pub surface_noise: f64,
    pub image_width: usize,
    pub image_height: usize,
}

impl PegSpec {
    pub fn new(footprint: Footprint, surface_noise: f64) -> Self {
        PegSpec {
            footprint,
            width_mm: 8.0,
            edge_px: 1.0,
            surface_noise,
            image_width: DEFAULT_WIDTH,
            image_height: DEFAULT_HEIGHT,
        }
    }

    /// Reference geometry for each peg with its default noise level.
    pub fn reference(kind: PegKind) -> Self {
        let (footprint, edge_px, noise) = match kind {
            PegKind::Shaft => (
                Footprint::RoundedRectangle {
                    half_length: 16.0,
                    half_width: 4.5,
                    corner_radius: 4.0,
                },
                2.0,
                0.15,
            ),
            PegKind::Pulley => (
                Footprint::Annulus {
                    outer_radius: 17.0,
                    inner_radius: 4.0,
                    band_half_width: 6.0,
                },
                1.0,
                0.1,
            ),
            PegKind::Cylinder => (
                Footprint::Circle {
                    radius: 6.0,
                    half_length: 14.0,
                },
                2.0,
                0.15,
            ),
            PegKind::Cuboid => (
                Footprint::Rectangle {
                    half_length: 14.0,
                    half_width: 6.0,
                },
                1.0,
                0.05,
            ),
            PegKind::EllipticalCylinder => (
                Footprint::Ellipse {
                    semi_major: 15.0,
                    semi_minor: 7.0,
                },
                1.0,
                0.1,
            ),
        };
        PegSpec {
            edge_px,
            ..PegSpec::new(footprint, noise)
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.surface_noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.footprint.validate()?;
        if !(self.width_mm > 0.0) {
            return Err(Error::config("peg width must be positive"));
        }
        if !(self.edge_px > 0.0) {
            return Err(Error::config("footprint edge width must be positive"));
        }
        if !(0.0..=1.0).contains(&self.surface_noise) {
            return Err(Error::config("surface noise must lie in [0, 1]"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::config("image dimensions must be positive"));
        }
        Ok(())
    }
}

/// Boundary displacement amplitude in pixels at noise 1.
const WOBBLE_PX: f64 = 2.5;
/// Fraction of contact blocks dropped at noise 1.
const HOLE_RATE: f64 = 0.35;
const SPECKLE_BLOCK: usize = 2;
/// Spurious contact appears within this many pixels of the true footprint.
const SPECKLE_BAND_PX: f64 = 4.0;

/// Smooth zero-mean random field with unit variance, in image coordinates.
struct WobbleField {
    waves: Vec<(f64, f64, f64)>,
    norm: f64,
}

impl WobbleField {
    fn new<R: Rng>(rng: &mut R) -> Self {
        const WAVES: usize = 6;
        let waves = (0..WAVES)
            .map(|_| {
                let k = rng.gen_range(0.15..0.6);
                let dir = rng.gen_range(0.0..core::f64::consts::TAU);
                let phase = rng.gen_range(0.0..core::f64::consts::TAU);
                (k * libm::cos(dir), k * libm::sin(dir), phase)
            })
            .collect();
        WobbleField {
            waves,
            norm: libm::sqrt(2.0 / WAVES as f64),
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.norm
            * self
                .waves
                .iter()
                .map(|(kx, ky, p)| libm::cos(kx * x + ky * y + p))
                .sum::<f64>()
    }
}

fn coverage(d: f64, edge: f64) -> f64 {
    (0.5 - d / edge).clamp(0.0, 1.0)
}

/// Noise-free footprint rotated by `mu_true` degrees about the image center,
/// using the same rotation convention as [`crate::image::rotate`].
pub fn render_clean(peg: &PegSpec, mu_true: f64) -> TactileImage {
    render_with(peg, mu_true, |_, _| 0.0)
}

fn render_with(peg: &PegSpec, mu_true: f64, wobble: impl Fn(f64, f64) -> f64) -> TactileImage {
    let (w, h) = (peg.image_width, peg.image_height);
    let theta = mu_true.to_radians();
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (u, v) = inverse_rotate(dx, dy, cos, sin);
            let d = peg.footprint.signed_distance(u, v) + wobble(x as f64, y as f64);
            let c = coverage(d, peg.edge_px);
            pixels.push(if c > 0.0 { c * peg.footprint.profile(u, v) } else { 0.0 });
        }
    }
    TactileImage::from_pixels_clamped(w, h, pixels).expect("dimensions")
}

/// Contact-area observation for a peg tilted by `mu_true` degrees.
///
/// The noise model has two parts, both zero-mean in expectation and both
/// fixed to the image frame: a smooth random displacement of the footprint
/// boundary, and block speckle that removes contact inside the footprint and
/// adds spurious contact in a band around it at mass-balancing rates.
pub fn render_tactile(peg: &PegSpec, mu_true: f64, noise_seed: u64) -> TactileImage {
    let noise = peg.surface_noise;
    if noise <= 0.0 {
        return render_clean(peg, mu_true);
    }
    let mut rng = crate::seed::rng(noise_seed);
    let field = WobbleField::new(&mut rng);
    let amp = WOBBLE_PX * noise;
    let wobbled = render_with(peg, mu_true, |x, y| amp * field.at(x, y));

    let (w, h) = (peg.image_width, peg.image_height);
    let theta = mu_true.to_radians();
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let in_band = |x: usize, y: usize| {
        let (u, v) = inverse_rotate(x as f64 - cx, y as f64 - cy, cos, sin);
        let d = peg.footprint.signed_distance(u, v);
        d > 0.0 && d <= SPECKLE_BAND_PX
    };

    let mut pixels = wobbled.into_pixels();
    let removable: f64 = pixels.iter().sum();
    let band_pixels = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| pixels[y * w + x] == 0.0 && in_band(x, y))
        .count() as f64;
    let hole_rate = HOLE_RATE * noise;
    // Expected removed mass equals expected added mass (added values average 0.5).
    let add_rate = if band_pixels > 0.0 {
        (hole_rate * removable / (0.5 * band_pixels)).min(1.0)
    } else {
        0.0
    };

    let mut out = pixels.clone();
    for by in (0..h).step_by(SPECKLE_BLOCK) {
        for bx in (0..w).step_by(SPECKLE_BLOCK) {
            let hole = rng.gen::<f64>() < hole_rate;
            let add = rng.gen::<f64>() < add_rate;
            let value = rng.gen::<f64>();
            for y in by..(by + SPECKLE_BLOCK).min(h) {
                for x in bx..(bx + SPECKLE_BLOCK).min(w) {
                    let i = y * w + x;
                    if pixels[i] > 0.0 {
                        if hole {
                            out[i] = 0.0;
                        }
                    } else if add && in_band(x, y) {
                        out[i] = value;
                    }
                }
            }
        }
    }
    pixels.clear();
    TactileImage::from_pixels_clamped(w, h, out).expect("dimensions")
}
