use proptest::prelude::*;
use tactile_aif::image::*;
use tactile_aif::world::{render_clean, Footprint, PegKind, PegSpec};

fn rectangle(half_length: f64, half_width: f64) -> PegSpec {
    PegSpec {
        footprint: Footprint::Rectangle {
            half_length,
            half_width,
        },
        edge_px: 1.0,
        ..PegSpec::reference(PegKind::Cuboid)
    }
    .with_noise(0.0)
}

/// Mean absolute difference over pixels at least `margin` from the border.
fn interior_mad(a: &TactileImage, b: &TactileImage, margin: usize) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut total = 0.0;
    let mut n = 0;
    for y in margin..h - margin {
        for x in margin..w - margin {
            total += (a.get(x, y) - b.get(x, y)).abs();
            n += 1;
        }
    }
    total / n as f64
}

#[test]
fn rotate_by_zero_is_identity() {
    let img = render_clean(&PegSpec::reference(PegKind::Shaft), 7.0);
    assert_eq!(rotate(&img, 0.0), img);
}

#[test]
fn rotation_round_trip_is_close_in_the_interior() {
    let img = render_clean(&rectangle(14.0, 6.0), 0.0);
    let back = rotate(&rotate(&img, 12.0), -12.0);
    let mad = interior_mad(&img, &back, 4);
    assert!(mad < 0.02, "round-trip MAD {mad}");
}

#[test]
fn quarter_turn_swaps_rectangle_sides() {
    let rotated = rotate(&render_clean(&rectangle(10.0, 5.0), 0.0), 90.0);
    let swapped = render_clean(&rectangle(5.0, 10.0), 0.0);
    let mad = mean_abs_diff(&rotated, &swapped);
    assert!(mad < 0.02, "90 degree MAD {mad}");
}

#[test]
fn rotation_matches_rendering_at_the_same_tilt() {
    let peg = rectangle(14.0, 6.0);
    let upright = render_clean(&peg, 0.0);
    for t in [-17.0, -4.5, 9.0, 20.0] {
        let mad = mean_abs_diff(&rotate(&upright, t), &render_clean(&peg, t));
        assert!(mad < 0.02, "tilt {t}: MAD {mad}");
    }
}

#[test]
fn pixels_outside_unit_range_are_rejected() {
    assert!(TactileImage::from_pixels(2, 1, vec![0.0, 1.5]).is_err());
    assert!(TactileImage::from_pixels(2, 1, vec![-0.1, 0.5]).is_err());
    assert!(TactileImage::from_pixels(2, 1, vec![f64::NAN, 0.5]).is_err());
    assert!(TactileImage::from_pixels(2, 2, vec![0.0; 3]).is_err());
    let clamped = TactileImage::from_pixels_clamped(2, 1, vec![-1.0, 2.0]).unwrap();
    assert_eq!(clamped.pixels(), &[0.0, 1.0]);
}

#[test]
fn default_dimensions() {
    let img = TactileImage::zeros(DEFAULT_WIDTH, DEFAULT_HEIGHT);
    assert_eq!((img.width(), img.height(), img.len()), (64, 48, 64 * 48));
}

#[test]
fn augment_draws_the_requested_count_within_range() {
    let o = render_clean(&PegSpec::reference(PegKind::Cuboid), 0.0);
    let cfg = AugmentConfig::new(500, -20.0, 20.0, 3);
    let data = augment(&o, &cfg).unwrap();
    assert_eq!(data.len(), 500);
    assert!(data.iter().all(|s| (-20.0..=20.0).contains(&s.tilt_deg)));
    for s in data.iter().take(5) {
        assert_eq!(s.image, rotate(&o, s.tilt_deg));
    }
}

#[test]
fn degenerate_range_returns_the_input() {
    let o = render_clean(&PegSpec::reference(PegKind::Pulley), 0.0);
    let data = augment(&o, &AugmentConfig::new(1, 0.0, 0.0, 11)).unwrap();
    assert_eq!(data.len(), 1);
    assert_eq!(data[0].tilt_deg, 0.0);
    assert_eq!(data[0].image, o);
}

#[test]
fn augment_is_deterministic_per_seed() {
    let o = render_clean(&PegSpec::reference(PegKind::Cylinder), 0.0);
    let cfg = AugmentConfig::new(20, -20.0, 20.0, 99);
    let a = augment(&o, &cfg).unwrap();
    let b = augment(&o, &cfg).unwrap();
    let bits = |d: &[LabeledSample]| d.iter().map(|s| s.tilt_deg.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a, b);
    let other = augment_tilts(&AugmentConfig::new(20, -20.0, 20.0, 100));
    assert_ne!(bits(&a), other.iter().map(|t| t.to_bits()).collect::<Vec<_>>());
}

#[test]
fn invalid_augment_configs_are_rejected() {
    let o = TactileImage::zeros(8, 8);
    assert!(augment(&o, &AugmentConfig::new(0, -1.0, 1.0, 0)).is_err());
    assert!(augment(&o, &AugmentConfig::new(3, 1.0, -1.0, 0)).is_err());
    assert!(augment(&o, &AugmentConfig::new(3, f64::NEG_INFINITY, 1.0, 0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_preserves_mass(angle in -180.0f64..180.0, kind in 0usize..5) {
        // Every reference footprint keeps at least 5 px clear of the border.
        let img = render_clean(&PegSpec::reference(PegKind::ALL[kind]), 0.0);
        let m = img.mass();
        let r = rotate(&img, angle).mass();
        prop_assert!((r - m).abs() <= 0.05 * m, "mass {m} -> {r}");
    }

    #[test]
    fn rotation_stays_in_range(
        angle in -360.0f64..360.0,
        pixels in proptest::collection::vec(0.0f64..=1.0, 12 * 10),
    ) {
        let img = TactileImage::from_pixels(12, 10, pixels).unwrap();
        let r = rotate(&img, angle);
        prop_assert_eq!((r.width(), r.height()), (12, 10));
        prop_assert!(r.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn augment_is_pure(seed in any::<u64>(), count in 1usize..8, lo in -30.0f64..0.0, span in 0.0f64..30.0) {
        let o = render_clean(&PegSpec::reference(PegKind::Cuboid), 0.0);
        let cfg = AugmentConfig::new(count, lo, lo + span, seed);
        let a = augment(&o, &cfg).unwrap();
        prop_assert_eq!(&a, &augment(&o, &cfg).unwrap());
        prop_assert!(a.iter().all(|s| cfg.tilt_range_deg.contains(s.tilt_deg)));
        prop_assert!(a.iter().all(|s| s.image.pixels().iter().all(|p| (0.0..=1.0).contains(p))));
    }
}
