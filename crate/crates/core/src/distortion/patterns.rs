//! Synthetic high-frequency test charts.
//!
//! Every pattern is a binary square wave over some coordinate (projection,
//! radius, polar angle, or a chirped projection), rendered as
//! grayscale-replicated RGB around mid-gray:
//! `value = 0.5 + contrast·(wave − 0.5)`. Periods are validated against the
//! Nyquist limit of the pixel grid (period ≥ 2 px) so the undistorted chart
//! is representable; the distortion simulators then push this energy past
//! their reduced sampling rates.

use rand::Rng;

use super::DistortionError;
use crate::imaging::ImageRgb;

/// Smallest representable square-wave period: 0.5 cycles/pixel.
const MIN_PERIOD: f64 = 2.0;

/// Smallest supported chart side.
const MIN_SIZE: usize = 64;

/// Pattern family plus its frequency parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternKind {
    /// Parallel stripes with the given period (px) along the orientation.
    ResolutionBars { period: f64 },
    /// Product of two orthogonal square waves: a checker-like grid.
    ResolutionNet { period: f64 },
    /// Square wave in polar angle; `spokes` counts dark/light cycles around
    /// the full circle.
    SiemensStar { spokes: u32 },
    /// Stripes whose period sweeps linearly from `period_near` at the start
    /// of the sweep axis to `period_far` at its end.
    ResolutionWedge { period_near: f64, period_far: f64 },
    /// Square wave in the distance from the chart center.
    ConcentricRings { period: f64 },
}

/// Full description of one chart: geometry, contrast, and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    pub kind: PatternKind,
    /// Chart side length in pixels (charts are square).
    pub size: usize,
    /// Peak-to-peak amplitude around mid-gray, in (0, 1].
    pub contrast: f64,
    /// Rotation of the pattern axes, radians.
    pub orientation: f64,
}

/// Binary square wave with unit period: 1 on [0, 0.5), 0 on [0.5, 1).
#[inline]
fn wave(t: f64) -> f64 {
    if t.rem_euclid(1.0) < 0.5 {
        1.0
    } else {
        0.0
    }
}

fn validate(spec: &PatternSpec) -> Result<(), DistortionError> {
    let fail = |msg: String| Err(DistortionError::InvalidSpec(msg));
    if spec.size < MIN_SIZE {
        return fail(format!("size {} below minimum {MIN_SIZE}", spec.size));
    }
    if !(spec.contrast > 0.0 && spec.contrast <= 1.0) {
        return fail(format!("contrast {} outside (0, 1]", spec.contrast));
    }
    if !spec.orientation.is_finite() {
        return fail(format!("orientation {} not finite", spec.orientation));
    }
    let check_period = |name: &str, p: f64| {
        if p.is_finite() && p >= MIN_PERIOD {
            Ok(())
        } else {
            Err(DistortionError::InvalidSpec(format!(
                "{name} period {p} px below the 2 px Nyquist limit"
            )))
        }
    };
    match spec.kind {
        PatternKind::ResolutionBars { period } => check_period("bar", period),
        PatternKind::ResolutionNet { period } => check_period("net", period),
        PatternKind::ConcentricRings { period } => check_period("ring", period),
        PatternKind::ResolutionWedge {
            period_near,
            period_far,
        } => {
            check_period("wedge near", period_near)?;
            check_period("wedge far", period_far)
        }
        PatternKind::SiemensStar { spokes } => {
            // At the quarter-radius reference circle r = size/4 the angular
            // square wave has spokes/(2πr) cycles/px; cap that at 0.5.
            let max_spokes = (std::f64::consts::PI * spec.size as f64 / 4.0).floor();
            if spokes < 2 {
                fail(format!("star needs at least 2 spokes, got {spokes}"))
            } else if f64::from(spokes) > max_spokes {
                fail(format!(
                    "{spokes} spokes exceed the {max_spokes} representable on a size-{} chart",
                    spec.size
                ))
            } else {
                Ok(())
            }
        }
    }
}

/// Renders the chart described by `spec`; a pure function of the spec.
pub fn generate_pattern(spec: &PatternSpec) -> Result<ImageRgb, DistortionError> {
    validate(spec)?;
    let n = spec.size;
    let center = (n as f64 - 1.0) / 2.0;
    let (sin_o, cos_o) = spec.orientation.sin_cos();
    let sweep_len = n as f64 - 1.0;
    let mut img = ImageRgb::new(n, n);
    for y in 0..n {
        let yf = y as f64;
        for x in 0..n {
            let xf = x as f64;
            let b = match spec.kind {
                PatternKind::ResolutionBars { period } => {
                    let u = xf * cos_o + yf * sin_o;
                    wave(u / period)
                }
                PatternKind::ResolutionNet { period } => {
                    let u = xf * cos_o + yf * sin_o;
                    let v = -xf * sin_o + yf * cos_o;
                    wave(u / period) * wave(v / period)
                }
                PatternKind::SiemensStar { spokes } => {
                    let phi = (yf - center).atan2(xf - center) - spec.orientation;
                    wave(phi * f64::from(spokes) / (2.0 * std::f64::consts::PI))
                }
                PatternKind::ResolutionWedge {
                    period_near,
                    period_far,
                } => {
                    let u = (xf * cos_o + yf * sin_o).clamp(0.0, sweep_len);
                    wave(wedge_phase(u, period_near, period_far, sweep_len))
                }
                PatternKind::ConcentricRings { period } => {
                    let r = (xf - center).hypot(yf - center);
                    wave(r / period)
                }
            };
            let v = (0.5 + spec.contrast * (b - 0.5)) as f32;
            for c in 0..3 {
                img.set(x, y, c, v);
            }
        }
    }
    Ok(img)
}

/// Accumulated phase of a chirp whose period grows linearly from `p0` at
/// u = 0 to `p1` at u = `len`: the integral of 1/p(t) dt from 0 to u.
fn wedge_phase(u: f64, p0: f64, p1: f64, len: f64) -> f64 {
    let slope = (p1 - p0) / len;
    if slope.abs() < 1e-12 {
        u / p0
    } else {
        ((p0 + slope * u) / p0).ln() / slope
    }
}

/// Draws a random chart spec with the corpus parameter ranges: periods
/// log-uniform in [2.5, 16] px, star spokes uniform in {16…72} (capped by
/// what the chart size can represent), contrast uniform in [0.4, 1.0],
/// orientation uniform in [0, π).
pub fn sample_pattern_spec<R: Rng + ?Sized>(size: usize, rng: &mut R) -> PatternSpec {
    let log_period = |rng: &mut R| -> f64 { (rng.gen_range(2.5f64.ln()..=16.0f64.ln())).exp() };
    let kind = match rng.gen_range(0..5u32) {
        0 => PatternKind::ResolutionBars {
            period: log_period(rng),
        },
        1 => PatternKind::ResolutionNet {
            period: log_period(rng),
        },
        2 => {
            let cap = (std::f64::consts::PI * size as f64 / 4.0).floor() as u32;
            PatternKind::SiemensStar {
                spokes: rng.gen_range(16..=72.min(cap)),
            }
        }
        3 => PatternKind::ResolutionWedge {
            period_near: log_period(rng),
            period_far: log_period(rng),
        },
        _ => PatternKind::ConcentricRings {
            period: log_period(rng),
        },
    };
    PatternSpec {
        kind,
        size,
        contrast: rng.gen_range(0.4..=1.0),
        orientation: rng.gen_range(0.0..std::f64::consts::PI),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bars(period: f64, contrast: f64, orientation: f64) -> PatternSpec {
        PatternSpec {
            kind: PatternKind::ResolutionBars { period },
            size: 64,
            contrast,
            orientation,
        }
    }

    #[test]
    fn bars_period_8_alternate_4_white_4_black_columns() {
        let img = generate_pattern(&bars(8.0, 1.0, 0.0)).unwrap();
        for x in 0..64 {
            let want = if (x / 4) % 2 == 0 { 1.0 } else { 0.0 };
            for y in [0, 17, 63] {
                assert_eq!(img.get(x, y, 0), want, "column {x}");
            }
        }
    }

    #[test]
    fn rings_match_a_radial_oracle() {
        let spec = PatternSpec {
            kind: PatternKind::ConcentricRings { period: 10.0 },
            size: 64,
            contrast: 0.8,
            orientation: 0.3, // rings ignore orientation
        };
        let img = generate_pattern(&spec).unwrap();
        let c = 31.5;
        for y in 0..64 {
            for x in 0..64 {
                let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
                let b = if (r / 10.0).rem_euclid(1.0) < 0.5 { 1.0 } else { 0.0 };
                let want = (0.5 + 0.8 * (b - 0.5)) as f32;
                assert_eq!(img.get(x, y, 1), want, "pixel ({x}, {y}), r = {r}");
            }
        }
    }

    #[test]
    fn star_sectors_match_the_angular_formula() {
        let spokes = 24u32;
        let spec = PatternSpec {
            kind: PatternKind::SiemensStar { spokes },
            size: 96,
            contrast: 1.0,
            orientation: 0.0,
        };
        let img = generate_pattern(&spec).unwrap();
        let c = 47.5;
        for (x, y) in [(90usize, 47usize), (47, 90), (10, 10), (70, 20), (5, 60)] {
            let phi = (y as f64 - c).atan2(x as f64 - c);
            let b = if (phi * f64::from(spokes) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0)
                < 0.5
            {
                1.0f32
            } else {
                0.0
            };
            assert_eq!(img.get(x, y, 0), b, "pixel ({x}, {y})");
        }
    }

    #[test]
    fn wedge_period_shrinks_along_the_sweep() {
        // Period sweeps 16 → 4 px left to right: crossings get denser, so
        // the right half must hold more transitions than the left half.
        let spec = PatternSpec {
            kind: PatternKind::ResolutionWedge {
                period_near: 16.0,
                period_far: 4.0,
            },
            size: 128,
            contrast: 1.0,
            orientation: 0.0,
        };
        let img = generate_pattern(&spec).unwrap();
        let transitions = |range: std::ops::Range<usize>| -> usize {
            range
                .clone()
                .zip(range.skip(1))
                .filter(|&(a, b)| img.get(a, 0, 0) != img.get(b, 0, 0))
                .count()
        };
        let left = transitions(0..64);
        let right = transitions(64..128);
        assert!(
            right > left + 2,
            "left {left} vs right {right} transitions"
        );
    }

    #[test]
    fn wedge_phase_integrates_the_local_frequency() {
        // dφ/du at u must equal 1/p(u); check by central differences.
        let (p0, p1, len) = (3.0, 12.0, 127.0);
        for u in [1.0, 30.0, 63.5, 100.0, 126.0] {
            let h = 1e-5;
            let dphi = (wedge_phase(u + h, p0, p1, len) - wedge_phase(u - h, p0, p1, len))
                / (2.0 * h);
            let p_u = p0 + (p1 - p0) * u / len;
            assert!((dphi - 1.0 / p_u).abs() < 1e-8, "u = {u}");
        }
        // Constant-period wedge degenerates to plain bars.
        assert!((wedge_phase(50.0, 8.0, 8.0, 127.0) - 50.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn net_is_product_of_orthogonal_waves() {
        let spec = PatternSpec {
            kind: PatternKind::ResolutionNet { period: 6.0 },
            size: 64,
            contrast: 1.0,
            orientation: 0.0,
        };
        let img = generate_pattern(&spec).unwrap();
        for (x, y) in [(0usize, 0usize), (4, 1), (1, 4), (4, 4), (10, 22)] {
            let bx = if (x as f64 / 6.0).rem_euclid(1.0) < 0.5 { 1.0 } else { 0.0 };
            let by = if (y as f64 / 6.0).rem_euclid(1.0) < 0.5 { 1.0 } else { 0.0 };
            assert_eq!(img.get(x, y, 2), (bx * by) as f32);
        }
    }

    #[test]
    fn sub_nyquist_periods_are_rejected() {
        assert!(matches!(
            generate_pattern(&bars(1.5, 1.0, 0.0)),
            Err(DistortionError::InvalidSpec(_))
        ));
        assert!(generate_pattern(&bars(2.0, 1.0, 0.0)).is_ok());
    }

    #[test]
    fn bad_size_contrast_and_spokes_are_rejected() {
        let mut spec = bars(8.0, 1.0, 0.0);
        spec.size = 48;
        assert!(matches!(
            generate_pattern(&spec),
            Err(DistortionError::InvalidSpec(_))
        ));
        assert!(generate_pattern(&bars(8.0, 0.0, 0.0)).is_err());
        assert!(generate_pattern(&bars(8.0, 1.1, 0.0)).is_err());
        let star = PatternSpec {
            kind: PatternKind::SiemensStar { spokes: 80 },
            size: 64, // cap is floor(π·64/4) = 50
            contrast: 1.0,
            orientation: 0.0,
        };
        assert!(matches!(
            generate_pattern(&star),
            Err(DistortionError::InvalidSpec(_))
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = PatternSpec {
            kind: PatternKind::SiemensStar { spokes: 36 },
            size: 96,
            contrast: 0.7,
            orientation: 1.1,
        };
        assert_eq!(
            generate_pattern(&spec).unwrap(),
            generate_pattern(&spec).unwrap()
        );
    }

    proptest! {
        #[test]
        fn charts_are_grayscale_with_contrast_bounded_values(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_pattern_spec(96, &mut rng);
            let img = generate_pattern(&spec).unwrap();
            let lo = (0.5 - spec.contrast / 2.0) as f32;
            let hi = (0.5 + spec.contrast / 2.0) as f32;
            for px in img.data().chunks_exact(3) {
                prop_assert_eq!(px[0], px[1]);
                prop_assert_eq!(px[1], px[2]);
                prop_assert!(px[0] == lo || px[0] == hi);
            }
        }

        #[test]
        fn sampled_specs_respect_the_corpus_ranges(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_pattern_spec(128, &mut rng);
            prop_assert!(spec.contrast >= 0.4 && spec.contrast <= 1.0);
            prop_assert!(spec.orientation >= 0.0 && spec.orientation < std::f64::consts::PI);
            let period_ok = |p: f64| (2.5..=16.0).contains(&p);
            match spec.kind {
                PatternKind::ResolutionBars { period }
                | PatternKind::ResolutionNet { period }
                | PatternKind::ConcentricRings { period } => prop_assert!(period_ok(period)),
                PatternKind::ResolutionWedge { period_near, period_far } => {
                    prop_assert!(period_ok(period_near) && period_ok(period_far));
                }
                PatternKind::SiemensStar { spokes } => {
                    prop_assert!((16..=72).contains(&spokes));
                }
            }
            // Every sampled spec must actually render.
            prop_assert!(generate_pattern(&spec).is_ok());
        }
    }
}
