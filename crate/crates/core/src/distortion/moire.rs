//! Moire synthesis: unfiltered bicubic downscale followed by upscale back.
//!
//! Downscaling point-samples the source through a Keys bicubic kernel with
//! no anti-alias pre-filter, so frequencies above the reduced Nyquist rate
//! fold down to aliases; upscaling back to the original size re-registers
//! the result with the input without removing those aliases.

use super::DistortionError;
use crate::imaging::ImageRgb;

/// Downscaled sides below this make 32x32 patch extraction impossible.
const MIN_DOWN_DIM: usize = 32;

/// Keys cubic convolution kernel with a = −0.5 (the common bicubic default).
///
/// Exactly interpolating: k(0) = 1 and k(±1) = k(±2) = 0 without rounding
/// error, so resampling onto the same grid reproduces the input bit-for-bit.
fn keys_cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// The four source taps and normalized kernel weights for one output sample.
#[derive(Clone, Copy)]
struct Taps {
    idx: [usize; 4],
    w: [f64; 4],
}

impl Taps {
    #[inline]
    fn apply(&self, data: &[f64], base: usize, stride: usize) -> f64 {
        self.w[0] * data[base + self.idx[0] * stride]
            + self.w[1] * data[base + self.idx[1] * stride]
            + self.w[2] * data[base + self.idx[2] * stride]
            + self.w[3] * data[base + self.idx[3] * stride]
    }
}

/// Precomputes taps for a 1-D resample from `in_len` to `out_len` samples.
///
/// Output sample `o` reads the source at `(o + 0.5)·(in/out) − 0.5`
/// (center-aligned grids); taps outside the source clamp to the edge, and
/// weights are renormalized to sum to 1 so edge samples stay in range.
fn tap_weights(in_len: usize, out_len: usize) -> Vec<Taps> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = (o as f64 + 0.5) * scale - 0.5;
            let i0 = src.floor();
            let t = src - i0;
            let base = i0 as i64;
            let mut w = [
                keys_cubic(t + 1.0),
                keys_cubic(t),
                keys_cubic(1.0 - t),
                keys_cubic(2.0 - t),
            ];
            let sum: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= sum;
            }
            let max = in_len as i64 - 1;
            let idx = [
                (base - 1).clamp(0, max) as usize,
                base.clamp(0, max) as usize,
                (base + 1).clamp(0, max) as usize,
                (base + 2).clamp(0, max) as usize,
            ];
            Taps { idx, w }
        })
        .collect()
}

/// Separable bicubic resample of one `w` x `h` plane to `ow` x `oh`.
fn resample_plane(src: &[f64], w: usize, h: usize, ow: usize, oh: usize) -> Vec<f64> {
    let htaps = tap_weights(w, ow);
    let mut mid = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out_row = &mut mid[y * ow..(y + 1) * ow];
        for (o, taps) in htaps.iter().enumerate() {
            out_row[o] = taps.apply(row, 0, 1);
        }
    }
    let vtaps = tap_weights(h, oh);
    let mut out = vec![0.0; ow * oh];
    for (o, taps) in vtaps.iter().enumerate() {
        let out_row = &mut out[o * ow..(o + 1) * ow];
        for (x, slot) in out_row.iter_mut().enumerate() {
            *slot = taps.apply(&mid, x, ow);
        }
    }
    out
}

fn clamp_unit(values: &mut [f64]) {
    for v in values {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Bicubic-downscales `img` by `factor` (floored output sides), then
/// upscales back to the original dimensions with the same kernel.
///
/// `factor` must be finite and ≥ 1, and both floored downscaled sides must
/// stay ≥ 32 px. Factor 1 reproduces the input bit-for-bit.
pub fn simulate_moire(img: &ImageRgb, factor: f64) -> Result<ImageRgb, DistortionError> {
    if !factor.is_finite() || factor < 1.0 {
        return Err(DistortionError::FactorOutOfRange(factor));
    }
    let (w, h) = (img.width(), img.height());
    let dw = (w as f64 / factor).floor() as usize;
    let dh = (h as f64 / factor).floor() as usize;
    if dw < MIN_DOWN_DIM || dh < MIN_DOWN_DIM {
        return Err(DistortionError::ImageTooSmall {
            width: w,
            height: h,
            factor,
            min: MIN_DOWN_DIM,
        });
    }
    let mut out = img.clone();
    let mut plane = vec![0.0f64; w * h];
    for c in 0..3 {
        for y in 0..h {
            for x in 0..w {
                plane[y * w + x] = f64::from(img.get(x, y, c));
            }
        }
        let mut down = resample_plane(&plane, w, h, dw, dh);
        clamp_unit(&mut down);
        let mut up = resample_plane(&down, dw, dh, w, h);
        clamp_unit(&mut up);
        for y in 0..h {
            for x in 0..w {
                out.set(x, y, c, up[y * w + x] as f32);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::noise_image;
    use super::*;

    #[test]
    fn kernel_interpolates_exactly_on_the_grid() {
        assert_eq!(keys_cubic(0.0), 1.0);
        assert_eq!(keys_cubic(1.0), 0.0);
        assert_eq!(keys_cubic(-1.0), 0.0);
        assert_eq!(keys_cubic(2.0), 0.0);
        assert_eq!(keys_cubic(2.5), 0.0);
    }

    #[test]
    fn kernel_matches_piecewise_definition_off_grid() {
        // Direct evaluation of the two cubic branches with a = −0.5.
        let first = |x: f64| 1.5 * x * x * x - 2.5 * x * x + 1.0;
        let second = |x: f64| -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
        for x in [0.1, 0.25, 0.5, 0.75, 0.99] {
            assert!((keys_cubic(x) - first(x)).abs() < 1e-15, "x = {x}");
            assert!((keys_cubic(-x) - first(x)).abs() < 1e-15, "x = -{x}");
        }
        for x in [1.01, 1.25, 1.5, 1.75, 1.99] {
            assert!((keys_cubic(x) - second(x)).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn factor_one_is_bit_identical() {
        let img = noise_image(48, 40, 1);
        assert_eq!(simulate_moire(&img, 1.0).unwrap(), img);
    }

    #[test]
    fn factor_below_one_or_nonfinite_is_rejected() {
        let img = noise_image(64, 64, 2);
        for bad in [0.99, 0.0, -2.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                simulate_moire(&img, bad),
                Err(DistortionError::FactorOutOfRange(_))
            ));
        }
    }

    #[test]
    fn too_small_downscale_is_rejected() {
        let img = noise_image(48, 48, 3);
        // floor(48 / 2) = 24 < 32.
        assert!(matches!(
            simulate_moire(&img, 2.0),
            Err(DistortionError::ImageTooSmall { .. })
        ));
        assert!(simulate_moire(&img, 1.5).is_ok());
    }

    #[test]
    fn constant_image_stays_constant() {
        let mut img = ImageRgb::new(96, 96);
        for y in 0..96 {
            for x in 0..96 {
                img.set(x, y, 0, 0.3);
                img.set(x, y, 1, 0.62);
                img.set(x, y, 2, 0.85);
            }
        }
        let out = simulate_moire(&img, 2.7).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn output_is_registered_with_input() {
        let img = noise_image(80, 96, 4);
        let out = simulate_moire(&img, 2.0).unwrap();
        assert_eq!(out.width(), img.width());
        assert_eq!(out.height(), img.height());
    }

    fn max_abs_err(a: &ImageRgb, b: &ImageRgb, border: usize) -> f32 {
        let mut max = 0.0f32;
        for y in border..a.height() - border {
            for x in border..a.width() - border {
                max = max.max((a.get(x, y, 0) - b.get(x, y, 0)).abs());
            }
        }
        max
    }

    #[test]
    fn smooth_gradients_survive_the_round_trip() {
        // A linear ramp is band-limited at any factor; cubic interpolation
        // reproduces linear functions, so only edge clamping perturbs it.
        let n = 128;
        let mut img = ImageRgb::new(n, n);
        for y in 0..n {
            for x in 0..n {
                let v = ((x as f64 + 2.0 * y as f64) / (6.0 * n as f64) + 0.3) as f32;
                for c in 0..3 {
                    img.set(x, y, c, v);
                }
            }
        }
        for factor in [1.5, 2.0, 3.0] {
            let out = simulate_moire(&img, factor).unwrap();
            let err = max_abs_err(&out, &img, 0);
            assert!(err < 0.02, "factor {factor}: max round-trip error {err}");
        }
    }

    #[test]
    fn band_limited_sinusoid_survives_away_from_edges() {
        // 0.05 cycles/px is far below the reduced Nyquist rate 0.5/3. The
        // interior must come back nearly unchanged; the outermost rows and
        // columns see clamp-to-edge extrapolation and are excluded.
        let n = 128;
        let mut img = ImageRgb::new(n, n);
        for y in 0..n {
            for x in 0..n {
                let wave = 0.2 * (2.0 * std::f64::consts::PI * 0.05 * x as f64).sin();
                let v = (0.5 + wave) as f32;
                for c in 0..3 {
                    img.set(x, y, c, v);
                }
            }
        }
        let out = simulate_moire(&img, 3.0).unwrap();
        let err = max_abs_err(&out, &img, 4);
        assert!(err < 0.02, "interior round-trip error {err}");
    }

    #[test]
    fn super_nyquist_content_is_changed() {
        // A 0.4 cycles/px sinusoid downsampled by 2 cannot survive; the
        // round trip must visibly differ from the input.
        let n = 96;
        let mut img = ImageRgb::new(n, n);
        for y in 0..n {
            for x in 0..n {
                let v = (0.5 + 0.4 * (2.0 * std::f64::consts::PI * 0.4 * x as f64).sin()) as f32;
                for c in 0..3 {
                    img.set(x, y, c, v);
                }
            }
        }
        let out = simulate_moire(&img, 2.0).unwrap();
        let mean_err: f64 = out
            .data()
            .iter()
            .zip(img.data())
            .map(|(a, b)| f64::from((a - b).abs()))
            .sum::<f64>()
            / img.data().len() as f64;
        assert!(mean_err > 0.05, "mean aliasing error {mean_err}");
    }
}
