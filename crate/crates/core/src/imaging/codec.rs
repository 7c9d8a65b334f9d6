//! PNG and binary-PPM codecs with a pinned 8-bit quantization rule.
//!
//! Samples are quantized as `round(v * 255)` with ties away from zero, and
//! dequantized as `byte / 255`. Loading a file that was saved from
//! already-quantized samples reproduces those samples exactly, so a
//! save/load round trip is the identity on quantized images.

use std::fs;
use std::io::{self, BufWriter, Cursor, Write};
use std::path::Path;

use super::{ImageError, ImageRgb};

/// On-disk formats understood by [`save_image`] and [`load_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveFormat {
    Png,
    /// Binary PPM (`P6`, maxval 255).
    Ppm,
}

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Quantizes one sample in `[0, 1]` to a byte, rounding ties away from zero.
#[inline]
fn quantize(v: f32) -> u8 {
    (v * 255.0).round() as u8
}

#[inline]
fn dequantize(b: u8) -> f32 {
    f32::from(b) / 255.0
}

fn quantize_image(img: &ImageRgb) -> Vec<u8> {
    img.data().iter().copied().map(quantize).collect()
}

fn bytes_to_image(width: usize, height: usize, rgb: &[u8]) -> ImageRgb {
    let mut out = ImageRgb::new(width, height);
    for (y, row) in rgb.chunks_exact(width * 3).enumerate() {
        for (x, px) in row.chunks_exact(3).enumerate() {
            out.set(x, y, 0, dequantize(px[0]));
            out.set(x, y, 1, dequantize(px[1]));
            out.set(x, y, 2, dequantize(px[2]));
        }
    }
    out
}

/// Loads an 8-bit RGB or grayscale PNG, or a binary PPM, from `path`.
///
/// The format is detected from the file's magic bytes, not its extension.
/// Grayscale is replicated to three channels; palette, 16-bit, and
/// alpha-carrying inputs are rejected as [`ImageError::UnsupportedFormat`].
pub fn load_image(path: &Path) -> Result<ImageRgb, ImageError> {
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            ImageError::FileNotFound(path.display().to_string())
        } else {
            ImageError::Io(e)
        }
    })?;
    if bytes.starts_with(&PNG_MAGIC) {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(&bytes)
    } else {
        Err(ImageError::UnsupportedFormat(format!(
            "{}: not a PNG or binary PPM file",
            path.display()
        )))
    }
}

/// Saves `img` to `path`, quantizing samples to 8 bits.
pub fn save_image(img: &ImageRgb, path: &Path, format: SaveFormat) -> Result<(), ImageError> {
    let rgb = quantize_image(img);
    match format {
        SaveFormat::Png => {
            let file = fs::File::create(path)?;
            let mut enc = png::Encoder::new(
                BufWriter::new(file),
                img.width() as u32,
                img.height() as u32,
            );
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(map_png_encode)?;
            writer.write_image_data(&rgb).map_err(map_png_encode)?;
            writer.finish().map_err(map_png_encode)?;
        }
        SaveFormat::Ppm => {
            let file = fs::File::create(path)?;
            let mut w = BufWriter::new(file);
            write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
            w.write_all(&rgb)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn map_png_encode(e: png::EncodingError) -> ImageError {
    match e {
        png::EncodingError::IoError(io) => ImageError::Io(io),
        other => ImageError::CorruptData(other.to_string()),
    }
}

fn decode_png(bytes: &[u8]) -> Result<ImageRgb, ImageError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImageError::CorruptData(e.to_string()))?;
    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    let (color, depth) = (info.color_type, info.bit_depth);
    match (color, depth) {
        (png::ColorType::Rgb | png::ColorType::Grayscale, png::BitDepth::Eight) => {}
        other => {
            return Err(ImageError::UnsupportedFormat(format!(
                "PNG with color type {:?} at bit depth {:?} (8-bit RGB or grayscale required)",
                other.0, other.1
            )))
        }
    }
    let buf_size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::CorruptData("PNG dimensions overflow".into()))?;
    let mut buf = vec![0u8; buf_size];
    let out = reader
        .next_frame(&mut buf)
        .map_err(|e| ImageError::CorruptData(e.to_string()))?;
    buf.truncate(out.buffer_size());
    if width == 0 || height == 0 {
        return Err(ImageError::CorruptData("PNG with zero dimension".into()));
    }
    let rgb: Vec<u8> = match color {
        png::ColorType::Rgb => buf,
        _ => buf.iter().flat_map(|&g| [g, g, g]).collect(),
    };
    if rgb.len() != width * height * 3 {
        return Err(ImageError::CorruptData(format!(
            "PNG pixel data has {} bytes, expected {}",
            rgb.len(),
            width * height * 3
        )));
    }
    Ok(bytes_to_image(width, height, &rgb))
}

/// Parses a binary PPM: `P6`, whitespace-separated width/height/maxval with
/// optional `#` comments, one whitespace byte, then raw RGB triples.
fn decode_ppm(bytes: &[u8]) -> Result<ImageRgb, ImageError> {
    let mut pos = 2; // past "P6"
    let width = read_ppm_number(bytes, &mut pos)?;
    let height = read_ppm_number(bytes, &mut pos)?;
    let maxval = read_ppm_number(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat(format!(
            "PPM maxval {maxval} (only 255 supported)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::CorruptData("PPM with zero dimension".into()));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageError::CorruptData("PPM header not terminated".into())),
    }
    let need = width * height * 3;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| ImageError::CorruptData("PPM pixel data truncated".into()))?;
    Ok(bytes_to_image(width, height, raster))
}

/// Reads one decimal integer, skipping leading whitespace and `#` comments.
fn read_ppm_number(bytes: &[u8], pos: &mut usize) -> Result<usize, ImageError> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while !matches!(bytes.get(*pos), None | Some(b'\n')) {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            _ => return Err(ImageError::CorruptData("PPM header truncated".into())),
        }
    }
    let mut value = 0usize;
    while let Some(b) = bytes.get(*pos).filter(|b| b.is_ascii_digit()) {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(usize::from(b - b'0')))
            .ok_or_else(|| ImageError::CorruptData("PPM header value overflow".into()))?;
        *pos += 1;
    }
    Ok(value)
}
