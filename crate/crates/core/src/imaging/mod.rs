//! Image containers, codecs, pixel arithmetic, and rank statistics.
//!
//! Images are interleaved RGB with `f32` samples in `[0, 1]`, row-major from
//! the top-left corner. All pixel math in this crate runs on these in-memory
//! buffers; files only enter the picture through [`load_image`] and
//! [`save_image`], which quantize to 8 bits per sample.

mod codec;
mod ranks;

pub use codec::{load_image, save_image, SaveFormat};
pub use ranks::{average_ranks, spearman, RankVector};

use thiserror::Error;

/// Side length of the square patches consumed by the scorer network.
pub const PATCH_SIZE: usize = 32;

/// Errors from image I/O, pixel arithmetic, and rank statistics.
#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image data: {0}")]
    CorruptData(String),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("rectangle {rect:?} out of bounds for {width}x{height} image")]
    OutOfBounds {
        rect: Rect,
        width: usize,
        height: usize,
    },
    #[error("sample buffer holds {0} values, expected {1}")]
    BufferSize(usize, usize),
    #[error("sample {0} outside [0, 1]")]
    SampleRange(f32),
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: zero variance")]
    DegenerateInput,
    #[error("invalid rank vector: {0}")]
    InvalidRanks(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Axis-aligned rectangle in pixel coordinates, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    /// True if the two rectangles share at least one pixel.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    /// True if the rectangle lies fully inside a `width` x `height` image.
    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w > 0 && self.h > 0 && self.x + self.w <= width && self.y + self.h <= height
    }
}

/// Interleaved RGB image with `f32` samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageRgb {
    /// Black image of the given size. Panics if either dimension is zero.
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        ImageRgb {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    /// Wraps an interleaved sample buffer, validating length and range.
    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self, ImageError> {
        let expected = width * height * 3;
        if width == 0 || height == 0 || data.len() != expected {
            return Err(ImageError::BufferSize(data.len(), expected));
        }
        if let Some(&bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImageError::SampleRange(bad));
        }
        Ok(ImageRgb {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Sample at pixel (`x`, `y`), channel `c` (0 = R, 1 = G, 2 = B).
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * 3 + c] = v;
    }

    /// Interleaved samples, row-major.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// One interleaved pixel row.
    #[inline]
    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width * 3..(y + 1) * self.width * 3]
    }
}

/// Fixed-size patch cut from a source image, tagged with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    data: Vec<f32>,
    source_rect: Rect,
}

impl Patch {
    /// Copies the [`PATCH_SIZE`] x [`PATCH_SIZE`] region at `rect` out of `img`.
    pub fn from_image(img: &ImageRgb, rect: Rect) -> Result<Self, ImageError> {
        if rect.w != PATCH_SIZE || rect.h != PATCH_SIZE {
            return Err(ImageError::DimensionMismatch(
                rect.w, rect.h, PATCH_SIZE, PATCH_SIZE,
            ));
        }
        if !rect.fits_in(img.width(), img.height()) {
            return Err(ImageError::OutOfBounds {
                rect,
                width: img.width(),
                height: img.height(),
            });
        }
        let mut data = Vec::with_capacity(PATCH_SIZE * PATCH_SIZE * 3);
        for y in rect.y..rect.y + PATCH_SIZE {
            let row = img.row(y);
            data.extend_from_slice(&row[rect.x * 3..(rect.x + PATCH_SIZE) * 3]);
        }
        Ok(Patch {
            data,
            source_rect: rect,
        })
    }

    /// Wraps a raw sample buffer (interleaved RGB, [`PATCH_SIZE`] squared pixels).
    pub fn from_data(data: Vec<f32>, source_rect: Rect) -> Result<Self, ImageError> {
        let img = ImageRgb::from_data(PATCH_SIZE, PATCH_SIZE, data)?;
        Ok(Patch {
            data: img.data,
            source_rect,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * PATCH_SIZE + x) * 3 + c]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Where in the source image this patch was cut.
    pub fn source_rect(&self) -> Rect {
        self.source_rect
    }

    /// The patch as a standalone image (for saving to disk).
    pub fn to_image(&self) -> ImageRgb {
        ImageRgb {
            width: PATCH_SIZE,
            height: PATCH_SIZE,
            data: self.data.clone(),
        }
    }
}

/// Per-pixel difference magnitude between two registered images.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl ErrorMap {
    /// Builds a map from row-major values, e.g. to combine several maps
    /// into one. Values must be finite and non-negative.
    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::CorruptData("zero-sized error map".into()));
        }
        if values.len() != width * height {
            return Err(ImageError::BufferSize(values.len(), width * height));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(ImageError::CorruptData(format!(
                "map values must be finite and non-negative, got {v}"
            )));
        }
        Ok(ErrorMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Sum of the map over `rect`, accumulated in `f64` in row-major order.
    pub fn sum_over(&self, rect: Rect) -> f64 {
        let mut acc = 0.0f64;
        for y in rect.y..rect.y + rect.h {
            for x in rect.x..rect.x + rect.w {
                acc += f64::from(self.values[y * self.width + x]);
            }
        }
        acc
    }
}

/// Per-pixel channel-maximum absolute difference of two same-sized images.
pub fn error_map(a: &ImageRgb, b: &ImageRgb) -> Result<ErrorMap, ImageError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(ImageError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let values = a
        .data
        .chunks_exact(3)
        .zip(b.data.chunks_exact(3))
        .map(|(pa, pb)| {
            let dr = (pa[0] - pb[0]).abs();
            let dg = (pa[1] - pb[1]).abs();
            let db = (pa[2] - pb[2]).abs();
            dr.max(dg).max(db)
        })
        .collect();
    Ok(ErrorMap {
        width: a.width(),
        height: a.height(),
        values,
    })
}

/// Copies the sub-image at `rect` out of `img`.
pub fn crop(img: &ImageRgb, rect: Rect) -> Result<ImageRgb, ImageError> {
    if !rect.fits_in(img.width(), img.height()) {
        return Err(ImageError::OutOfBounds {
            rect,
            width: img.width(),
            height: img.height(),
        });
    }
    let mut data = Vec::with_capacity(rect.w * rect.h * 3);
    for y in rect.y..rect.y + rect.h {
        let row = img.row(y);
        data.extend_from_slice(&row[rect.x * 3..(rect.x + rect.w) * 3]);
    }
    Ok(ImageRgb {
        width: rect.w,
        height: rect.h,
        data,
    })
}
