//! Pixel-level primitives shared by every pipeline stage.
//!
//! Rasters are stored row-major. Coordinates are `(x, y)` with `x` the column
//! and `y` the row, origin at the top-left corner.

mod color;
mod edges;
mod glyph;
pub mod io;
mod morphology;
mod threshold;
mod transform;

pub use color::{fit_capture_bounds, to_grayscale, MAX_CAPTURE_SIDE};
pub use edges::sobel_vertical;
pub use glyph::{normalize_glyph, Glyph, GLYPH_SIZE};
pub use morphology::dilate;
pub use threshold::{binarize, otsu_threshold, IntensityThreshold};
pub use transform::{deskew, deskew_with, deslant, rotate_gray, shear_binary, AngleSearch};

use crate::{Error, Rect, Result};

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(ColorImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        ColorImage { width, height, pixels: vec![rgb; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }
}

/// 8-bit intensity raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(GrayImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel with coordinates clamped into the image (edge replication).
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn crop(&self, r: Rect) -> Result<GrayImage> {
        if r.is_empty() || !r.fits_in(self.width, self.height) {
            return Err(Error::BoxOutOfBounds(r));
        }
        Ok(GrayImage::from_fn(r.width, r.height, |x, y| self.get(r.x + x, r.y + y)))
    }
}

/// Real-valued, non-negative edge magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0), "edge magnitudes must be finite and non-negative");
        Ok(EdgeMap { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Linear rescale of the magnitudes into 0..=255, for debug dumps.
    pub fn to_gray(&self) -> GrayImage {
        let max = self.values.iter().copied().fold(0.0f32, f32::max);
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.values.iter().map(|v| (v * scale).round() as u8).collect(),
        }
    }
}

/// Two-level raster; 1 is foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        assert!(bits.iter().all(|&b| b <= 1), "binary image bits must be 0 or 1");
        Ok(BinaryImage { width, height, bits })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryImage { width, height, bits: vec![0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y) as u8);
            }
        }
        BinaryImage { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn crop(&self, r: Rect) -> Result<BinaryImage> {
        if r.is_empty() || !r.fits_in(self.width, self.height) {
            return Err(Error::BoxOutOfBounds(r));
        }
        Ok(BinaryImage::from_fn(r.width, r.height, |x, y| self.get(r.x + x, r.y + y)))
    }

    /// Foreground as 255 on a 0 background.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage { width: self.width, height: self.height, pixels: self.bits.iter().map(|&b| b * 255).collect() }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ImageTooSmall { width, height, min: 1 });
    }
    assert_eq!(len, width * height, "pixel buffer does not match {width}x{height}");
    Ok(())
}

pub(crate) fn require_min_size(width: usize, height: usize, min: usize) -> Result<()> {
    if width < min || height < min {
        Err(Error::ImageTooSmall { width, height, min })
    } else {
        Ok(())
    }
}
