use image::imageops::{self, FilterType};
use image::RgbImage;

use super::{ColorImage, GrayImage};

/// Longest image side processed without downscaling.
pub const MAX_CAPTURE_SIDE: usize = 640;

/// BT.601 luma, rounded to nearest.
pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let pixels = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| {
            let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("dimensions come from a valid image")
}

/// Bilinear downscale so neither side exceeds [`MAX_CAPTURE_SIDE`], keeping
/// the aspect ratio. Images already within bounds are returned unchanged.
pub fn fit_capture_bounds(img: ColorImage) -> ColorImage {
    let (w, h) = (img.width(), img.height());
    let longest = w.max(h);
    if longest <= MAX_CAPTURE_SIDE {
        return img;
    }
    let scale = MAX_CAPTURE_SIDE as f64 / longest as f64;
    let nw = ((w as f64 * scale).round() as usize).clamp(1, MAX_CAPTURE_SIDE);
    let nh = ((h as f64 * scale).round() as usize).clamp(1, MAX_CAPTURE_SIDE);

    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let src = RgbImage::from_raw(w as u32, h as u32, raw).expect("buffer matches dimensions");
    let resized = imageops::resize(&src, nw as u32, nh as u32, FilterType::Triangle);
    let pixels = resized.pixels().map(|p| p.0).collect();
    ColorImage::new(nw, nh, pixels).expect("resized dimensions are positive")
}
