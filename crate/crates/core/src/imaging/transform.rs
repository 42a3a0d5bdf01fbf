//! Rotation and shear, plus the projection-profile searches that use them to
//! undo skew (whole-frame rotation) and slant (character shear).

use serde::{Deserialize, Serialize};

use super::{require_min_size, sobel_vertical, BinaryImage, EdgeMap, GrayImage};
use crate::Result;

/// Symmetric angle grid `-max_deg..=max_deg` in steps of `step_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSearch {
    pub max_deg: f64,
    pub step_deg: f64,
}

impl AngleSearch {
    pub const SKEW: AngleSearch = AngleSearch { max_deg: 5.0, step_deg: 0.5 };
    pub const SLANT: AngleSearch = AngleSearch { max_deg: 15.0, step_deg: 1.0 };

    /// Candidate angles in preference order: 0, then growing magnitude with
    /// the negative angle first. Scanning in this order and only replacing the
    /// incumbent on a strictly better score implements the tie rule.
    fn candidates(&self) -> Vec<f64> {
        let steps = (self.max_deg / self.step_deg + 1e-9).floor() as i64;
        let mut out = vec![0.0];
        for k in 1..=steps {
            let a = k as f64 * self.step_deg;
            out.push(-a);
            out.push(a);
        }
        out
    }
}

/// Rotates `img` about its center by `deg` degrees (positive turns the content
/// counter-clockwise on screen). Bilinear sampling; samples falling outside
/// the source replicate the nearest border pixel.
pub fn rotate_gray(img: &GrayImage, deg: f64) -> GrayImage {
    if deg == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let (sin, cos) = deg.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    GrayImage::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        sample_bilinear(img, sx, sy).round().clamp(0.0, 255.0) as u8
    })
}

fn sample_bilinear(img: &GrayImage, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let p = |x: isize, y: isize| img.get_clamped(x, y) as f64;
    let top = p(x0, y0) * (1.0 - fx) + p(x0 + 1, y0) * fx;
    let bottom = p(x0, y0 + 1) * (1.0 - fx) + p(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Variance of the row-sum profile of `edges` after rotation by `deg`.
///
/// Each non-zero edge sample is projected forward into the rotated frame and
/// split linearly between the two nearest rows; samples leaving the frame are
/// dropped, as they would be by rotating with zero fill.
fn row_profile_variance(edges: &EdgeMap, deg: f64) -> f64 {
    let (w, h) = (edges.width(), edges.height());
    let (sin, cos) = deg.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let mut rows = vec![0.0f64; h];
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let v = edges.get(x, y);
            if v == 0.0 {
                continue;
            }
            let dx = x as f64 - cx;
            let qx = cx + dx * cos + dy * sin;
            if qx < -0.5 || qx >= w as f64 - 0.5 {
                continue;
            }
            let qy = cy - dx * sin + dy * cos;
            let r0 = qy.floor();
            let f = qy - r0;
            let r0 = r0 as isize;
            if r0 >= 0 && (r0 as usize) < h {
                rows[r0 as usize] += v as f64 * (1.0 - f);
            }
            if f > 0.0 && r0 + 1 >= 0 && ((r0 + 1) as usize) < h {
                rows[(r0 + 1) as usize] += v as f64 * f;
            }
        }
    }
    variance(&rows)
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

fn best_angle(search: AngleSearch, mut score: impl FnMut(f64) -> f64) -> f64 {
    let mut best = (0.0, f64::NEG_INFINITY);
    for a in search.candidates() {
        let s = score(a);
        if s > best.1 {
            best = (a, s);
        }
    }
    best.0
}

/// Skew correction over ±5° in 0.5° steps. Returns the corrected image and
/// the rotation that was applied to it.
pub fn deskew(img: &GrayImage) -> Result<(GrayImage, f64)> {
    deskew_with(img, AngleSearch::SKEW)
}

pub fn deskew_with(img: &GrayImage, search: AngleSearch) -> Result<(GrayImage, f64)> {
    require_min_size(img.width(), img.height(), 3)?;
    let edges = sobel_vertical(img)?;
    let angle = best_angle(search, |a| row_profile_variance(&edges, a));
    Ok((rotate_gray(img, angle), angle))
}

/// Horizontal shear about the middle row: content at `(x, y)` moves to
/// `x - (y - cy) * tan(deg)`. Nearest-neighbour; dimensions are preserved and
/// pixels sheared out of frame are lost.
pub fn shear_binary(img: &BinaryImage, deg: f64) -> BinaryImage {
    if deg == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let tan = deg.to_radians().tan();
    let cy = (h as f64 - 1.0) / 2.0;
    BinaryImage::from_fn(w, h, |x, y| {
        let sx = (x as f64 + (y as f64 - cy) * tan).round();
        sx >= 0.0 && (sx as usize) < w && img.get(sx as usize, y)
    })
}

fn column_profile_variance(img: &BinaryImage, deg: f64) -> f64 {
    let (w, h) = (img.width(), img.height());
    let tan = deg.to_radians().tan();
    let cy = (h as f64 - 1.0) / 2.0;
    let mut cols = vec![0.0f64; w];
    for y in 0..h {
        let shift = (y as f64 - cy) * tan;
        for x in 0..w {
            if img.get(x, y) {
                let qx = (x as f64 - shift).round();
                if qx >= 0.0 && (qx as usize) < w {
                    cols[qx as usize] += 1.0;
                }
            }
        }
    }
    variance(&cols)
}

/// Slant normalization: the shear in ±15° (1° steps) that maximizes the
/// variance of the column-sum profile, i.e. makes strokes most vertical.
/// Returns the sheared image and the applied shear angle.
pub fn deslant(img: &BinaryImage) -> (BinaryImage, f64) {
    if img.count_ones() == 0 {
        return (img.clone(), 0.0);
    }
    let angle = best_angle(AngleSearch::SLANT, |a| column_profile_variance(img, a));
    (shear_binary(img, angle), angle)
}
