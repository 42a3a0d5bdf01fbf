use super::BinaryImage;
use crate::{Error, Rect, Result};

/// Side of the canonical character grid.
pub const GLYPH_SIZE: usize = 32;

/// Size-normalized character bitmap, `GLYPH_SIZE` x `GLYPH_SIZE`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Glyph {
    bits: Vec<u8>,
}

impl Glyph {
    pub fn from_bits(bits: Vec<u8>) -> Option<Glyph> {
        (bits.len() == GLYPH_SIZE * GLYPH_SIZE && bits.iter().all(|&b| b <= 1)).then_some(Glyph { bits })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> bool) -> Glyph {
        let mut bits = Vec::with_capacity(GLYPH_SIZE * GLYPH_SIZE);
        for y in 0..GLYPH_SIZE {
            for x in 0..GLYPH_SIZE {
                bits.push(f(x, y) as u8);
            }
        }
        Glyph { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * GLYPH_SIZE + x] != 0
    }

    pub fn complement(&self) -> Glyph {
        Glyph { bits: self.bits.iter().map(|b| 1 - b).collect() }
    }

    pub fn to_binary(&self) -> BinaryImage {
        BinaryImage::new(GLYPH_SIZE, GLYPH_SIZE, self.bits.clone()).expect("glyph is 32x32")
    }
}

/// Stretches the contents of `bounds` onto the canonical grid with an affine
/// (scale + translate) map and bilinear interpolation, then re-binarizes at
/// 0.5. The aspect ratio is not preserved.
pub fn normalize_glyph(img: &BinaryImage, bounds: Rect) -> Result<Glyph> {
    if bounds.is_empty() || !bounds.fits_in(img.width(), img.height()) {
        return Err(Error::BoxOutOfBounds(bounds));
    }
    let any = (bounds.y..bounds.bottom()).any(|y| (bounds.x..bounds.right()).any(|x| img.get(x, y)));
    if !any {
        return Err(Error::EmptyBox);
    }

    let sx = bounds.width as f64 / GLYPH_SIZE as f64;
    let sy = bounds.height as f64 / GLYPH_SIZE as f64;
    let at = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, bounds.width as isize - 1) as usize;
        let y = y.clamp(0, bounds.height as isize - 1) as usize;
        img.get(bounds.x + x, bounds.y + y) as u8 as f64
    };
    Ok(Glyph::from_fn(|gx, gy| {
        // pixel centers map onto pixel centers
        let px = (gx as f64 + 0.5) * sx - 0.5;
        let py = (gy as f64 + 0.5) * sy - 0.5;
        let x0 = px.floor();
        let y0 = py.floor();
        let (fx, fy) = (px - x0, py - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
        let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
        top * (1.0 - fy) + bottom * fy >= 0.5
    }))
}
