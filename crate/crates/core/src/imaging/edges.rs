use super::{require_min_size, EdgeMap, GrayImage};
use crate::Result;

/// Absolute response of the horizontal-derivative Sobel kernel
///
/// ```text
/// -1 0 1
/// -2 0 2
/// -1 0 1
/// ```
///
/// which fires on vertical edges such as character strokes. Borders use edge
/// replication.
pub fn sobel_vertical(img: &GrayImage) -> Result<EdgeMap> {
    let (w, h) = (img.width(), img.height());
    require_min_size(w, h, 3)?;

    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let col = |c: usize| img.get(c, up) as i32 + 2 * img.get(c, y) as i32 + img.get(c, down) as i32;
            values.push((col(right) - col(left)).unsigned_abs() as f32);
        }
    }
    EdgeMap::new(w, h, values)
}
