use super::BinaryImage;

/// Binary dilation by a `(2r+1) x (2r+1)` square. Radius 0 is the identity.
///
/// Separable: a horizontal max pass followed by a vertical one.
pub fn dilate(img: &BinaryImage, radius: usize) -> BinaryImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let horizontal = BinaryImage::from_fn(w, h, |x, y| {
        let x0 = x.saturating_sub(radius);
        let x1 = (x + radius).min(w - 1);
        (x0..=x1).any(|xx| img.get(xx, y))
    });
    BinaryImage::from_fn(w, h, |x, y| {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(h - 1);
        (y0..=y1).any(|yy| horizontal.get(x, yy))
    })
}
