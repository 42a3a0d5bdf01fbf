use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle, half-open: covers columns `x..x + width`
/// and rows `y..y + height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Rect { x, y, width, height }
    }

    /// Builds a rectangle from inclusive row/column bounds.
    pub fn from_inclusive(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        Rect { x: left, y: top, width: right + 1 - left, height: bottom + 1 - top }
    }

    pub fn right(&self) -> usize {
        self.x + self.width
    }

    pub fn bottom(&self) -> usize {
        self.y + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection(other).map_or(0, |r| r.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Grows the rectangle by `pad` on every side, clamped to `width` x `height`.
    pub fn padded(&self, pad: usize, width: usize, height: usize) -> Rect {
        let x0 = self.x.saturating_sub(pad);
        let y0 = self.y.saturating_sub(pad);
        let x1 = (self.right() + pad).min(width);
        let y1 = (self.bottom() + pad).min(height);
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    /// `r0:c0:r1:c1` with exclusive end row/column.
    pub fn to_bounds_string(&self) -> String {
        format!("{}:{}:{}:{}", self.y, self.x, self.bottom(), self.right())
    }

    pub fn parse_bounds(s: &str) -> Option<Rect> {
        let parts: Vec<usize> = s.split(':').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
        match parts.as_slice() {
            &[r0, c0, r1, c1] if r1 >= r0 && c1 >= c0 => Some(Rect::new(c0, r0, c1 - c0, r1 - r0)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_of_identical_and_disjoint() {
        let a = Rect::new(10, 10, 20, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(100, 100, 5, 5)), 0.0);
        // half overlap along x: inter 10*10, union 300
        let b = Rect::new(20, 10, 20, 10);
        assert!((a.iou(&b) - 100.0 / 300.0).abs() < 1e-12);
    }

    #[test]
    fn padding_clamps_to_image() {
        let r = Rect::new(1, 0, 5, 5).padded(2, 7, 100);
        assert_eq!(r, Rect::new(0, 0, 7, 7));
    }

    #[test]
    fn bounds_string_round_trips() {
        let r = Rect::new(40, 12, 161, 30);
        assert_eq!(r.to_bounds_string(), "12:40:42:201");
        assert_eq!(Rect::parse_bounds(&r.to_bounds_string()), Some(r));
        assert_eq!(Rect::parse_bounds("1:2:3"), None);
        assert_eq!(Rect::parse_bounds("5:2:3:9"), None);
    }
}
