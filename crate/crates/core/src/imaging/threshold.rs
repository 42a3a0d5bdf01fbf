use serde::{Deserialize, Serialize};

use super::{BinaryImage, GrayImage};

/// Global intensity threshold. Pixels `<= value` form the dark class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntensityThreshold {
    pub value: u8,
    /// Only one histogram bin was occupied; `value` is that bin.
    pub degenerate: bool,
}

/// Otsu's threshold over the 256-bin histogram.
///
/// The between-class variance `w0 * w1 * (m0 - m1)^2` is compared exactly in
/// integer arithmetic so that ties resolve deterministically to the smallest
/// threshold.
pub fn otsu_threshold(img: &GrayImage) -> IntensityThreshold {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    otsu_from_histogram(&hist)
}

pub(crate) fn otsu_from_histogram(hist: &[u64; 256]) -> IntensityThreshold {
    let occupied: Vec<usize> = (0..256).filter(|&i| hist[i] > 0).collect();
    if occupied.len() <= 1 {
        let value = occupied.first().copied().unwrap_or(0) as u8;
        return IntensityThreshold { value, degenerate: true };
    }

    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, &h)| i as u64 * h).sum();

    // Scaled by total^2 the objective is (n1*s0 - n0*s1)^2 / (n0*n1), so two
    // candidates compare by cross-multiplying numerators and denominators.
    let exact = total <= 400_000;
    let mut best_t = 0usize;
    let mut best_num = 0u128;
    let mut best_den = 1u128;
    let mut best_f = -1.0f64;

    let (mut n0, mut s0) = (0u64, 0u64);
    for (t, &count) in hist.iter().enumerate() {
        n0 += count;
        s0 += t as u64 * count;
        let n1 = total - n0;
        let s1 = total_sum - s0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (n1 as i128 * s0 as i128 - n0 as i128 * s1 as i128).unsigned_abs();
        if exact {
            let num = diff * diff;
            let den = n0 as u128 * n1 as u128;
            if num * best_den > best_num * den {
                best_t = t;
                best_num = num;
                best_den = den;
            }
        } else {
            let v = (diff as f64).powi(2) / (n0 as f64 * n1 as f64);
            if v > best_f {
                best_t = t;
                best_f = v;
            }
        }
    }

    IntensityThreshold { value: best_t as u8, degenerate: false }
}

/// Binarizes at `t`, choosing the polarity that makes the foreground the
/// minority class. An exact tie makes the brighter class foreground.
pub fn binarize(img: &GrayImage, t: IntensityThreshold) -> BinaryImage {
    let bright = img.pixels().iter().filter(|&&p| p > t.value).count();
    let dark = img.pixels().len() - bright;
    let bright_is_fg = bright <= dark;
    let bits = img.pixels().iter().map(|&p| ((p > t.value) == bright_is_fg) as u8).collect();
    BinaryImage::new(img.width(), img.height(), bits).expect("dimensions come from a valid image")
}
