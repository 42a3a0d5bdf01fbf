//! Independent reference implementations and seeded inputs shared by the
//! integration tests and the acceptance suite.

#![allow(dead_code)]

use lpr_core::imaging::{BinaryImage, Glyph, GrayImage, GLYPH_SIZE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random gray image of random size in `1..=max_side` on each axis. A third
/// of the images use only a handful of levels, which makes ties likely.
pub fn random_gray(rng: &mut ChaCha8Rng, max_side: usize) -> GrayImage {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let levels: Vec<u8> = (0..rng.random_range(1..=4)).map(|_| rng.random()).collect();
    let few = rng.random_bool(1.0 / 3.0);
    GrayImage::from_fn(w, h, |_, _| if few { levels[rng.random_range(0..levels.len())] } else { rng.random() })
}

pub fn random_binary(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryImage {
    BinaryImage::from_fn(w, h, |_, _| rng.random_bool(density))
}

pub fn random_glyph(rng: &mut ChaCha8Rng) -> Glyph {
    let density = rng.random_range(0.05..0.95);
    Glyph::from_fn(|_, _| rng.random_bool(density))
}

/// Otsu by exhaustive search straight from the definition: for every
/// threshold, class weights and means are recounted from the pixels and the
/// between-class variance `w0 w1 (m0 - m1)^2` is compared as an exact
/// fraction. Returns the smallest maximizing threshold, or the only present
/// level for a constant image.
pub fn otsu_oracle(img: &GrayImage) -> (u8, bool) {
    let px = img.pixels();
    let n = px.len() as i128;
    let first = px[0];
    if px.iter().all(|&p| p == first) {
        return (first, true);
    }
    // variance * n^2 = (s0 n1 - s1 n0)^2 / (n0 n1), kept as (num, den)
    let mut best: Option<(u8, i128, i128)> = None;
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut s1) = (0i128, 0i128, 0i128);
        for &p in px {
            if p <= t {
                n0 += 1;
                s0 += p as i128;
            } else {
                s1 += p as i128;
            }
        }
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = s0 * n1 - s1 * n0;
        let (num, den) = (d * d, n0 * n1);
        match best {
            Some((_, bn, bd)) if num * bd <= bn * den => {}
            _ => best = Some((t, num, den)),
        }
    }
    (best.expect("two levels present").0, false)
}

/// Connected components by recursive flood fill, 8-connectivity. Each
/// component is its sorted pixel list; components are sorted by first pixel.
pub fn flood_fill_components(img: &BinaryImage) -> Vec<Vec<(usize, usize)>> {
    fn fill(img: &BinaryImage, seen: &mut [bool], x: usize, y: usize, out: &mut Vec<(usize, usize)>) {
        let w = img.width();
        if seen[y * w + x] || !img.get(x, y) {
            return;
        }
        seen[y * w + x] = true;
        out.push((y, x));
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if (dx, dy) != (0, 0) && nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < img.height() {
                    fill(img, seen, nx as usize, ny as usize, out);
                }
            }
        }
    }
    let mut seen = vec![false; img.width() * img.height()];
    let mut comps = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) && !seen[y * img.width() + x] {
                let mut c = Vec::new();
                fill(img, &mut seen, x, y, &mut c);
                c.sort_unstable();
                comps.push(c);
            }
        }
    }
    comps.sort();
    comps
}

/// Runs `f` on a thread with a stack large enough for deep recursion.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new().stack_size(256 << 20).spawn(f).expect("spawn").join().expect("oracle thread")
}

/// Pearson correlation from the textbook definition: means first, then
/// covariance over the product of standard deviations.
pub fn covariance_correlation(a: &Glyph, b: &Glyph) -> f64 {
    let n = (GLYPH_SIZE * GLYPH_SIZE) as f64;
    let xa: Vec<f64> = a.bits().iter().map(|&v| v as f64).collect();
    let xb: Vec<f64> = b.bits().iter().map(|&v| v as f64).collect();
    let ma = xa.iter().sum::<f64>() / n;
    let mb = xb.iter().sum::<f64>() / n;
    let cov: f64 = xa.iter().zip(&xb).map(|(p, q)| (p - ma) * (q - mb)).sum();
    let va: f64 = xa.iter().map(|p| (p - ma).powi(2)).sum();
    let vb: f64 = xb.iter().map(|q| (q - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}
