//! Synthetic plate scenes with exact ground truth.
//!
//! Plates carry Indian-format registration text drawn with the bundled stroke
//! font, optionally on two lines and with a small emblem, composited onto a
//! textured background. Skew, a shadow gradient and Gaussian pixel noise are
//! controlled per corpus. Every scene is a pure function of the corpus seed
//! and the scene index.

use std::path::Path;
use std::sync::OnceLock;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{format_truth, GroundTruthEntry};
use crate::imaging::io::encode_png;
use crate::imaging::{ColorImage, GrayImage};
use crate::recognition::font::{Outline, StrokeFont};
use crate::{Rect, Result};

const STATE_CODES: &[&str] = &[
    "AN", "AP", "AR", "AS", "BR", "CG", "CH", "DL", "GA", "GJ", "HP", "HR", "JH", "JK", "KA", "KL", "LA", "MH", "ML",
    "MN", "MP", "MZ", "NL", "OD", "PB", "PY", "RJ", "SK", "TN", "TR", "TS", "UK", "UP", "WB",
];
const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Horizontal space between character cells, in cap heights.
const CHAR_GAP: f64 = 0.2;
/// Vertical space between the two lines of a two-line plate, in cap heights.
const LINE_GAP: f64 = 0.14;

fn font() -> &'static StrokeFont {
    static FONT: OnceLock<StrokeFont> = OnceLock::new();
    FONT.get_or_init(StrokeFont::builtin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub width: usize,
    pub height: usize,
    /// 1 or 2 text lines.
    pub lines: u8,
    /// Plate rotation is uniform in `[-max_skew_deg, max_skew_deg]`.
    pub max_skew_deg: f64,
    /// Standard deviation of additive luminance noise.
    pub noise_sigma: f64,
    /// Darken the plate with a linear brightness ramp.
    pub shadow: bool,
    /// Draw a small round emblem in the plate's left margin.
    pub logo: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            width: 640,
            height: 480,
            lines: 1,
            max_skew_deg: 0.0,
            noise_sigma: 0.0,
            shadow: false,
            logo: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub image: ColorImage,
    pub text: String,
    pub lines: u8,
    /// Bounding box of the (possibly rotated) plate.
    pub plate_bounds: Rect,
    /// Rotation of the plate, degrees counter-clockwise on screen.
    pub skew_deg: f64,
    pub cap_height: f64,
}

/// Random registration: state code, two-digit district, one or two series
/// letters and a four-digit number, e.g. `MH12AB0007`.
pub fn random_plate_text(rng: &mut impl Rng) -> String {
    let mut s = String::from(*STATE_CODES.choose(rng).expect("non-empty"));
    s.push_str(&format!("{:02}", rng.random_range(1..100)));
    for _ in 0..rng.random_range(1..=2) {
        s.push(LETTERS[rng.random_range(0..LETTERS.len())] as char);
    }
    s.push_str(&format!("{:04}", rng.random_range(1..10000)));
    s
}

/// Splits a registration into its two-line form: everything before the
/// four-digit number on top, the number below.
pub fn two_line_split(text: &str) -> (&str, &str) {
    let cut = text.len().saturating_sub(4);
    text.split_at(cut)
}

/// Geometry of one plate in its own upright frame (origin top-left).
#[derive(Debug, Clone)]
pub struct PlateLayout {
    pub width: f64,
    pub height: f64,
    pub cap: f64,
    /// (outline, origin x, origin y) per character.
    glyphs: Vec<(&'static Outline, f64, f64)>,
    pen: f64,
    frame_inset: f64,
    frame_width: f64,
    logo: Option<(f64, f64, f64)>,
    /// Row extents of each text line.
    line_rows: Vec<(f64, f64)>,
}

impl PlateLayout {
    pub fn new(text: &str, lines: u8, cap: f64, logo: bool) -> PlateLayout {
        let rows: Vec<&str> = if lines == 2 {
            let (a, b) = two_line_split(text);
            vec![a, b]
        } else {
            vec![text]
        };
        let font = font();
        let cell = font.advance * cap;
        let gap = CHAR_GAP * cap;
        let line_width = |n: usize| n as f64 * cell + n.saturating_sub(1) as f64 * gap;
        let text_width = rows.iter().map(|r| line_width(r.len())).fold(0.0, f64::max);
        let text_height = rows.len() as f64 * cap + (rows.len() - 1) as f64 * LINE_GAP * cap;

        let margin_x = 0.45 * cap;
        let margin_y = 0.24 * cap;
        let logo_space = if logo { 0.45 * cap } else { 0.0 };
        let width = text_width + 2.0 * margin_x + logo_space;
        let height = text_height + 2.0 * margin_y;

        let mut glyphs = Vec::new();
        let mut line_rows = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let y = margin_y + i as f64 * (1.0 + LINE_GAP) * cap;
            let x0 = margin_x + logo_space + (text_width - line_width(row.len())) / 2.0;
            for (j, ch) in row.chars().enumerate() {
                let outline = font.outline(ch).unwrap_or_else(|| panic!("font has no glyph for {ch:?}"));
                glyphs.push((outline, x0 + j as f64 * (cell + gap), y));
            }
            line_rows.push((y, y + cap));
        }
        let logo = logo.then(|| (margin_x * 0.55 + logo_space * 0.5, height / 2.0, 0.125 * cap));

        PlateLayout {
            width,
            height,
            cap,
            glyphs,
            pen: font.stroke * cap / 2.0,
            frame_inset: 0.07 * cap,
            frame_width: (0.06 * cap).max(2.0),
            logo,
            line_rows,
        }
    }

    /// Ink coverage in `[0, 1]` at plate coordinates `(u, v)`.
    pub fn ink(&self, u: f64, v: f64) -> f64 {
        let mut cov = 0.0f64;
        let reach = self.cap * 0.7;
        for &(outline, ox, oy) in &self.glyphs {
            if u < ox - 0.1 * self.cap || u > ox + reach || v < oy - 0.1 * self.cap || v > oy + 1.1 * self.cap {
                continue;
            }
            let d = outline.distance((u - ox) / self.cap, (v - oy) / self.cap) * self.cap;
            cov = cov.max((self.pen - d + 0.5).clamp(0.0, 1.0));
        }
        let outer = box_coverage(
            u,
            v,
            self.frame_inset,
            self.frame_inset,
            self.width - self.frame_inset,
            self.height - self.frame_inset,
        );
        let inner_inset = self.frame_inset + self.frame_width;
        let inner = box_coverage(u, v, inner_inset, inner_inset, self.width - inner_inset, self.height - inner_inset);
        cov = cov.max(outer - inner);
        if let Some((cx, cy, r)) = self.logo {
            let d = ((u - cx).powi(2) + (v - cy).powi(2)).sqrt();
            cov = cov.max((r - d + 0.5).clamp(0.0, 1.0));
        }
        cov
    }

    /// Coverage of the plate body itself.
    pub fn body(&self, u: f64, v: f64) -> f64 {
        box_coverage(u, v, 0.0, 0.0, self.width, self.height)
    }

    /// Bounds of the text block in plate coordinates.
    pub fn text_rows(&self) -> &[(f64, f64)] {
        &self.line_rows
    }
}

/// Approximate area coverage of the unit pixel centred at `(u, v)` by an
/// axis-aligned box.
fn box_coverage(u: f64, v: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let cx = ((u - x0).min(x1 - u) + 0.5).clamp(0.0, 1.0);
    let cy = ((v - y0).min(y1 - v) + 0.5).clamp(0.0, 1.0);
    cx * cy
}

struct Palette {
    plate: [f64; 3],
    ink: [f64; 3],
}

fn random_palette(rng: &mut impl Rng) -> Palette {
    let ink = [rng.random_range(10.0..45.0); 3];
    let plate = if rng.random_bool(0.3) {
        // commercial yellow
        [rng.random_range(225.0..250.0), rng.random_range(195.0..220.0), rng.random_range(30.0..70.0)]
    } else {
        let w = rng.random_range(215.0..248.0);
        [w, w, w - rng.random_range(0.0..8.0)]
    };
    Palette { plate, ink }
}

/// Smooth car-body background with a few panels and light texture.
fn background(rng: &mut impl Rng, w: usize, h: usize) -> Vec<[f64; 3]> {
    let base = [rng.random_range(40.0..200.0), rng.random_range(40.0..200.0), rng.random_range(40.0..200.0)];
    let grad = rng.random_range(-0.12..0.12);
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let period = rng.random_range(120.0..400.0);
            (angle.cos() / period, angle.sin() / period, rng.random_range(0.0..6.3), rng.random_range(3.0..10.0))
        })
        .collect();
    let panels: Vec<(f64, f64, f64, f64, f64)> = (0..rng.random_range(2..5))
        .map(|_| {
            let x0 = rng.random_range(0.0..w as f64 * 0.8);
            let y0 = rng.random_range(0.0..h as f64 * 0.9);
            let pw = rng.random_range(60.0..300.0);
            let ph = rng.random_range(10.0..60.0);
            (x0, y0, x0 + pw, y0 + ph, rng.random_range(-35.0..35.0))
        })
        .collect();

    // surface grain, so the background is textured even without sensor noise
    let grain = Normal::new(0.0, rng.random_range(1.5..3.0)).expect("positive sigma");
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (u, v) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut delta = grad * (v - h as f64 / 2.0);
            for &(fx, fy, phase, amp) in &waves {
                delta += amp * (std::f64::consts::TAU * (fx * u + fy * v) + phase).sin();
            }
            for &(x0, y0, x1, y1, shade) in &panels {
                delta += shade * box_coverage(u, v, x0, y0, x1, y1);
            }
            delta += grain.sample(rng);
            out.push([base[0] + delta, base[1] + delta, base[2] + delta]);
        }
    }
    out
}

/// Renders one scene from its own RNG stream.
pub fn render_scene(text: &str, opts: &SynthOptions, rng: &mut impl Rng) -> SyntheticScene {
    let (w, h) = (opts.width, opts.height);
    let cap = if opts.lines == 2 { rng.random_range(28.0..38.0) } else { rng.random_range(30.0..42.0) };
    let layout = PlateLayout::new(text, opts.lines, cap, opts.logo);
    let palette = random_palette(rng);
    let skew = if opts.max_skew_deg > 0.0 { rng.random_range(-opts.max_skew_deg..=opts.max_skew_deg) } else { 0.0 };
    let (sin, cos) = skew.to_radians().sin_cos();

    // rotated half extents, then a centre that keeps the plate in frame
    let half_w = (layout.width * cos.abs() + layout.height * sin.abs()) / 2.0;
    let half_h = (layout.width * sin.abs() + layout.height * cos.abs()) / 2.0;
    let margin = 12.0;
    let cx = rng.random_range(half_w + margin..=(w as f64 - half_w - margin).max(half_w + margin));
    let cy = rng.random_range(half_h + margin..=(h as f64 - half_h - margin).max(half_h + margin));

    let shadow = opts.shadow.then(|| {
        let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        (dir.cos(), dir.sin(), rng.random_range(0.55..0.75))
    });

    let mut canvas = background(rng, w, h);
    let x_lo = (cx - half_w - 2.0).floor().max(0.0) as usize;
    let x_hi = ((cx + half_w + 2.0).ceil() as usize).min(w);
    let y_lo = (cy - half_h - 2.0).floor().max(0.0) as usize;
    let y_hi = ((cy + half_h + 2.0).ceil() as usize).min(h);
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            // inverse of a counter-clockwise on-screen rotation
            let u = layout.width / 2.0 + dx * cos - dy * sin;
            let v = layout.height / 2.0 + dx * sin + dy * cos;
            let alpha = layout.body(u, v);
            if alpha <= 0.0 {
                continue;
            }
            let ink = layout.ink(u, v);
            let px = &mut canvas[y * w + x];
            for (c, ch) in px.iter_mut().enumerate() {
                let plate = palette.plate[c] * (1.0 - ink) + palette.ink[c] * ink;
                *ch = *ch * (1.0 - alpha) + plate * alpha;
            }
        }
    }

    if let Some((ux, uy, floor)) = shadow {
        let reach = half_w.max(half_h);
        for y in 0..h {
            for x in 0..w {
                let t = ((x as f64 + 0.5 - cx) * ux + (y as f64 + 0.5 - cy) * uy) / reach * 0.5 + 0.5;
                let f = 1.0 - (1.0 - floor) * t.clamp(0.0, 1.0);
                canvas[y * w + x].iter_mut().for_each(|c| *c *= f);
            }
        }
    }

    let noise = (opts.noise_sigma > 0.0).then(|| Normal::new(0.0, opts.noise_sigma).expect("positive sigma"));
    let pixels = canvas
        .into_iter()
        .map(|px| {
            let n = noise.as_ref().map_or(0.0, |d| d.sample(rng));
            px.map(|c| (c + n).round().clamp(0.0, 255.0) as u8)
        })
        .collect();

    let bounds = {
        let x0 = (cx - half_w).floor().max(0.0) as usize;
        let y0 = (cy - half_h).floor().max(0.0) as usize;
        let x1 = ((cx + half_w).ceil() as usize).min(w);
        let y1 = ((cy + half_h).ceil() as usize).min(h);
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    };

    SyntheticScene {
        image: ColorImage::new(w, h, pixels).expect("scene dimensions are positive"),
        text: text.to_string(),
        lines: opts.lines,
        plate_bounds: bounds,
        skew_deg: skew,
        cap_height: cap,
    }
}

/// RNG stream of scene `index` in the corpus with the given seed.
pub fn scene_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Scene `index` of a corpus: random text, then the scene itself.
pub fn corpus_scene(seed: u64, index: usize, opts: &SynthOptions) -> SyntheticScene {
    let mut rng = scene_rng(seed, index);
    let text = random_plate_text(&mut rng);
    render_scene(&text, opts, &mut rng)
}

/// Plate alone, upright, dark text on a light body, cropped to the plate.
pub fn render_plate_gray(text: &str, lines: u8, cap: f64, logo: bool) -> GrayImage {
    let layout = PlateLayout::new(text, lines, cap, logo);
    let w = layout.width.ceil() as usize;
    let h = layout.height.ceil() as usize;
    GrayImage::from_fn(w, h, |x, y| {
        let ink = layout.ink(x as f64 + 0.5, y as f64 + 0.5);
        (235.0 * (1.0 - ink) + 25.0 * ink).round() as u8
    })
}

/// Text only (no frame or margins beyond `pad` pixels), dark on light.
pub fn render_text_gray(text: &str, lines: u8, cap: f64, pad: usize) -> GrayImage {
    let layout = PlateLayout::new(text, lines, cap, false);
    let (top, bottom) = (layout.line_rows[0].0, layout.line_rows.last().expect("one line").1);
    let left = layout.glyphs.iter().map(|g| g.1).fold(f64::MAX, f64::min);
    let right = layout.glyphs.iter().map(|g| g.1).fold(f64::MIN, f64::max) + font().advance * cap;
    let p = pad as f64;
    let w = (right - left + 2.0 * p).ceil() as usize;
    let h = (bottom - top + 2.0 * p).ceil() as usize;
    GrayImage::from_fn(w, h, |x, y| {
        let u = left - p + x as f64 + 0.5;
        let v = top - p + y as f64 + 0.5;
        // skip the frame by only sampling glyph ink
        let ink = layout
            .glyphs
            .iter()
            .map(|&(o, ox, oy)| {
                let d = o.distance((u - ox) / cap, (v - oy) / cap) * cap;
                (layout.pen - d + 0.5).clamp(0.0, 1.0)
            })
            .fold(0.0, f64::max);
        (235.0 * (1.0 - ink) + 25.0 * ink).round() as u8
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub image: String,
    pub skew_deg: f64,
    pub cap_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub seed: u64,
    pub options: SynthOptions,
    pub scenes: Vec<SceneMetadata>,
}

pub const TRUTH_FILE: &str = "truth.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Renders `count` scenes into `dir` as `scene_NNNN.png`, with `truth.csv`
/// and `metadata.json` (per-scene skew and character height). Output bytes
/// depend only on the arguments.
pub fn write_corpus(dir: &Path, count: usize, seed: u64, opts: &SynthOptions) -> Result<Vec<GroundTruthEntry>> {
    std::fs::create_dir_all(dir)?;
    let rendered = (0..count)
        .into_par_iter()
        .map(|i| {
            let scene = corpus_scene(seed, i, opts);
            let name = format!("scene_{i:04}.png");
            std::fs::write(dir.join(&name), encode_png(&scene.image))?;
            let entry = GroundTruthEntry {
                image: name.clone().into(),
                plate: scene.text,
                bounds: Some(scene.plate_bounds),
                lines: Some(scene.lines),
            };
            Ok((entry, SceneMetadata { image: name, skew_deg: scene.skew_deg, cap_height: scene.cap_height }))
        })
        .collect::<Result<Vec<_>>>()?;
    let (entries, scenes): (Vec<_>, Vec<_>) = rendered.into_iter().unzip();
    std::fs::write(dir.join(TRUTH_FILE), format_truth(&entries))?;
    let meta = CorpusMetadata { seed, options: *opts, scenes };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(dir.join(METADATA_FILE), json + "\n")?;
    Ok(entries)
}
