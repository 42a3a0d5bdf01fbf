//! End-to-end recognition: grayscale, deskew, localize, then segment and read
//! each candidate region in rank order until one is accepted.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::PipelineConfig;

use crate::imaging::io::{decode_color, write_pgm};
use crate::imaging::{deskew_with, fit_capture_bounds, normalize_glyph, to_grayscale, ColorImage, GrayImage};
use crate::localization::{localize_detailed, Localization};
use crate::recognition::{read_plate, Glyph, PlateReading, TemplateSet};
use crate::segmentation::{segment_detailed, PlateSegmentation, Rejection};
use crate::{Error, Rect, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NoPlate,
    NoCharacters,
    LowConfidence,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::NoPlate => "no_plate",
            FailureReason::NoCharacters => "no_characters",
            FailureReason::LowConfidence => "low_confidence",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    /// Candidate rank for per-candidate stages.
    pub candidate: Option<usize>,
    pub ms: f64,
}

/// Outcome of one recognition. Exactly one of `plate` and `failure` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionResult {
    pub plate: Option<PlateReading>,
    pub candidate_used: Option<usize>,
    pub failure: Option<FailureReason>,
    /// Rotation applied by skew correction, degrees.
    pub skew_deg: f64,
    /// Region of the chosen candidate (or of the strongest one when
    /// recognition failed after localization), in input-image coordinates.
    pub plate_bounds: Option<Rect>,
    pub stage_timings: Vec<StageTiming>,
    /// Directory holding the stage dumps, when diagnostics were requested.
    pub diagnostics: Option<PathBuf>,
}

impl RecognitionResult {
    /// The result with timings cleared, for comparisons between runs.
    pub fn without_timings(&self) -> RecognitionResult {
        let mut r = self.clone();
        r.stage_timings.clear();
        r
    }

    pub fn status(&self) -> &'static str {
        self.failure.map_or("ok", FailureReason::as_str)
    }
}

/// Decodes PNG/JPEG bytes and runs [`recognize`].
pub fn recognize_bytes(bytes: &[u8], cfg: &PipelineConfig, templates: &TemplateSet) -> Result<RecognitionResult> {
    Ok(recognize(&decode_color(bytes)?, cfg, templates))
}

pub fn recognize(img: &ColorImage, cfg: &PipelineConfig, templates: &TemplateSet) -> RecognitionResult {
    run(img, cfg, templates, &mut NoDump).expect("recognition without dumps has no I/O")
}

/// [`recognize`] that also writes numbered PGM dumps of each stage into
/// `dump_dir`: `01_gray`, `02_edges`, `03_reduced`, `04_bands`, then per
/// candidate `05_crop_<k>`, `06_components_<k>` (plus rejection reasons in a
/// text file) and `07_glyph_<k>_<i>`.
pub fn recognize_with_diagnostics(
    img: &ColorImage,
    cfg: &PipelineConfig,
    templates: &TemplateSet,
    dump_dir: &Path,
) -> Result<RecognitionResult> {
    std::fs::create_dir_all(dump_dir).map_err(|source| Error::DumpIo { path: dump_dir.to_path_buf(), source })?;
    let mut dump = DirDump { dir: dump_dir.to_path_buf() };
    let mut result = run(img, cfg, templates, &mut dump)?;
    result.diagnostics = Some(dump_dir.to_path_buf());
    Ok(result)
}

trait StageSink {
    fn gray(&mut self, name: &str, img: &GrayImage) -> Result<()>;
    fn text(&mut self, name: &str, body: &str) -> Result<()>;
    fn enabled(&self) -> bool;
}

struct NoDump;

impl StageSink for NoDump {
    fn gray(&mut self, _: &str, _: &GrayImage) -> Result<()> {
        Ok(())
    }
    fn text(&mut self, _: &str, _: &str) -> Result<()> {
        Ok(())
    }
    fn enabled(&self) -> bool {
        false
    }
}

struct DirDump {
    dir: PathBuf,
}

impl StageSink for DirDump {
    fn gray(&mut self, name: &str, img: &GrayImage) -> Result<()> {
        let path = self.dir.join(format!("{name}.pgm"));
        write_pgm(img, &path).map_err(|source| Error::DumpIo { path, source })
    }
    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(format!("{name}.txt"));
        std::fs::write(&path, body).map_err(|source| Error::DumpIo { path, source })
    }
    fn enabled(&self) -> bool {
        true
    }
}

struct Timer {
    timings: Vec<StageTiming>,
    last: Instant,
}

impl Timer {
    fn new() -> Timer {
        Timer { timings: Vec::new(), last: Instant::now() }
    }

    fn lap(&mut self, stage: &str, candidate: Option<usize>) {
        let now = Instant::now();
        let ms = (now - self.last).as_secs_f64() * 1e3;
        self.timings.push(StageTiming { stage: stage.to_string(), candidate, ms });
        self.last = now;
    }
}

/// Maps a rectangle of the deskewed (and possibly downscaled) frame back to
/// input-image coordinates: the bounding box of its rotated corners.
struct FrameMap {
    angle_deg: f64,
    width: usize,
    height: usize,
    scale_x: f64,
    scale_y: f64,
    input_width: usize,
    input_height: usize,
}

impl FrameMap {
    fn to_input(&self, r: Rect) -> Rect {
        let (sin, cos) = self.angle_deg.to_radians().sin_cos();
        let cx = (self.width as f64 - 1.0) / 2.0;
        let cy = (self.height as f64 - 1.0) / 2.0;
        let corners = [
            (r.x as f64 - 0.5, r.y as f64 - 0.5),
            (r.right() as f64 - 0.5, r.y as f64 - 0.5),
            (r.x as f64 - 0.5, r.bottom() as f64 - 0.5),
            (r.right() as f64 - 0.5, r.bottom() as f64 - 0.5),
        ];
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for (x, y) in corners {
            // where the deskewed pixel was sampled from
            let (dx, dy) = (x - cx, y - cy);
            let sx = (cx + dx * cos - dy * sin + 0.5) * self.scale_x;
            let sy = (cy + dx * sin + dy * cos + 0.5) * self.scale_y;
            x0 = x0.min(sx);
            y0 = y0.min(sy);
            x1 = x1.max(sx);
            y1 = y1.max(sy);
        }
        let clamp = |v: f64, max: usize| (v.round().max(0.0) as usize).min(max);
        let (x0, x1) = (clamp(x0, self.input_width), clamp(x1, self.input_width));
        let (y0, y1) = (clamp(y0, self.input_height), clamp(y1, self.input_height));
        Rect::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }
}

fn run(
    img: &ColorImage,
    cfg: &PipelineConfig,
    templates: &TemplateSet,
    sink: &mut dyn StageSink,
) -> Result<RecognitionResult> {
    let mut timer = Timer::new();
    let (input_width, input_height) = (img.width(), img.height());
    let fitted = fit_capture_bounds(img.clone());
    let gray = to_grayscale(&fitted);
    timer.lap("grayscale", None);

    let mut result = RecognitionResult {
        plate: None,
        candidate_used: None,
        failure: Some(FailureReason::NoPlate),
        skew_deg: 0.0,
        plate_bounds: None,
        stage_timings: Vec::new(),
        diagnostics: None,
    };

    let Ok((gray, angle)) = deskew_with(&gray, cfg.skew) else {
        timer.lap("deskew", None);
        result.stage_timings = timer.timings;
        return Ok(result);
    };
    result.skew_deg = angle;
    timer.lap("deskew", None);
    sink.gray("01_gray", &gray)?;

    let frame = FrameMap {
        angle_deg: angle,
        width: gray.width(),
        height: gray.height(),
        scale_x: input_width as f64 / gray.width() as f64,
        scale_y: input_height as f64 / gray.height() as f64,
        input_width,
        input_height,
    };

    let located = localize_detailed(&gray, &cfg.localization)?;
    timer.lap("localize", None);
    let stages = match located {
        Ok(l) => {
            dump_localization(sink, &gray, &l)?;
            l
        }
        Err((_, partial)) => {
            dump_localization(sink, &gray, &partial)?;
            result.stage_timings = timer.timings;
            return Ok(result);
        }
    };

    result.plate_bounds = stages.candidates.first().map(|c| frame.to_input(c.bounds));
    result.failure = Some(FailureReason::NoCharacters);
    let mut fallback: Option<(usize, PlateReading)> = None;

    for cand in &stages.candidates {
        let k = cand.rank;
        sink.gray(&format!("05_crop_{k}"), &cand.crop)?;
        let seg = segment_detailed(&cand.crop, &cfg.segmentation);
        timer.lap("segment", Some(k));
        let seg = match seg {
            Ok(s) => s,
            Err(_) => continue,
        };
        if sink.enabled() {
            dump_segmentation(sink, k, &seg)?;
        }
        if seg.characters.is_empty() {
            continue;
        }

        let glyphs: Vec<Glyph> = seg
            .characters
            .iter()
            .filter_map(|c| normalize_glyph(&c.image, Rect::new(0, 0, c.image.width(), c.image.height())).ok())
            .collect();
        for (i, g) in glyphs.iter().enumerate() {
            sink.gray(&format!("07_glyph_{k}_{i:02}"), &g.to_binary().to_gray())?;
        }
        let mut reading = read_plate(&glyphs, templates);
        if glyphs.len() == seg.characters.len() {
            let lines = seg.characters.iter().map(|c| c.character.line_index + 1).max().unwrap_or(1);
            reading.line_lengths =
                (0..lines).map(|l| seg.characters.iter().filter(|c| c.character.line_index == l).count()).collect();
        }
        timer.lap("recognize", Some(k));

        let long_enough = reading.text.chars().count() >= cfg.min_characters;
        if long_enough && reading.confidence >= cfg.min_confidence {
            result.plate_bounds = Some(frame.to_input(cand.bounds));
            result.candidate_used = Some(k);
            result.plate = Some(reading);
            result.failure = None;
            result.stage_timings = timer.timings;
            return Ok(result);
        }
        result.failure = Some(FailureReason::LowConfidence);
        if long_enough && fallback.as_ref().is_none_or(|(_, best)| reading.confidence > best.confidence) {
            fallback = Some((k, reading));
        }
    }

    if let Some((k, reading)) = fallback {
        let bounds = stages.candidates.iter().find(|c| c.rank == k).expect("rank exists").bounds;
        result.plate_bounds = Some(frame.to_input(bounds));
        result.candidate_used = Some(k);
        result.plate = Some(reading);
        result.failure = None;
    }
    result.stage_timings = timer.timings;
    Ok(result)
}

fn dump_localization(sink: &mut dyn StageSink, gray: &GrayImage, l: &Localization) -> Result<()> {
    if !sink.enabled() {
        return Ok(());
    }
    sink.gray("02_edges", &l.edges.to_gray())?;
    sink.gray("03_reduced", &l.reduced.to_gray())?;
    // bands as mid-gray rows over the dimmed image, candidate outlines in white
    let mut overlay = GrayImage::from_fn(gray.width(), gray.height(), |x, y| gray.get(x, y) / 3);
    for band in &l.bands {
        for y in band.start..band.end {
            for x in 0..gray.width() {
                overlay.set(x, y, overlay.get(x, y).max(128));
            }
        }
    }
    for c in &l.candidates {
        let b = c.bounds;
        for x in b.x..b.right() {
            overlay.set(x, b.y, 255);
            overlay.set(x, b.bottom() - 1, 255);
        }
        for y in b.y..b.bottom() {
            overlay.set(b.x, y, 255);
            overlay.set(b.right() - 1, y, 255);
        }
    }
    sink.gray("04_bands", &overlay)
}

fn dump_segmentation(sink: &mut dyn StageSink, k: usize, seg: &PlateSegmentation) -> Result<()> {
    let labels = &seg.labels;
    let n = labels.components.len().max(1) as u32;
    let vis = GrayImage::from_fn(labels.width, labels.height, |x, y| {
        let l = labels.labels[y * labels.width + x];
        if l == 0 {
            0
        } else {
            (55 + (l * 200) / n) as u8
        }
    });
    sink.gray(&format!("06_components_{k}"), &vis)?;

    let mut report = String::new();
    for (c, v) in seg.ink.iter().zip(&seg.verdicts) {
        let verdict = match v {
            None => "kept",
            Some(Rejection::Border) => "border",
            Some(Rejection::Area) => "area",
            Some(Rejection::Aspect) => "aspect",
            Some(Rejection::Existence) => "existence",
            Some(Rejection::Height) => "height",
            Some(Rejection::OverCap) => "over_cap",
        };
        report.push_str(&format!(
            "label={} bounds={} pixels={} existence={:.3} aspect={:.3} -> {verdict}\n",
            c.label,
            c.bounds.to_bounds_string(),
            c.pixel_count,
            c.existence_ratio(),
            c.aspect_ratio()
        ));
    }
    sink.text(&format!("06_components_{k}"), &report)
}
