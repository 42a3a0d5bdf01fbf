//! Ground truth files, per-image scoring and corpus reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::io::open_color;
use crate::pipeline::{recognize, FailureReason, PipelineConfig};
use crate::recognition::{PlateReading, TemplateSet};
use crate::{Error, Rect, Result};

pub const TRUTH_HEADER: [&str; 4] = ["image", "plate", "bounds", "lines"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    /// Image path, relative to the corpus directory.
    pub image: PathBuf,
    pub plate: String,
    pub bounds: Option<Rect>,
    pub lines: Option<u8>,
}

fn valid_plate(text: &str) -> bool {
    (1..=12).contains(&text.len()) && text.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
}

/// Parses a truth CSV. Line numbers in errors are 1-based and count the
/// header.
pub fn parse_truth(text: &str) -> Result<Vec<GroundTruthEntry>> {
    let err = |line: usize, message: String| Error::TruthParse { line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != TRUTH_HEADER {
        return Err(err(1, format!("expected header {}", TRUTH_HEADER.join(","))));
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let image = record[0].trim();
        if image.is_empty() {
            return Err(err(line, "empty image path".into()));
        }
        let plate = record[1].trim();
        if !valid_plate(plate) {
            return Err(err(line, format!("plate {plate:?} is not 1-12 uppercase letters or digits")));
        }
        let bounds = match record[2].trim() {
            "" => None,
            s => Some(Rect::parse_bounds(s).ok_or_else(|| err(line, format!("bad bounds {s:?}")))?),
        };
        let lines = match record[3].trim() {
            "" => None,
            "1" => Some(1),
            "2" => Some(2),
            s => return Err(err(line, format!("line count must be 1 or 2, found {s:?}"))),
        };
        entries.push(GroundTruthEntry { image: PathBuf::from(image), plate: plate.to_string(), bounds, lines });
    }
    Ok(entries)
}

pub fn load_truth(path: &Path) -> Result<Vec<GroundTruthEntry>> {
    parse_truth(&std::fs::read_to_string(path)?)
}

pub fn format_truth(entries: &[GroundTruthEntry]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(TRUTH_HEADER).expect("writing to memory");
    for e in entries {
        w.write_record([
            e.image.to_string_lossy().into_owned(),
            e.plate.clone(),
            e.bounds.map(|b| b.to_bounds_string()).unwrap_or_default(),
            e.lines.map(|n| n.to_string()).unwrap_or_default(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Number of aligned equal characters in a minimum-cost edit script between
/// `predicted` and `truth`. Among scripts of equal cost the one with the
/// most matches is taken.
pub fn aligned_matches(predicted: &str, truth: &str) -> usize {
    let p: Vec<char> = predicted.chars().collect();
    let t: Vec<char> = truth.chars().collect();
    // (cost, -matches), compared lexicographically
    let mut prev: Vec<(usize, isize)> = (0..=t.len()).map(|j| (j, 0)).collect();
    for i in 1..=p.len() {
        let mut cur = vec![(i, 0isize); t.len() + 1];
        for j in 1..=t.len() {
            let diag = if p[i - 1] == t[j - 1] {
                (prev[j - 1].0, prev[j - 1].1 - 1)
            } else {
                (prev[j - 1].0 + 1, prev[j - 1].1)
            };
            let del = (prev[j].0 + 1, prev[j].1);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1);
            cur[j] = diag.min(del).min(ins);
        }
        prev = cur;
    }
    (-prev[t.len()].1) as usize
}

/// Whether a reading put its characters in reading order, judged only when
/// the character count is right (`None` otherwise). Order is wrong when the
/// per-line counts differ from the truth layout (the last four characters on
/// the second line of a two-line plate) or when two positions hold each
/// other's truth characters, which a misread alone cannot explain.
pub fn reading_order_correct(truth: &str, truth_lines: u8, reading: &PlateReading) -> Option<bool> {
    let t: Vec<char> = truth.chars().collect();
    let p: Vec<char> = reading.text.chars().collect();
    if p.len() != t.len() {
        return None;
    }
    let expected = if truth_lines == 2 && t.len() > 4 { vec![t.len() - 4, 4] } else { vec![t.len()] };
    if reading.line_lengths != expected {
        return Some(false);
    }
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            if p[i] != p[j] && p[i] == t[j] && p[j] == t[i] {
                return Some(false);
            }
        }
    }
    Some(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageOutcome {
    pub image: PathBuf,
    pub truth: String,
    pub predicted: Option<String>,
    pub failure: Option<FailureReason>,
    pub iou: Option<f64>,
    pub localized: bool,
    pub exact: bool,
    pub matched_characters: usize,
    pub latency_ms: f64,
}

impl ImageOutcome {
    /// Scores one pipeline run against its truth entry. Without truth bounds
    /// an image counts as localized when the pipeline reported a region.
    pub fn score(
        entry: &GroundTruthEntry,
        predicted: Option<&str>,
        failure: Option<FailureReason>,
        bounds: Option<Rect>,
        latency_ms: f64,
    ) -> ImageOutcome {
        let iou = entry.bounds.zip(bounds).map(|(t, b)| t.iou(&b));
        let localized = match entry.bounds {
            Some(_) => iou.is_some_and(|v| v >= 0.5),
            None => bounds.is_some(),
        };
        let matched = predicted.map_or(0, |p| aligned_matches(p, &entry.plate));
        ImageOutcome {
            image: entry.image.clone(),
            truth: entry.plate.clone(),
            predicted: predicted.map(str::to_string),
            failure,
            iou,
            localized,
            // a correct string read from the wrong region is not a detection
            exact: localized && predicted == Some(entry.plate.as_str()),
            matched_characters: matched,
            latency_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub images_total: usize,
    pub plate_localized: usize,
    pub plate_exact_match: usize,
    pub truth_characters: usize,
    pub matched_characters: usize,
    /// `None` for an empty corpus.
    pub character_accuracy: Option<f64>,
    /// Images with every character right.
    pub images_fully_correct: usize,
    /// Count per failure kind; sums to the number of failed images.
    pub failures: BTreeMap<String, usize>,
    pub latency: Option<LatencySummary>,
}

impl EvalReport {
    pub fn from_outcomes(outcomes: &[ImageOutcome]) -> EvalReport {
        let mut failures = BTreeMap::new();
        for o in outcomes {
            if let Some(f) = o.failure {
                *failures.entry(f.as_str().to_string()).or_insert(0) += 1;
            }
        }
        let truth_characters: usize = outcomes.iter().map(|o| o.truth.chars().count()).sum();
        let matched_characters: usize = outcomes.iter().map(|o| o.matched_characters).sum();
        let latency = (!outcomes.is_empty()).then(|| {
            let mut ms: Vec<f64> = outcomes.iter().map(|o| o.latency_ms).collect();
            ms.sort_by(f64::total_cmp);
            let rank = |q: f64| ms[((q * ms.len() as f64).ceil() as usize).clamp(1, ms.len()) - 1];
            LatencySummary {
                mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
                p50_ms: rank(0.5),
                p95_ms: rank(0.95),
                max_ms: ms[ms.len() - 1],
            }
        });
        EvalReport {
            images_total: outcomes.len(),
            plate_localized: outcomes.iter().filter(|o| o.localized).count(),
            plate_exact_match: outcomes.iter().filter(|o| o.exact).count(),
            truth_characters,
            matched_characters,
            character_accuracy: (truth_characters > 0).then(|| matched_characters as f64 / truth_characters as f64),
            images_fully_correct: outcomes.iter().filter(|o| o.matched_characters == o.truth.chars().count()).count(),
            failures,
            latency,
        }
    }

    /// The report with latency removed; equal for equal corpora.
    pub fn without_latency(&self) -> EvalReport {
        EvalReport { latency: None, ..self.clone() }
    }

    pub fn to_table(&self) -> String {
        let pct = |n: usize| {
            if self.images_total == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.images_total as f64
            }
        };
        let mut s = String::new();
        let _ = writeln!(s, "{:<24}{:>10}", "images", self.images_total);
        let _ = writeln!(s, "{:<24}{:>10}{:>9.1}%", "plate localized", self.plate_localized, pct(self.plate_localized));
        let _ = writeln!(
            s,
            "{:<24}{:>10}{:>9.1}%",
            "plate exact match",
            self.plate_exact_match,
            pct(self.plate_exact_match)
        );
        match self.character_accuracy {
            Some(a) => {
                let _ = writeln!(
                    s,
                    "{:<24}{:>10}{:>9.2}%",
                    "character accuracy",
                    format!("{}/{}", self.matched_characters, self.truth_characters),
                    100.0 * a
                );
            }
            None => {
                let _ = writeln!(s, "{:<24}{:>10}", "character accuracy", "n/a");
            }
        }
        for (kind, n) in &self.failures {
            let _ = writeln!(s, "{:<24}{:>10}{:>9.1}%", format!("failure: {kind}"), n, pct(*n));
        }
        if let Some(l) = &self.latency {
            let _ = writeln!(s, "{:<24}{:>10.1}", "latency mean (ms)", l.mean_ms);
            let _ = writeln!(s, "{:<24}{:>10.1}", "latency p50 (ms)", l.p50_ms);
            let _ = writeln!(s, "{:<24}{:>10.1}", "latency p95 (ms)", l.p95_ms);
        }
        s
    }
}

/// Runs the pipeline on every entry, in parallel. Latency covers recognition
/// only, not decoding.
pub fn evaluate_corpus(
    corpus_dir: &Path,
    entries: &[GroundTruthEntry],
    cfg: &PipelineConfig,
    templates: &TemplateSet,
) -> Result<(EvalReport, Vec<ImageOutcome>)> {
    let outcomes = entries
        .par_iter()
        .map(|entry| {
            let img = open_color(&corpus_dir.join(&entry.image))?;
            let start = Instant::now();
            let result = recognize(&img, cfg, templates);
            let ms = start.elapsed().as_secs_f64() * 1000.0;
            Ok(ImageOutcome::score(
                entry,
                result.plate.as_ref().map(|p| p.text.as_str()),
                result.failure,
                result.plate_bounds,
                ms,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((EvalReport::from_outcomes(&outcomes), outcomes))
}
