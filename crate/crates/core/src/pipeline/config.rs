//! Pipeline configuration and its flat `key = value` text form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::imaging::{AngleSearch, GLYPH_SIZE};
use crate::localization::LocalizationParams;
use crate::segmentation::SegmentationParams;
use crate::{Error, Result};

/// Every tunable threshold of the recognition pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub localization: LocalizationParams,
    pub segmentation: SegmentationParams,
    pub skew: AngleSearch,
    pub glyph_size: usize,
    /// A candidate is accepted once its reading has at least this many
    /// characters...
    pub min_characters: usize,
    /// ...and at least this mean correlation.
    pub min_confidence: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            localization: LocalizationParams::default(),
            segmentation: SegmentationParams::default(),
            skew: AngleSearch::SKEW,
            glyph_size: GLYPH_SIZE,
            min_characters: 4,
            min_confidence: 0.45,
        }
    }
}

enum Kind {
    Ratio,
    Real,
    Count,
    Size,
    Flag,
}

macro_rules! config_keys {
    ($($key:literal => $kind:ident, $($field:ident).+;)*) => {
        const KEYS: &[&str] = &[$($key),*];

        impl PipelineConfig {
            fn get(&self, key: &str) -> Option<String> {
                match key {
                    $($key => Some(self.$($field).+.to_string()),)*
                    _ => None,
                }
            }

            fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
                match key {
                    $($key => {
                        self.$($field).+ = value.parse().map_err(|e| format!("{key}: {e}"))?;
                        check(Kind::$kind, value.parse::<f64>().unwrap_or(f64::NAN)).map_err(|m| format!("{key}: {m}"))
                    })*
                    _ => Err(format!("unknown key {key:?}")),
                }
            }
        }
    };
}

config_keys! {
    "edge_percentile" => Ratio, localization.edge_percentile;
    "band_variance_ratio" => Ratio, localization.band_variance_ratio;
    "column_strength_ratio" => Ratio, localization.column_strength_ratio;
    "column_bridge_windows" => Size, localization.column_bridge_windows;
    "line_merge_gap_ratio" => Real, localization.line_merge_gap_ratio;
    "full_frame_min_aspect" => Real, localization.full_frame_min_aspect;
    "gap_tolerance_rows" => Size, localization.gap_tolerance_rows;
    "min_band_height" => Count, localization.min_band_height;
    "max_candidates" => Count, localization.max_candidates;
    "crop_padding" => Size, localization.crop_padding;
    "area_min" => Ratio, segmentation.rules.area_min;
    "area_max" => Ratio, segmentation.rules.area_max;
    "aspect_min" => Real, segmentation.rules.aspect_min;
    "aspect_max" => Real, segmentation.rules.aspect_max;
    "existence_min" => Ratio, segmentation.rules.existence_min;
    "existence_max" => Ratio, segmentation.rules.existence_max;
    "height_min_ratio" => Real, segmentation.rules.height_min_ratio;
    "height_max_ratio" => Real, segmentation.rules.height_max_ratio;
    "max_characters" => Count, segmentation.rules.max_characters;
    "reject_side_touching" => Flag, segmentation.rules.reject_side_touching;
    "dilation_radius" => Size, segmentation.dilation_radius;
    "skew_max_deg" => Real, skew.max_deg;
    "skew_step_deg" => Real, skew.step_deg;
    "glyph_size" => Count, glyph_size;
    "min_characters" => Count, min_characters;
    "min_confidence" => Real, min_confidence;
}

fn check(kind: Kind, v: f64) -> std::result::Result<(), String> {
    let ok = match kind {
        Kind::Ratio => v > 0.0 && v <= 1.0,
        Kind::Real => v.is_finite(),
        Kind::Count => v >= 1.0,
        Kind::Size => v >= 0.0,
        Kind::Flag => true,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("value {v} out of range"))
    }
}

impl PipelineConfig {
    /// One `key = value` line per setting, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    /// Parses the text form. Missing keys keep their defaults; unknown keys,
    /// duplicates and out-of-range values are errors.
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Config { line: i + 1, message };
            let (key, value) =
                line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            seen.push(key);
            cfg.set(key, value.trim()).map_err(err)?;
        }
        cfg.validate().map_err(|message| Error::Config { line: 0, message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        PipelineConfig::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let r = &self.segmentation.rules;
        if self.glyph_size != GLYPH_SIZE {
            return Err(format!("glyph_size must be {GLYPH_SIZE}"));
        }
        if r.area_min > r.area_max || r.aspect_min > r.aspect_max || r.existence_min > r.existence_max {
            return Err("segmentation rule ranges are inverted".into());
        }
        if r.height_min_ratio > r.height_max_ratio {
            return Err("height ratio range is inverted".into());
        }
        if self.skew.step_deg <= 0.0 || self.skew.max_deg < 0.0 {
            return Err("skew search needs a positive step and non-negative range".into());
        }
        Ok(())
    }
}
