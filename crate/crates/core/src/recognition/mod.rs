//! Character classification by correlation against reference templates.

mod archive;
pub mod font;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use self::archive::{load_templates, write_template_dir, write_template_zip};
use crate::imaging::normalize_glyph;
pub use crate::imaging::{Glyph, GLYPH_SIZE};
use crate::{Error, Rect, Result};
use font::StrokeFont;

/// Recognized symbols in tie-break order: letters before digits.
pub const ALPHABET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Cap height used when rendering templates from a stroke font.
const TEMPLATE_RENDER_PX: f64 = 128.0;

fn alphabet_index(label: char) -> Option<usize> {
    ALPHABET.chars().position(|c| c == label)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub label: char,
    pub glyph: Glyph,
}

/// Exactly one non-constant template for each symbol of [`ALPHABET`], stored
/// in alphabet order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    version: String,
    templates: Vec<Template>,
}

impl TemplateSet {
    pub fn new(version: impl Into<String>, templates: Vec<Template>) -> Result<TemplateSet> {
        let mut slots: Vec<Option<Template>> = vec![None; ALPHABET.len()];
        for t in templates {
            let idx = alphabet_index(t.label)
                .ok_or_else(|| Error::BadArchive(format!("label '{}' is not in the alphabet", t.label)))?;
            if slots[idx].is_some() {
                return Err(Error::DuplicateLabel(t.label));
            }
            let ones = t.glyph.bits().iter().filter(|&&b| b == 1).count();
            if ones == 0 || ones == GLYPH_SIZE * GLYPH_SIZE {
                return Err(Error::ConstantTemplate(t.label));
            }
            slots[idx] = Some(t);
        }
        let templates = slots
            .into_iter()
            .zip(ALPHABET.chars())
            .map(|(slot, label)| slot.ok_or(Error::MissingLabel(label)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TemplateSet { version: version.into(), templates })
    }

    /// Renders every alphabet symbol of `font`.
    pub fn from_font(font: &StrokeFont) -> Result<TemplateSet> {
        let templates = ALPHABET
            .chars()
            .map(|label| {
                let ink = font.rasterize(label, TEMPLATE_RENDER_PX).ok_or(Error::MissingLabel(label))?;
                let bounds = Rect::new(0, 0, ink.width(), ink.height());
                Ok(Template { label, glyph: normalize_glyph(&ink, bounds)? })
            })
            .collect::<Result<Vec<_>>>()?;
        TemplateSet::new(font.version.clone(), templates)
    }

    /// Templates rendered from the bundled font (version `default-1`).
    pub fn builtin() -> &'static TemplateSet {
        static SET: OnceLock<TemplateSet> = OnceLock::new();
        SET.get_or_init(|| TemplateSet::from_font(&StrokeFont::builtin()).expect("bundled font is complete"))
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn get(&self, label: char) -> Option<&Template> {
        alphabet_index(label).map(|i| &self.templates[i])
    }
}

/// Pearson correlation of two 32x32 bit grids; 0 if either is constant.
pub fn correlation(a: &Glyph, b: &Glyph) -> f64 {
    let n = (GLYPH_SIZE * GLYPH_SIZE) as i64;
    let (mut sa, mut sb, mut sab) = (0i64, 0i64, 0i64);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        sa += x as i64;
        sb += y as i64;
        sab += (x & y) as i64;
    }
    // bits are 0/1 so sum(x^2) = sum(x)
    let var_a = n * sa - sa * sa;
    let var_b = n * sb - sb * sb;
    if var_a == 0 || var_b == 0 {
        return 0.0;
    }
    let cov = n * sab - sa * sb;
    (cov as f64 / ((var_a as f64) * (var_b as f64)).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterResult {
    pub label: char,
    pub score: f64,
    pub runner_up: (char, f64),
}

/// Best and second-best template by correlation. Equal scores go to the label
/// earlier in [`ALPHABET`].
pub fn classify_glyph(glyph: &Glyph, templates: &TemplateSet) -> CharacterResult {
    let mut best: Option<(char, f64)> = None;
    let mut second: Option<(char, f64)> = None;
    for t in templates.templates() {
        let s = correlation(glyph, &t.glyph);
        match best {
            Some((_, b)) if s <= b => {
                if second.is_none_or(|(_, r)| s > r) {
                    second = Some((t.label, s));
                }
            }
            _ => {
                second = best;
                best = Some((t.label, s));
            }
        }
    }
    let (label, score) = best.expect("template sets are never empty");
    CharacterResult { label, score, runner_up: second.expect("template sets hold 36 entries") }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateReading {
    pub text: String,
    pub characters: Vec<CharacterResult>,
    /// Mean of the per-character scores.
    pub confidence: f64,
    /// Characters per text line, top line first.
    pub line_lengths: Vec<usize>,
}

pub fn read_plate(glyphs: &[Glyph], templates: &TemplateSet) -> PlateReading {
    let characters: Vec<CharacterResult> = glyphs.iter().map(|g| classify_glyph(g, templates)).collect();
    let text = characters.iter().map(|c| c.label).collect();
    let confidence = if characters.is_empty() {
        0.0
    } else {
        characters.iter().map(|c| c.score).sum::<f64>() / characters.len() as f64
    };
    let line_lengths = vec![characters.len()];
    PlateReading { text, characters, confidence, line_lengths }
}
