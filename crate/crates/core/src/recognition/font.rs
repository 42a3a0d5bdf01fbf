//! Stroke fonts: characters as polylines drawn with a round pen.
//!
//! The bundled font is the source of the default template archive and of the
//! text in synthetic plates, so both sides of the matcher share one design.

use std::collections::BTreeMap;

use crate::imaging::BinaryImage;
use crate::{Error, Result};

const BUILTIN_SOURCE: &str = include_str!("../../assets/plate_sans.font");

/// Polyline outline of one character in cap-height units.
#[derive(Debug, Clone, PartialEq)]
pub struct Outline {
    segments: Vec<[(f64, f64); 2]>,
    /// (x0, y0, x1, y1) of the stroke centre lines.
    extent: (f64, f64, f64, f64),
}

impl Outline {
    fn from_polylines(lines: &[Vec<(f64, f64)>]) -> Outline {
        let mut segments = Vec::new();
        let mut extent = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for line in lines {
            for &(x, y) in line {
                extent = (extent.0.min(x), extent.1.min(y), extent.2.max(x), extent.3.max(y));
            }
            if line.len() == 1 {
                segments.push([line[0], line[0]]);
            }
            segments.extend(line.windows(2).map(|p| [p[0], p[1]]));
        }
        Outline { segments, extent }
    }

    /// Distance from `(x, y)` to the nearest stroke centre line.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        self.segments
            .iter()
            .map(|&[(ax, ay), (bx, by)]| {
                let (dx, dy) = (bx - ax, by - ay);
                let len2 = dx * dx + dy * dy;
                let t = if len2 == 0.0 { 0.0 } else { (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0) };
                let (px, py) = (ax + t * dx - x, ay + t * dy - y);
                px * px + py * py
            })
            .fold(f64::MAX, f64::min)
            .sqrt()
    }

    pub fn extent(&self) -> (f64, f64, f64, f64) {
        self.extent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrokeFont {
    pub name: String,
    pub version: String,
    /// Pen width in cap-height units.
    pub stroke: f64,
    /// Cell width in cap-height units.
    pub advance: f64,
    glyphs: BTreeMap<char, Outline>,
}

impl StrokeFont {
    pub fn builtin() -> StrokeFont {
        StrokeFont::parse(BUILTIN_SOURCE).expect("bundled font parses")
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN_SOURCE
    }

    pub fn parse(src: &str) -> Result<StrokeFont> {
        let mut name = None;
        let mut version = None;
        let mut stroke = None;
        let mut advance = None;
        let mut glyphs = BTreeMap::new();

        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim();
            let err = |m: String| Error::FontParse(format!("line {}: {m}", i + 1));
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("glyph ") {
                let (label, body) = rest.split_once(':').ok_or_else(|| err("missing ':'".into()))?;
                let mut chars = label.trim().chars();
                let (Some(ch), None) = (chars.next(), chars.next()) else {
                    return Err(err(format!("bad glyph label {label:?}")));
                };
                let lines =
                    body.split('|').map(|stroke| parse_polyline(stroke).map_err(&err)).collect::<Result<Vec<_>>>()?;
                if lines.iter().any(Vec::is_empty) {
                    return Err(err(format!("empty stroke in '{ch}'")));
                }
                if glyphs.insert(ch, Outline::from_polylines(&lines)).is_some() {
                    return Err(err(format!("glyph '{ch}' defined twice")));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("unexpected {line:?}")))?;
            let value = value.trim();
            let number = || value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "version" => version = Some(value.to_string()),
                "stroke" => stroke = Some(number()?),
                "advance" => advance = Some(number()?),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }

        let missing = |k: &str| Error::FontParse(format!("missing '{k}'"));
        Ok(StrokeFont {
            name: name.ok_or_else(|| missing("name"))?,
            version: version.ok_or_else(|| missing("version"))?,
            stroke: stroke.ok_or_else(|| missing("stroke"))?,
            advance: advance.ok_or_else(|| missing("advance"))?,
            glyphs,
        })
    }

    pub fn outline(&self, ch: char) -> Option<&Outline> {
        self.glyphs.get(&ch)
    }

    pub fn labels(&self) -> impl Iterator<Item = char> + '_ {
        self.glyphs.keys().copied()
    }

    /// Renders `ch` with the given cap height in pixels, thresholded at the
    /// pen edge, and cropped to its ink.
    pub fn rasterize(&self, ch: char, cap_px: f64) -> Option<BinaryImage> {
        let outline = self.outline(ch)?;
        let r = self.stroke / 2.0;
        let (x0, y0, x1, y1) = outline.extent;
        let left = ((x0 - r) * cap_px).floor() as i64 - 1;
        let top = ((y0 - r) * cap_px).floor() as i64 - 1;
        let w = (((x1 + r) * cap_px).ceil() as i64 + 1 - left) as usize;
        let h = (((y1 + r) * cap_px).ceil() as i64 + 1 - top) as usize;
        let full = BinaryImage::from_fn(w, h, |x, y| {
            let fx = (left as f64 + x as f64 + 0.5) / cap_px;
            let fy = (top as f64 + y as f64 + 0.5) / cap_px;
            outline.distance(fx, fy) <= r
        });
        crop_to_ink(&full)
    }
}

fn parse_polyline(src: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut points = Vec::new();
    for token in src.split_whitespace() {
        if let Some(args) = token.strip_prefix("arc(").and_then(|t| t.strip_suffix(')')) {
            let v: Vec<f64> = args
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|e| format!("arc argument {a:?}: {e}")))
                .collect::<std::result::Result<_, _>>()?;
            let &[cx, cy, rx, ry, a0, a1] = v.as_slice() else {
                return Err(format!("arc needs 6 arguments, got {}", v.len()));
            };
            let n = ((a1 - a0).abs() / 7.5).ceil().max(1.0) as usize;
            for k in 0..=n {
                let a = (a0 + (a1 - a0) * k as f64 / n as f64).to_radians();
                points.push((cx + rx * a.cos(), cy - ry * a.sin()));
            }
        } else {
            let (x, y) = token.split_once(',').ok_or_else(|| format!("bad point {token:?}"))?;
            let x = x.parse::<f64>().map_err(|e| format!("bad point {token:?}: {e}"))?;
            let y = y.parse::<f64>().map_err(|e| format!("bad point {token:?}: {e}"))?;
            points.push((x, y));
        }
    }
    Ok(points)
}

/// Crops to the bounding box of the foreground; `None` when there is none.
pub(crate) fn crop_to_ink(img: &BinaryImage) -> Option<BinaryImage> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    (x0 != usize::MAX).then(|| img.crop(crate::Rect::from_inclusive(y0, x0, y1, x1)).expect("ink box is inside"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_font_covers_the_alphabet() {
        let font = StrokeFont::builtin();
        assert_eq!(font.version, "default-1");
        let labels: String = font.labels().collect();
        assert_eq!(labels, "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ");
    }

    #[test]
    fn rasterized_glyphs_are_single_components() {
        let font = StrokeFont::builtin();
        for ch in font.labels() {
            for cap in [24.0, 40.0, 96.0] {
                let img = font.rasterize(ch, cap).unwrap();
                let n = crate::segmentation::connected_components(&img).len();
                assert_eq!(n, 1, "'{ch}' at {cap}px has {n} components");
                // cap height spans the full box
                assert!((img.height() as f64 - cap).abs() <= 2.0, "'{ch}' height {}", img.height());
            }
        }
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(StrokeFont::parse("name = x\n"), Err(Error::FontParse(_))));
        let dup = "name=a\nversion=1\nstroke=0.1\nadvance=0.6\nglyph A: 0,0 1,1\nglyph A: 0,0 1,1\n";
        assert!(StrokeFont::parse(dup).is_err());
        let bad_arc = "name=a\nversion=1\nstroke=0.1\nadvance=0.6\nglyph A: arc(1,2,3)\n";
        assert!(StrokeFont::parse(bad_arc).is_err());
    }

    #[test]
    fn arc_expands_to_ellipse_points() {
        let pts = parse_polyline("arc(0.5,0.5,0.25,0.5,0,180)").unwrap();
        let first = pts[0];
        let last = *pts.last().unwrap();
        assert!((first.0 - 0.75).abs() < 1e-12 && (first.1 - 0.5).abs() < 1e-12);
        assert!((last.0 - 0.25).abs() < 1e-12);
        assert!(pts.iter().any(|p| (p.1 - 0.0).abs() < 1e-9)); // passes the top
    }
}
