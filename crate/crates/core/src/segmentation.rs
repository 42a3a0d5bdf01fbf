//! Character isolation inside a plate crop: binarize, straighten, bridge
//! stroke gaps, label connected components, reject non-characters and put
//! the survivors in reading order.

use serde::{Deserialize, Serialize};

use crate::imaging::{
    binarize, deslant, dilate, otsu_threshold, require_min_size, BinaryImage, GrayImage, IntensityThreshold,
};
use crate::{Error, Rect, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentBox {
    /// Label in the image the component was extracted from (1-based).
    pub label: u32,
    pub bounds: Rect,
    pub pixel_count: usize,
    /// (row, column)
    pub centroid: (f64, f64),
}

impl ComponentBox {
    /// Foreground density of the bounding box.
    pub fn existence_ratio(&self) -> f64 {
        self.pixel_count as f64 / self.bounds.area() as f64
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.bounds.width as f64 / self.bounds.height as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterBox {
    pub component: ComponentBox,
    /// 0 for the top line, 1 for the bottom one.
    pub line_index: usize,
    pub position_in_line: usize,
}

/// Per-label pixel map plus one box per label.
#[derive(Debug, Clone)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    /// 0 is background.
    pub labels: Vec<u32>,
    pub components: Vec<ComponentBox>,
}

/// 8-connected labeling by two-pass union-find.
pub fn label_components(img: &BinaryImage) -> LabelMap {
    let (w, h) = (img.width(), img.height());
    let mut labels = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0];

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for y in 0..h {
        for x in 0..w {
            if !img.get(x, y) {
                continue;
            }
            // previously visited neighbours: W, NW, N, NE
            let mut neighbours = [0u32; 4];
            if x > 0 {
                neighbours[0] = labels[y * w + x - 1];
            }
            if y > 0 {
                let up = (y - 1) * w;
                if x > 0 {
                    neighbours[1] = labels[up + x - 1];
                }
                neighbours[2] = labels[up + x];
                if x + 1 < w {
                    neighbours[3] = labels[up + x + 1];
                }
            }
            let mut root = 0;
            for &n in neighbours.iter().filter(|&&n| n != 0) {
                let r = find(&mut parent, n);
                if root == 0 {
                    root = r;
                } else if r != root {
                    let (lo, hi) = (root.min(r), root.max(r));
                    parent[hi as usize] = lo;
                    root = lo;
                }
            }
            if root == 0 {
                root = parent.len() as u32;
                parent.push(root);
            }
            labels[y * w + x] = root;
        }
    }

    // compact roots to 1..=n in raster order of first appearance
    let mut compact = vec![0u32; parent.len()];
    let mut next = 0u32;
    let mut acc: Vec<(usize, usize, usize, usize, usize, f64, f64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == 0 {
                continue;
            }
            let root = find(&mut parent, l) as usize;
            if compact[root] == 0 {
                next += 1;
                compact[root] = next;
                acc.push((x, y, x, y, 0, 0.0, 0.0));
            }
            let id = compact[root];
            labels[y * w + x] = id;
            let a = &mut acc[id as usize - 1];
            a.0 = a.0.min(x);
            a.1 = a.1.min(y);
            a.2 = a.2.max(x);
            a.3 = a.3.max(y);
            a.4 += 1;
            a.5 += y as f64;
            a.6 += x as f64;
        }
    }

    let components = acc
        .into_iter()
        .enumerate()
        .map(|(i, (x0, y0, x1, y1, n, sr, sc))| ComponentBox {
            label: i as u32 + 1,
            bounds: Rect::from_inclusive(y0, x0, y1, x1),
            pixel_count: n,
            centroid: (sr / n as f64, sc / n as f64),
        })
        .collect();
    LabelMap { width: w, height: h, labels, components }
}

pub fn connected_components(img: &BinaryImage) -> Vec<ComponentBox> {
    label_components(img).components
}

/// Numeric thresholds of the character/non-character rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRules {
    /// Bounding-box area as a fraction of the crop area.
    pub area_min: f64,
    pub area_max: f64,
    /// Width / height.
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// Foreground pixels / bounding-box area.
    pub existence_min: f64,
    pub existence_max: f64,
    /// Height relative to the median height of the components passing the
    /// first three rules.
    pub height_min_ratio: f64,
    pub height_max_ratio: f64,
    pub max_characters: usize,
    /// Drop components touching the left or right edge of the crop: plate
    /// borders and background cut by the crop, or characters cut in half.
    pub reject_side_touching: bool,
}

impl Default for SegmentationRules {
    fn default() -> Self {
        SegmentationRules {
            area_min: 0.005,
            area_max: 0.30,
            aspect_min: 0.1,
            aspect_max: 1.0,
            existence_min: 0.2,
            existence_max: 0.9,
            height_min_ratio: 0.33,
            height_max_ratio: 1.25,
            max_characters: 12,
            reject_side_touching: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Border,
    Area,
    Aspect,
    Existence,
    Height,
    OverCap,
}

/// Applies every rule and reports, per input component, why it was dropped.
pub fn judge_components(
    components: &[ComponentBox],
    crop_dims: (usize, usize),
    rules: &SegmentationRules,
) -> Vec<Option<Rejection>> {
    let crop_area = (crop_dims.0 * crop_dims.1) as f64;
    let mut verdict: Vec<Option<Rejection>> = components
        .iter()
        .map(|c| {
            let area = c.bounds.area() as f64 / crop_area;
            if rules.reject_side_touching && (c.bounds.x == 0 || c.bounds.right() == crop_dims.0) {
                Some(Rejection::Border)
            } else if !(rules.area_min..=rules.area_max).contains(&area) {
                Some(Rejection::Area)
            } else if !(rules.aspect_min..=rules.aspect_max).contains(&c.aspect_ratio()) {
                Some(Rejection::Aspect)
            } else if !(rules.existence_min..=rules.existence_max).contains(&c.existence_ratio()) {
                Some(Rejection::Existence)
            } else {
                None
            }
        })
        .collect();

    let mut heights: Vec<usize> =
        components.iter().zip(&verdict).filter(|(_, v)| v.is_none()).map(|(c, _)| c.bounds.height).collect();
    if heights.is_empty() {
        return verdict;
    }
    heights.sort_unstable();
    let median = median_sorted(&heights);
    for (c, v) in components.iter().zip(verdict.iter_mut()) {
        let r = c.bounds.height as f64 / median;
        if v.is_none() && !(rules.height_min_ratio..=rules.height_max_ratio).contains(&r) {
            *v = Some(Rejection::Height);
        }
    }

    let mut survivors: Vec<usize> = (0..components.len()).filter(|&i| verdict[i].is_none()).collect();
    if survivors.len() > rules.max_characters {
        // largest first; earlier components win equal areas
        survivors.sort_by(|&a, &b| components[b].bounds.area().cmp(&components[a].bounds.area()).then(a.cmp(&b)));
        for &i in &survivors[rules.max_characters..] {
            verdict[i] = Some(Rejection::OverCap);
        }
    }
    verdict
}

/// Keeps the components that pass the side-border, area, aspect, existence
/// and height rules, capped to the largest `max_characters`. Input order is preserved.
pub fn filter_components(
    components: &[ComponentBox],
    crop_dims: (usize, usize),
    rules: &SegmentationRules,
) -> Vec<ComponentBox> {
    judge_components(components, crop_dims, rules)
        .into_iter()
        .zip(components)
        .filter(|(v, _)| v.is_none())
        .map(|(_, c)| *c)
        .collect()
}

fn median_sorted(xs: &[usize]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0
    }
}

/// Splits components into at most two text lines by centroid row and orders
/// them top line first, left to right.
pub fn order_characters(kept: &[ComponentBox]) -> Result<Vec<CharacterBox>> {
    if kept.is_empty() {
        return Ok(Vec::new());
    }
    let mut heights: Vec<usize> = kept.iter().map(|c| c.bounds.height).collect();
    heights.sort_unstable();
    let split_gap = 0.5 * median_sorted(&heights);

    let mut by_row: Vec<&ComponentBox> = kept.iter().collect();
    by_row.sort_by(|a, b| a.centroid.0.total_cmp(&b.centroid.0).then(a.centroid.1.total_cmp(&b.centroid.1)));
    let mut lines: Vec<Vec<&ComponentBox>> = vec![vec![by_row[0]]];
    for pair in by_row.windows(2) {
        if pair[1].centroid.0 - pair[0].centroid.0 > split_gap {
            lines.push(Vec::new());
        }
        lines.last_mut().expect("at least one line").push(pair[1]);
    }

    if lines.len() > 2 {
        let mut idx: Vec<usize> = (0..lines.len()).collect();
        // most populous first, upper line on ties
        idx.sort_by(|&a, &b| lines[b].len().cmp(&lines[a].len()).then(a.cmp(&b)));
        let mut keep = [idx[0], idx[1]];
        let held = lines[keep[0]].len() + lines[keep[1]].len();
        if (held as f64) < 0.7 * kept.len() as f64 {
            return Err(Error::TooManyLines);
        }
        keep.sort_unstable();
        lines = keep.iter().map(|&i| std::mem::take(&mut lines[i])).collect();
    }

    let mut out = Vec::with_capacity(kept.len());
    for (line_index, mut line) in lines.into_iter().enumerate() {
        line.sort_by(|a, b| a.centroid.1.total_cmp(&b.centroid.1));
        for (position_in_line, c) in line.into_iter().enumerate() {
            out.push(CharacterBox { component: *c, line_index, position_in_line });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub rules: SegmentationRules,
    pub dilation_radius: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams { rules: SegmentationRules::default(), dilation_radius: 1 }
    }
}

/// One isolated character: its place in reading order and its undilated
/// pixels, cropped tight.
#[derive(Debug, Clone)]
pub struct SegmentedCharacter {
    pub character: CharacterBox,
    pub image: BinaryImage,
}

/// Every stage of [`segment_plate`], for diagnostics.
#[derive(Debug, Clone)]
pub struct PlateSegmentation {
    pub threshold: IntensityThreshold,
    pub slant_deg: f64,
    /// Binarized and deslanted, before dilation.
    pub binary: BinaryImage,
    pub dilated: BinaryImage,
    pub labels: LabelMap,
    /// Undilated geometry per label, aligned with `labels.components`.
    pub ink: Vec<ComponentBox>,
    pub verdicts: Vec<Option<Rejection>>,
    pub characters: Vec<SegmentedCharacter>,
}

pub fn segment_plate(crop: &GrayImage, params: &SegmentationParams) -> Result<Vec<SegmentedCharacter>> {
    let seg = segment_detailed(crop, params)?;
    if seg.characters.is_empty() {
        Err(Error::NoCharacters)
    } else {
        Ok(seg.characters)
    }
}

/// Like [`segment_plate`] but returns the intermediate stages and an empty
/// character list instead of `NoCharacters`.
pub fn segment_detailed(crop: &GrayImage, params: &SegmentationParams) -> Result<PlateSegmentation> {
    require_min_size(crop.width(), crop.height(), 8)?;
    let threshold = otsu_threshold(crop);
    let (binary, slant_deg) = deslant(&binarize(crop, threshold));
    let dilated = dilate(&binary, params.dilation_radius);
    let labels = label_components(&dilated);
    let ink = ink_components(&binary, &labels);
    let dims = (crop.width(), crop.height());
    let verdicts = judge_components(&ink, dims, &params.rules);
    let kept: Vec<ComponentBox> = ink.iter().zip(&verdicts).filter(|(_, v)| v.is_none()).map(|(c, _)| *c).collect();

    let ordered = order_characters(&kept)?;
    let characters = ordered
        .into_iter()
        .map(|character| {
            let b = character.component.bounds;
            let label = character.component.label;
            let image = BinaryImage::from_fn(b.width, b.height, |x, y| {
                let (x, y) = (x + b.x, y + b.y);
                binary.get(x, y) && labels.labels[y * labels.width + x] == label
            });
            SegmentedCharacter { character, image }
        })
        .collect();

    Ok(PlateSegmentation { threshold, slant_deg, binary, dilated, labels, ink, verdicts, characters })
}

/// Boxes of the undilated pixels under each label of a dilated label map.
/// Dilation only decides which pixels belong together; the geometry the
/// rules judge is that of the ink itself.
pub fn ink_components(binary: &BinaryImage, labels: &LabelMap) -> Vec<ComponentBox> {
    let n = labels.components.len();
    let mut acc = vec![(usize::MAX, usize::MAX, 0usize, 0usize, 0usize, 0.0f64, 0.0f64); n];
    for y in 0..labels.height {
        for x in 0..labels.width {
            let l = labels.labels[y * labels.width + x];
            if l == 0 || !binary.get(x, y) {
                continue;
            }
            let a = &mut acc[l as usize - 1];
            a.0 = a.0.min(x);
            a.1 = a.1.min(y);
            a.2 = a.2.max(x);
            a.3 = a.3.max(y);
            a.4 += 1;
            a.5 += y as f64;
            a.6 += x as f64;
        }
    }
    acc.into_iter()
        .zip(&labels.components)
        .map(|((x0, y0, x1, y1, count, sr, sc), c)| {
            if count == 0 {
                // labels computed on some other image; fall back to the label's own box
                return *c;
            }
            ComponentBox {
                label: c.label,
                bounds: Rect::from_inclusive(y0, x0, y1, x1),
                pixel_count: count,
                centroid: (sr / count as f64, sc / count as f64),
            }
        })
        .collect()
}
