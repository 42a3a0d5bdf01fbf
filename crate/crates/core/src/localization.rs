//! Plate localization from vertical-edge density.
//!
//! The strongest few percent of vertical Sobel responses form a reduced
//! binary edge map. Rows whose edge-pixel variance is within a ratio of the
//! maximum are grouped into horizontal bands, and each band is cut
//! horizontally to the columns carrying most of its edge strength.

use serde::{Deserialize, Serialize};

use crate::imaging::{sobel_vertical, BinaryImage, EdgeMap, GrayImage};
use crate::{Error, Rect, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationParams {
    /// Percentile of the positive edge values kept in the reduced map.
    pub edge_percentile: f64,
    /// Rows with variance `>= ratio * max` are band rows.
    pub band_variance_ratio: f64,
    /// Columns with smoothed strength `>= ratio * max` are kept.
    pub column_strength_ratio: f64,
    /// Marked column runs separated by at most this many smoothing windows
    /// are joined.
    pub column_bridge_windows: usize,
    /// Two regions closer than this many times the shorter one's height are
    /// read as the lines of one plate; 0 disables.
    pub line_merge_gap_ratio: f64,
    /// Inputs at least this many times wider than tall also get the whole
    /// frame as a last candidate, for photos already cropped to the plate;
    /// 0 disables.
    pub full_frame_min_aspect: f64,
    pub gap_tolerance_rows: usize,
    pub min_band_height: usize,
    pub max_candidates: usize,
    pub crop_padding: usize,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        LocalizationParams {
            edge_percentile: 0.97,
            band_variance_ratio: 0.5,
            column_strength_ratio: 0.5,
            column_bridge_windows: 2,
            line_merge_gap_ratio: 0.75,
            full_frame_min_aspect: 2.0,
            gap_tolerance_rows: 2,
            min_band_height: 8,
            max_candidates: 5,
            crop_padding: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowVarianceProfile {
    pub per_row: Vec<f64>,
    pub max_variance: f64,
}

/// Half-open row range `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpan {
    pub start: usize,
    pub end: usize,
}

impl RowSpan {
    pub fn height(&self) -> usize {
        self.end - self.start
    }
}

/// A rectangular plate hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRegion {
    pub bounds: Rect,
    pub crop: GrayImage,
    /// 0 is the strongest candidate.
    pub rank: usize,
    /// Foreground fraction of the reduced edge map inside `bounds`.
    pub edge_density: f64,
}

/// Keeps edge values at or above the given nearest-rank percentile of the
/// strictly positive values. Fewer than 10 positive values yields an empty map.
///
/// With `n` positive values the kept share is the top `ceil((1 - p) * n)`
/// ranks, so 100 distinct values at p = 0.97 keep exactly three.
pub fn reduce_edge_map(edges: &EdgeMap, percentile: f64) -> BinaryImage {
    let mut positive: Vec<f32> = edges.values().iter().copied().filter(|&v| v > 0.0).collect();
    if positive.len() < 10 {
        return BinaryImage::zeros(edges.width(), edges.height());
    }
    positive.sort_unstable_by(|a, b| b.total_cmp(a));
    let keep = (((1.0 - percentile) * positive.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let cut = positive[keep.min(positive.len()) - 1];
    let bits = edges.values().iter().map(|&v| (v > 0.0 && v >= cut) as u8).collect();
    BinaryImage::new(edges.width(), edges.height(), bits).expect("same dimensions as the edge map")
}

/// Per-row variance `p (1 - p)` of a binary map, `p` the row's foreground share.
pub fn row_variance_profile(reduced: &BinaryImage) -> RowVarianceProfile {
    let w = reduced.width() as f64;
    let per_row: Vec<f64> = reduced
        .bits()
        .chunks(reduced.width())
        .map(|row| {
            let p = row.iter().filter(|&&b| b != 0).count() as f64 / w;
            p * (1.0 - p)
        })
        .collect();
    let max_variance = per_row.iter().copied().fold(0.0, f64::max);
    RowVarianceProfile { per_row, max_variance }
}

/// Groups rows passing `variance >= ratio * max` into runs, bridging gaps of
/// at most `gap_tolerance` rows, and drops runs shorter than `min_height`.
pub fn select_horizontal_bands(
    profile: &RowVarianceProfile,
    ratio: f64,
    gap_tolerance: usize,
    min_height: usize,
) -> Result<Vec<RowSpan>> {
    if profile.max_variance <= 0.0 {
        return Err(Error::NoBands);
    }
    let cut = ratio * profile.max_variance;
    let mut runs: Vec<RowSpan> = Vec::new();
    for (row, &v) in profile.per_row.iter().enumerate() {
        if v < cut {
            continue;
        }
        match runs.last_mut() {
            Some(run) if row - run.end <= gap_tolerance => run.end = row + 1,
            _ => runs.push(RowSpan { start: row, end: row + 1 }),
        }
    }
    runs.retain(|r| r.height() >= min_height);
    if runs.is_empty() {
        Err(Error::NoBands)
    } else {
        Ok(runs)
    }
}

/// Horizontal extent of the plate inside a band: per-column edge counts are
/// smoothed with a centered moving average (odd width `max(3, W / 20)`),
/// thresholded at `ratio` of the smoothed maximum. Marked runs separated by
/// at most `bridge` windows are joined, and the longest run wins (leftmost
/// on ties).
pub fn crop_vertical(reduced: &BinaryImage, band: RowSpan, ratio: f64, bridge: usize) -> Result<Rect> {
    let w = reduced.width();
    assert!(band.end <= reduced.height() && band.start < band.end, "band outside image");

    let mut counts = vec![0u32; w];
    for y in band.start..band.end {
        for (x, c) in counts.iter_mut().enumerate() {
            *c += reduced.get(x, y) as u32;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyBand);
    }

    let window = (w / 20).max(3) | 1;
    let half = window / 2;
    let smoothed: Vec<f64> = (0..w)
        .map(|x| {
            let lo = x.saturating_sub(half);
            let hi = (x + half).min(w - 1);
            counts[lo..=hi].iter().sum::<u32>() as f64 / (hi - lo + 1) as f64
        })
        .collect();
    let max = smoothed.iter().copied().fold(0.0, f64::max);
    let cut = ratio * max;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut x = 0;
    while x < w {
        if smoothed[x] >= cut {
            let start = x;
            while x < w && smoothed[x] >= cut {
                x += 1;
            }
            match runs.last_mut() {
                // sparse glyphs (1, 7, T) can dip below the cut between dense ones
                Some(last) if start - last.1 <= window * bridge => last.1 = x,
                _ => runs.push((start, x)),
            }
        } else {
            x += 1;
        }
    }
    let mut best = runs[0];
    for &(s, e) in &runs[1..] {
        if e - s > best.1 - best.0 {
            best = (s, e);
        }
    }
    let (start, end) = best;
    Ok(Rect::new(start, band.start, end - start, band.height()))
}

/// Joins vertically adjacent regions that look like two lines of one plate:
/// the gap between them is at most `gap_ratio` times the shorter height and
/// their column spans overlap by at least half the narrower width. Regions
/// are taken top to bottom and each joins at most one neighbour. A ratio of
/// zero disables joining.
pub fn merge_text_lines(rects: &[Rect], gap_ratio: f64) -> Vec<Rect> {
    let mut sorted = rects.to_vec();
    sorted.sort_by_key(|r| (r.y, r.x));
    let mut out = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let a = sorted[i];
        if let Some(&b) = sorted.get(i + 1) {
            let gap = b.y.saturating_sub(a.bottom()) as f64;
            let overlap = a.right().min(b.right()).saturating_sub(a.x.max(b.x));
            if gap_ratio > 0.0
                && gap <= gap_ratio * a.height.min(b.height) as f64
                && 2 * overlap >= a.width.min(b.width)
            {
                let (x0, y0) = (a.x.min(b.x), a.y.min(b.y));
                out.push(Rect::new(x0, y0, a.right().max(b.right()) - x0, a.bottom().max(b.bottom()) - y0));
                i += 2;
                continue;
            }
        }
        out.push(a);
        i += 1;
    }
    out
}

/// Intermediate products of [`localize_plate`], kept for diagnostics.
#[derive(Debug, Clone)]
pub struct Localization {
    pub edges: EdgeMap,
    pub reduced: BinaryImage,
    pub profile: RowVarianceProfile,
    pub bands: Vec<RowSpan>,
    pub candidates: Vec<CandidateRegion>,
}

pub fn localize_plate(gray: &GrayImage, params: &LocalizationParams) -> Result<Vec<CandidateRegion>> {
    localize_detailed(gray, params)?.map(|l| l.candidates).map_err(|_| Error::NoPlateFound)
}

/// Runs localization and returns every intermediate stage. The outer error is
/// a precondition failure; the inner one reports that no plate was found
/// while still carrying the stages computed so far.
pub fn localize_detailed(
    gray: &GrayImage,
    params: &LocalizationParams,
) -> Result<std::result::Result<Localization, (Error, Localization)>> {
    let edges = sobel_vertical(gray)?;
    let reduced = reduce_edge_map(&edges, params.edge_percentile);
    let profile = row_variance_profile(&reduced);
    let mut stages = Localization { edges, reduced, profile, bands: Vec::new(), candidates: Vec::new() };

    stages.bands = select_horizontal_bands(
        &stages.profile,
        params.band_variance_ratio,
        params.gap_tolerance_rows,
        params.min_band_height,
    )
    .unwrap_or_default();

    let (w, h) = (gray.width(), gray.height());
    let rects: Vec<Rect> = stages
        .bands
        .iter()
        .filter_map(|&band| {
            crop_vertical(&stages.reduced, band, params.column_strength_ratio, params.column_bridge_windows).ok()
        })
        .collect();
    let mut candidates = Vec::new();
    for rect in merge_text_lines(&rects, params.line_merge_gap_ratio) {
        let bounds = rect.padded(params.crop_padding, w, h);
        let on = (bounds.y..bounds.bottom())
            .map(|y| (bounds.x..bounds.right()).filter(|&x| stages.reduced.get(x, y)).count())
            .sum::<usize>();
        candidates.push(CandidateRegion {
            bounds,
            crop: gray.crop(bounds)?,
            rank: 0,
            edge_density: on as f64 / bounds.area() as f64,
        });
    }
    // stable: equal densities keep top-to-bottom order
    candidates.sort_by(|a, b| b.edge_density.total_cmp(&a.edge_density));
    candidates.truncate(params.max_candidates);
    let plate_shaped = params.full_frame_min_aspect > 0.0 && w as f64 >= params.full_frame_min_aspect * h as f64;
    if plate_shaped && !stages.bands.is_empty() {
        let bounds = Rect::new(0, 0, w, h);
        if candidates.iter().all(|c| c.bounds.iou(&bounds) < 0.9) {
            let on = stages.reduced.bits().iter().filter(|&&b| b != 0).count();
            candidates.push(CandidateRegion {
                bounds,
                crop: gray.clone(),
                rank: 0,
                edge_density: on as f64 / bounds.area() as f64,
            });
        }
    }
    if candidates.is_empty() {
        return Ok(Err((Error::NoPlateFound, stages)));
    }
    for (rank, c) in candidates.iter_mut().enumerate() {
        c.rank = rank;
    }
    stages.candidates = candidates;
    Ok(Ok(stages))
}
