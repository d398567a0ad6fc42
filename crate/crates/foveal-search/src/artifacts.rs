//! Portable on-disk artifacts: scanpath JSON documents, saliency maps,
//! overlay renderings, and plain-text matrix dumps.
//!
//! Scanpaths serialize to a versioned, pretty-printed JSON document with a
//! fixed key order, so identical runs produce byte-identical files. Maps go
//! to binary PGM (P5), which keeps golden tests free of image-library
//! variance; matrices dump as whitespace-separated decimal text using the
//! shortest round-trippable float form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{ImageMeta, ScanpathTrace, TrialConfig};
use crate::error::{Error, Result};
use crate::raster::{pgm_bytes, GrayImage};

/// Version tag stamped into every scanpath document.
pub const SCHEMA_VERSION: u32 = 1;

/// One fixation in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationRecord {
    /// 1-based position within the scanpath.
    pub step: usize,
    /// 0-based patch index in row-major grid order.
    pub patch: usize,
    /// Pixel coordinates of the fixated patch center.
    pub x: f64,
    pub y: f64,
}

/// The JSON scanpath schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanpathDocument {
    pub schema_version: u32,
    pub image: ImageMeta,
    pub config: TrialConfig,
    pub seed: u64,
    pub fixations: Vec<FixationRecord>,
    /// Relative paths of per-step map dumps, when the run recorded them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step_maps: Option<Vec<String>>,
}

/// Converts a finished trace into its serialized form.
pub fn document_from_trace(
    trace: &ScanpathTrace,
    step_maps: Option<Vec<String>>,
) -> ScanpathDocument {
    let fixations = trace
        .fixations
        .iter()
        .enumerate()
        .map(|(i, &patch)| {
            let (x, y) = trace.fixation_center(i);
            FixationRecord {
                step: i + 1,
                patch,
                x,
                y,
            }
        })
        .collect();
    ScanpathDocument {
        schema_version: SCHEMA_VERSION,
        image: trace.image.clone(),
        config: trace.config.clone(),
        seed: trace.seed,
        fixations,
        step_maps,
    }
}

/// Writes a trace as a scanpath document without step references.
pub fn write_scanpath(trace: &ScanpathTrace, path: &Path) -> Result<()> {
    write_scanpath_document(&document_from_trace(trace, None), path)
}

/// Writes a scanpath document: pretty JSON, fixed key order, trailing newline.
pub fn write_scanpath_document(document: &ScanpathDocument, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(document).map_err(|source| Error::ScanpathJson {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a scanpath document, rejecting unknown schema versions.
pub fn read_scanpath(path: &Path) -> Result<ScanpathDocument> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let document: ScanpathDocument =
        serde_json::from_str(&text).map_err(|source| Error::ScanpathJson {
            path: path.to_path_buf(),
            source,
        })?;
    if document.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: path.to_path_buf(),
            found: document.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    Ok(document)
}

/// A dense fixation-density map over image pixels, max-normalized to [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl SaliencyMap {
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let bytes = pgm_bytes(self.width, self.height, &self.values);
        std::fs::write(path, bytes).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Sums unit-mass impulses at the given pixels and blurs them with an
/// isotropic Gaussian of the given sigma, truncated at 3 sigma.
///
/// The kernel is separable and normalized per axis, so every impulse far
/// enough from the border contributes total mass 1; border impulses lose the
/// truncated tail. The result is unnormalized.
pub fn accumulate_blurred(points: &[(f64, f64)], dims: (u32, u32), sigma: f64) -> Vec<f64> {
    let (width, height) = (dims.0 as usize, dims.1 as usize);
    let mut field = vec![0.0; width * height];
    for &(x, y) in points {
        let px = (x.round() as i64).clamp(0, width as i64 - 1) as usize;
        let py = (y.round() as i64).clamp(0, height as i64 - 1) as usize;
        field[py * width + px] += 1.0;
    }

    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for offset in -radius..=radius {
        let t = offset as f64 / sigma;
        kernel.push((-0.5 * t * t).exp());
    }
    let kernel_sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= kernel_sum;
    }

    let mut horizontal = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let weight = field[y * width + x];
            if weight == 0.0 {
                continue;
            }
            for (k, &kv) in kernel.iter().enumerate() {
                let tx = x as i64 + k as i64 - radius;
                if tx >= 0 && tx < width as i64 {
                    horizontal[y * width + tx as usize] += weight * kv;
                }
            }
        }
    }
    let mut blurred = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let weight = horizontal[y * width + x];
            if weight == 0.0 {
                continue;
            }
            for (k, &kv) in kernel.iter().enumerate() {
                let ty = y as i64 + k as i64 - radius;
                if ty >= 0 && ty < height as i64 {
                    blurred[ty as usize * width + x] += weight * kv;
                }
            }
        }
    }
    blurred
}

/// Blurred fixation-density map from raw pixel positions, max-normalized.
pub fn saliency_from_points(
    points: &[(f64, f64)],
    dims: (u32, u32),
    sigma: f64,
) -> Result<SaliencyMap> {
    if points.is_empty() {
        return Err(Error::Saliency("no fixations to aggregate".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Saliency(format!("blur sigma must be positive, got {sigma}")));
    }
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::InvalidDimensions {
            width: dims.0,
            height: dims.1,
        });
    }
    let mut values = accumulate_blurred(points, dims, sigma);
    let max = values.iter().cloned().fold(0.0, f64::max);
    debug_assert!(max > 0.0);
    for v in &mut values {
        *v /= max;
    }
    Ok(SaliencyMap {
        width: dims.0,
        height: dims.1,
        values,
    })
}

/// Aggregates every fixation of every trace into one saliency map.
pub fn fixations_to_saliency(
    traces: &[ScanpathTrace],
    dims: (u32, u32),
    blur_sigma: f64,
) -> Result<SaliencyMap> {
    let mut points = Vec::new();
    for trace in traces {
        for i in 0..trace.fixations.len() {
            points.push(trace.fixation_center(i));
        }
    }
    saliency_from_points(&points, dims, blur_sigma)
}

const MARKER_RADIUS: i64 = 3;
const GLYPH_SCALE: i64 = 2;

/// 3x5 digit bitmasks, one row per byte, most significant of 3 bits left.
const DIGIT_GLYPHS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111], // 0
    [0b010, 0b110, 0b010, 0b010, 0b111], // 1
    [0b111, 0b001, 0b111, 0b100, 0b111], // 2
    [0b111, 0b001, 0b111, 0b001, 0b111], // 3
    [0b101, 0b101, 0b111, 0b001, 0b001], // 4
    [0b111, 0b100, 0b111, 0b001, 0b111], // 5
    [0b111, 0b100, 0b111, 0b101, 0b111], // 6
    [0b111, 0b001, 0b010, 0b010, 0b010], // 7
    [0b111, 0b101, 0b111, 0b101, 0b111], // 8
    [0b111, 0b101, 0b111, 0b001, 0b111], // 9
];

fn put_pixel(canvas: &mut [f64], width: u32, height: u32, x: i64, y: i64, value: f64) {
    if x >= 0 && y >= 0 && x < width as i64 && y < height as i64 {
        canvas[y as usize * width as usize + x as usize] = value;
    }
}

fn draw_segment(canvas: &mut [f64], width: u32, height: u32, a: (i64, i64), b: (i64, i64)) {
    // Bresenham over the clipped canvas.
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put_pixel(canvas, width, height, x, y, 1.0);
        if x == b.0 && y == b.1 {
            break;
        }
        let doubled = 2 * err;
        if doubled >= dy {
            err += dy;
            x += sx;
        }
        if doubled <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_disc(canvas: &mut [f64], width: u32, height: u32, cx: i64, cy: i64) {
    for dy in -MARKER_RADIUS..=MARKER_RADIUS {
        for dx in -MARKER_RADIUS..=MARKER_RADIUS {
            if dx * dx + dy * dy <= MARKER_RADIUS * MARKER_RADIUS {
                put_pixel(canvas, width, height, cx + dx, cy + dy, 1.0);
            }
        }
    }
}

fn draw_number(canvas: &mut [f64], width: u32, height: u32, origin: (i64, i64), number: usize) {
    let digits: Vec<usize> = number
        .to_string()
        .bytes()
        .map(|b| (b - b'0') as usize)
        .collect();
    let advance = 3 * GLYPH_SCALE + 2;
    for (slot, &digit) in digits.iter().enumerate() {
        let left = origin.0 + slot as i64 * advance;
        for (row, mask) in DIGIT_GLYPHS[digit].iter().enumerate() {
            for col in 0..3i64 {
                if mask & (0b100 >> col) != 0 {
                    for sy in 0..GLYPH_SCALE {
                        for sx in 0..GLYPH_SCALE {
                            put_pixel(
                                canvas,
                                width,
                                height,
                                left + col * GLYPH_SCALE + sx,
                                origin.1 + row as i64 * GLYPH_SCALE + sy,
                                1.0,
                            );
                        }
                    }
                }
            }
        }
    }
}

/// Renders the scanpath over a brightness-halved copy of the stimulus.
///
/// Each fixation gets a filled disc and its 1-based step number; consecutive
/// fixations are joined by line segments. Written as binary PGM.
pub fn render_overlay(image: &GrayImage, trace: &ScanpathTrace, path: &Path) -> Result<()> {
    let expected_cols = trace.image.cols;
    let expected_rows = trace.image.rows;
    let fits = trace.image.width == image.width()
        && trace.image.height == image.height()
        && expected_cols * trace.config.patch_size as usize <= image.width() as usize
        && expected_rows * trace.config.patch_size as usize <= image.height() as usize;
    if !fits {
        return Err(Error::GridImageMismatch {
            grid_cols: expected_cols,
            grid_rows: expected_rows,
            patch_size: trace.config.patch_size,
            width: image.width(),
            height: image.height(),
        });
    }
    let (width, height) = (image.width(), image.height());
    let mut canvas: Vec<f64> = image.pixels().iter().map(|v| v / 2.0).collect();

    let centers: Vec<(i64, i64)> = (0..trace.fixations.len())
        .map(|i| {
            let (x, y) = trace.fixation_center(i);
            (x.round() as i64, y.round() as i64)
        })
        .collect();
    for pair in centers.windows(2) {
        draw_segment(&mut canvas, width, height, pair[0], pair[1]);
    }
    for (i, &(cx, cy)) in centers.iter().enumerate() {
        draw_disc(&mut canvas, width, height, cx, cy);
        draw_number(
            &mut canvas,
            width,
            height,
            (cx + MARKER_RADIUS + 2, cy + MARKER_RADIUS + 2),
            i + 1,
        );
    }

    let bytes = pgm_bytes(width, height, &canvas);
    std::fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Rescales values affinely onto [0, 1]; a constant slice maps to all zeros.
pub fn normalize_unit(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Writes a row-major matrix as space-separated decimal text, one row per
/// line, using the shortest digit string that parses back to the same value.
pub fn write_matrix_text(values: &[f64], cols: usize, path: &Path) -> Result<()> {
    assert!(cols > 0 && values.len() % cols == 0);
    let mut text = String::new();
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a per-patch map as a PGM with one pixel per patch.
///
/// Values are expected in [0, 1]; anything outside saturates.
pub fn write_patch_map_pgm(values: &[f64], cols: usize, rows: usize, path: &Path) -> Result<()> {
    assert_eq!(values.len(), cols * rows);
    let bytes = pgm_bytes(cols as u32, rows as u32, values);
    std::fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
