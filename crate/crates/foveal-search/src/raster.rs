//! Stimulus rasters: grayscale images, the patch lattice, and 1/f noise synthesis.
//!
//! All luminance values live in [0, 1]. Images are partitioned into square
//! patches whose centers form the candidate fixation lattice; trailing pixels
//! that do not fill a whole patch are dropped rather than padded, so border
//! remainders never contribute synthetic responses.

use std::f64::consts::TAU;
use std::path::Path;

use image::DynamicImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// A grayscale raster with row-major luminance values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image after validating dimensions, buffer length, and value range.
    pub fn new(width: u32, height: u32, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::PixelCountMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        for (index, &value) in pixels.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::PixelOutOfRange { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Luminance at pixel (x, y). Panics if out of bounds.
    pub fn get(&self, x: u32, y: u32) -> f64 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Serializes the image as binary PGM (P5), 8 bits per pixel.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let bytes = pgm_bytes(self.width, self.height, &self.pixels);
        std::fs::write(path, bytes).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Encodes [0, 1] values as a binary PGM (P5) byte stream.
///
/// Values are linearly quantized to 0-255 with ties rounding up, so 0.5 maps
/// to 128. Inputs outside [0, 1] are clamped.
pub fn pgm_bytes(width: u32, height: u32, values: &[f64]) -> Vec<u8> {
    assert_eq!(values.len(), width as usize * height as usize);
    let header = format!("P5\n{} {}\n255\n", width, height);
    let mut bytes = Vec::with_capacity(header.len() + values.len());
    bytes.extend_from_slice(header.as_bytes());
    bytes.extend(values.iter().map(|&v| quantize_u8(v)));
    bytes
}

fn quantize_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Loads a PNG, BMP, or PGM raster and converts it to normalized grayscale.
///
/// Color inputs are reduced with Rec.601 weights (299/587/114 per mille);
/// already-gray inputs pass through scaled to [0, 1]. Alpha is ignored.
pub fn load_gray_image(path: &Path) -> Result<GrayImage> {
    let decoded = image::open(path).map_err(|err| match err {
        image::ImageError::IoError(source) => Error::Read {
            path: path.to_path_buf(),
            source,
        },
        source => Error::Decode {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let (width, height) = (decoded.width(), decoded.height());
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(img) => img.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(img) => img.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(img) => img.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(img) => {
            img.pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
        }
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                // Integer-weighted form keeps white at exactly 1.0.
                (299.0 * r as f64 + 587.0 * g as f64 + 114.0 * b as f64) / 255_000.0
            })
            .collect(),
    };
    GrayImage::new(width, height, pixels)
}

/// The candidate fixation lattice: a partition of an image into square patches.
///
/// Patch index runs row-major; index 0 is the top-left patch. Centers are in
/// pixel coordinates at `(col*s + s/2, row*s + s/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    patch_size: u32,
    cols: usize,
    rows: usize,
    centers: Vec<(f64, f64)>,
}

impl PatchGrid {
    pub fn patch_size(&self) -> u32 {
        self.patch_size
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of patches in the lattice.
    pub fn patch_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    /// Center of patch `index` in pixel coordinates.
    pub fn center_of(&self, index: usize) -> (f64, f64) {
        self.centers[index]
    }

    /// Patch containing pixel (x, y), or `None` for dropped-margin pixels.
    pub fn index_of(&self, x: u32, y: u32) -> Option<usize> {
        let s = self.patch_size;
        let col = (x / s) as usize;
        let row = (y / s) as usize;
        (col < self.cols && row < self.rows).then(|| row * self.cols + col)
    }

    /// Top-left pixel of patch `index`.
    pub fn patch_origin(&self, index: usize) -> (u32, u32) {
        let col = (index % self.cols) as u32;
        let row = (index / self.cols) as u32;
        (col * self.patch_size, row * self.patch_size)
    }

    /// Checks that this grid was built from an image of the given dimensions.
    pub fn matches_image(&self, image: &GrayImage) -> Result<()> {
        let expect_cols = (image.width() / self.patch_size) as usize;
        let expect_rows = (image.height() / self.patch_size) as usize;
        if expect_cols != self.cols || expect_rows != self.rows {
            return Err(Error::GridImageMismatch {
                grid_cols: self.cols,
                grid_rows: self.rows,
                patch_size: self.patch_size,
                width: image.width(),
                height: image.height(),
            });
        }
        Ok(())
    }
}

/// Partitions an image into full `patch_size`-square patches.
///
/// The grid covers `floor(W/s) x floor(H/s)` patches; remainder pixels on the
/// right and bottom edges are excluded.
pub fn build_patch_grid(image: &GrayImage, patch_size: u32) -> Result<PatchGrid> {
    if patch_size < 2 {
        return Err(Error::PatchSizeTooSmall(patch_size));
    }
    if patch_size > image.width() || patch_size > image.height() {
        return Err(Error::PatchSizeTooLarge {
            patch_size,
            width: image.width(),
            height: image.height(),
        });
    }
    let cols = (image.width() / patch_size) as usize;
    let rows = (image.height() / patch_size) as usize;
    let half = patch_size as f64 / 2.0;
    let mut centers = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            centers.push((
                col as f64 * patch_size as f64 + half,
                row as f64 * patch_size as f64 + half,
            ));
        }
    }
    Ok(PatchGrid {
        patch_size,
        cols,
        rows,
        centers,
    })
}

/// Synthesizes a noise image whose amplitude spectrum falls off as 1/f.
///
/// The spectrum gets uniformly random phases from a ChaCha stream seeded with
/// `seed`, the DC term is zeroed, and the real part of the inverse transform
/// is affinely rescaled to [0, 1]. Output is deterministic given the seed.
pub fn synthesize_one_over_f(width: u32, height: u32, seed: u64) -> Result<GrayImage> {
    if width < 8 || height < 8 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let (w, h) = (width as usize, height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = vec![Complex::new(0.0, 0.0); w * h];
    for row in 0..h {
        let fy = wrapped_frequency(row, h);
        for col in 0..w {
            let fx = wrapped_frequency(col, w);
            let radial = (fx * fx + fy * fy).sqrt();
            let phase = rng.gen_range(0.0..TAU);
            let amplitude = if radial > 0.0 { 1.0 / radial } else { 0.0 };
            spectrum[row * w + col] = Complex::from_polar(amplitude, phase);
        }
    }

    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_inverse(w);
    for row in spectrum.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_inverse(h);
    let mut column = vec![Complex::new(0.0, 0.0); h];
    for col in 0..w {
        for row in 0..h {
            column[row] = spectrum[row * w + col];
        }
        col_fft.process(&mut column);
        for row in 0..h {
            spectrum[row * w + col] = column[row];
        }
    }

    let real: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let lo = real.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(hi > lo, "noise field collapsed to a constant");
    let span = hi - lo;
    let pixels = real.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect();
    GrayImage::new(width, height, pixels)
}

/// Signed FFT-bin frequency in cycles per pixel.
fn wrapped_frequency(index: usize, n: usize) -> f64 {
    let signed = if index <= n / 2 {
        index as f64
    } else {
        index as f64 - n as f64
    };
    signed / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat_image(width: u32, height: u32, value: f64) -> GrayImage {
        GrayImage::new(width, height, vec![value; (width * height) as usize]).unwrap()
    }

    #[test]
    fn white_rgb_png_loads_as_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("white.png");
        let img = image::RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255]));
        img.save(&path).unwrap();
        let gray = load_gray_image(&path).unwrap();
        assert!(gray.pixels().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn black_png_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("black.png");
        let img = image::RgbImage::from_pixel(2, 2, image::Rgb([0, 0, 0]));
        img.save(&path).unwrap();
        let gray = load_gray_image(&path).unwrap();
        assert!(gray.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_red_uses_rec601_weight() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("red.png");
        let img = image::RgbImage::from_pixel(1, 1, image::Rgb([255, 0, 0]));
        img.save(&path).unwrap();
        let gray = load_gray_image(&path).unwrap();
        assert!((gray.get(0, 0) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn gray_pgm_passes_through_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gray.pgm");
        std::fs::write(&path, b"P5\n2 2\n255\n\x00\x80\xff\x40").unwrap();
        let gray = load_gray_image(&path).unwrap();
        assert_eq!(gray.get(0, 0), 0.0);
        assert_eq!(gray.get(1, 0), 128.0 / 255.0);
        assert_eq!(gray.get(0, 1), 1.0);
        assert_eq!(gray.get(1, 1), 64.0 / 255.0);
    }

    #[test]
    fn missing_file_is_read_error() {
        let err = load_gray_image(Path::new("/nonexistent/f.png")).unwrap_err();
        assert!(matches!(err, Error::Read { .. }));
    }

    #[test]
    fn garbage_bytes_are_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        std::fs::write(&path, b"not an image at all").unwrap();
        let err = load_gray_image(&path).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
    }

    #[test]
    fn zero_dimension_rejected() {
        let err = GrayImage::new(0, 4, vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidDimensions { .. }));
    }

    #[test]
    fn out_of_range_pixel_rejected() {
        let err = GrayImage::new(2, 1, vec![0.5, 1.5]).unwrap_err();
        assert!(matches!(err, Error::PixelOutOfRange { index: 1, .. }));
    }

    #[test]
    fn grid_512x768_has_1536_patches() {
        let grid = build_patch_grid(&flat_image(512, 768, 0.0), 16).unwrap();
        assert_eq!(grid.cols(), 32);
        assert_eq!(grid.rows(), 48);
        assert_eq!(grid.patch_count(), 1536);
    }

    #[test]
    fn grid_single_patch_center() {
        let grid = build_patch_grid(&flat_image(16, 16, 0.0), 16).unwrap();
        assert_eq!(grid.patch_count(), 1);
        assert_eq!(grid.center_of(0), (8.0, 8.0));
    }

    #[test]
    fn grid_drops_remainder_margins() {
        let grid = build_patch_grid(&flat_image(100, 100, 0.0), 16).unwrap();
        assert_eq!(grid.patch_count(), 36);
        // Pixels in the trailing 4-pixel margin belong to no patch.
        assert_eq!(grid.index_of(96, 10), None);
        assert_eq!(grid.index_of(10, 99), None);
        assert_eq!(grid.index_of(95, 95), Some(35));
    }

    #[test]
    fn oversized_patch_rejected() {
        let err = build_patch_grid(&flat_image(8, 32, 0.0), 16).unwrap_err();
        assert!(matches!(err, Error::PatchSizeTooLarge { .. }));
        let err = build_patch_grid(&flat_image(32, 32, 0.0), 1).unwrap_err();
        assert!(matches!(err, Error::PatchSizeTooSmall(1)));
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let a = synthesize_one_over_f(32, 24, 7).unwrap();
        let b = synthesize_one_over_f(32, 24, 7).unwrap();
        let c = synthesize_one_over_f(32, 24, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_spans_unit_interval() {
        let img = synthesize_one_over_f(64, 64, 3).unwrap();
        let lo = img.pixels().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = img.pixels().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn noise_rejects_tiny_dimensions() {
        assert!(synthesize_one_over_f(7, 64, 0).is_err());
    }

    #[test]
    fn pgm_quantization_rounds_half_up() {
        let bytes = pgm_bytes(3, 1, &[0.0, 0.5, 1.0]);
        assert_eq!(bytes, b"P5\n3 1\n255\n\x00\x80\xff");
    }

    proptest! {
        #[test]
        fn partition_covers_each_patch_exactly(
            width in 16u32..100,
            height in 16u32..100,
            patch_size in 2u32..16,
        ) {
            let grid = build_patch_grid(&flat_image(width, height, 0.0), patch_size).unwrap();
            let mut counts = vec![0usize; grid.patch_count()];
            for y in 0..height {
                for x in 0..width {
                    if let Some(i) = grid.index_of(x, y) {
                        counts[i] += 1;
                    }
                }
            }
            let per_patch = (patch_size * patch_size) as usize;
            prop_assert!(counts.iter().all(|&c| c == per_patch));
        }

        #[test]
        fn center_index_roundtrip(
            width in 16u32..100,
            height in 16u32..100,
            patch_size in 2u32..16,
        ) {
            let grid = build_patch_grid(&flat_image(width, height, 0.0), patch_size).unwrap();
            for i in 0..grid.patch_count() {
                let (cx, cy) = grid.center_of(i);
                prop_assert!(cx < width as f64 && cy < height as f64);
                prop_assert_eq!(grid.index_of(cx as u32, cy as u32), Some(i));
            }
        }
    }
}
