//! Per-patch responses: saliency feature channels, the expectation map, and
//! noisy response sampling.
//!
//! Each patch gets an expected response built from its RMS contrast, mean
//! luminance, and histogram entropy, optionally modulated by a blockiness
//! channel on distorted stimuli. At simulation time the observer reads the
//! expectation through foveated Gaussian noise whose standard deviation is
//! the reciprocal of the patch's current detectability.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, PatchGrid};

/// Number of luminance histogram bins used for patch entropy.
const ENTROPY_BINS: usize = 256;

/// Guard against division blow-ups on flat regions in the blockiness ratio.
const BLOCKINESS_EPSILON: f64 = 1e-6;

/// Upper clamp for the blockiness ratio.
const BLOCKINESS_MAX: f64 = 100.0;

/// Per-patch saliency feature channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureChannels {
    /// RMS contrast per patch (population standard deviation of luminance).
    pub contrast: Vec<f64>,
    /// Mean luminance per patch.
    pub luminance: Vec<f64>,
    /// Shannon entropy per patch in bits, from a 256-bin histogram.
    pub entropy: Vec<f64>,
    /// Optional distortion channel; present only when a provider supplied it.
    pub blockiness: Option<Vec<f64>>,
}

impl FeatureChannels {
    pub fn patch_count(&self) -> usize {
        self.contrast.len()
    }

    /// Copy of the channels with the distortion channel removed.
    pub fn without_blockiness(&self) -> Self {
        Self {
            contrast: self.contrast.clone(),
            luminance: self.luminance.clone(),
            entropy: self.entropy.clone(),
            blockiness: None,
        }
    }
}

/// Source of a per-patch distortion (blockiness) channel.
pub trait DistortionProvider {
    fn blockiness(&self, image: &GrayImage, grid: &PatchGrid) -> Result<Vec<f64>>;
}

/// Built-in estimator comparing block-boundary and interior discontinuities.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundaryBlockiness;

impl DistortionProvider for BoundaryBlockiness {
    fn blockiness(&self, image: &GrayImage, grid: &PatchGrid) -> Result<Vec<f64>> {
        compute_blockiness_map(image, grid)
    }
}

/// Reads an externally computed per-patch blockiness map from a text file.
#[derive(Debug, Clone)]
pub struct BlockinessFile {
    pub path: PathBuf,
}

impl DistortionProvider for BlockinessFile {
    fn blockiness(&self, _image: &GrayImage, grid: &PatchGrid) -> Result<Vec<f64>> {
        load_blockiness_map(&self.path, grid)
    }
}

/// Extracts the per-patch feature channels from an image.
pub fn extract_features(
    image: &GrayImage,
    grid: &PatchGrid,
    distortion: Option<&dyn DistortionProvider>,
) -> Result<FeatureChannels> {
    grid.matches_image(image)?;
    let patches = grid.patch_count();
    let mut contrast = Vec::with_capacity(patches);
    let mut luminance = Vec::with_capacity(patches);
    let mut entropy = Vec::with_capacity(patches);
    let size = grid.patch_size();
    for index in 0..patches {
        let (x0, y0) = grid.patch_origin(index);
        let mut sum = 0.0;
        let mut histogram = [0u32; ENTROPY_BINS];
        for y in y0..y0 + size {
            for x in x0..x0 + size {
                let v = image.get(x, y);
                sum += v;
                histogram[bin_of(v)] += 1;
            }
        }
        let count = (size * size) as f64;
        let mean = sum / count;
        let mut sq_dev = 0.0;
        for y in y0..y0 + size {
            for x in x0..x0 + size {
                let d = image.get(x, y) - mean;
                sq_dev += d * d;
            }
        }
        contrast.push((sq_dev / count).sqrt());
        luminance.push(mean);
        entropy.push(histogram_entropy_bits(&histogram, count));
    }
    let blockiness = match distortion {
        Some(provider) => {
            let values = provider.blockiness(image, grid)?;
            if values.len() != patches {
                return Err(Error::PatchCountMismatch {
                    expected: patches,
                    actual: values.len(),
                });
            }
            Some(values)
        }
        None => None,
    };
    Ok(FeatureChannels {
        contrast,
        luminance,
        entropy,
        blockiness,
    })
}

fn bin_of(value: f64) -> usize {
    ((value * ENTROPY_BINS as f64) as usize).min(ENTROPY_BINS - 1)
}

fn histogram_entropy_bits(histogram: &[u32], total: f64) -> f64 {
    let mut bits = 0.0;
    for &count in histogram {
        if count > 0 {
            let p = count as f64 / total;
            bits -= p * p.log2();
        }
    }
    bits
}

/// Estimates per-patch blockiness as the ratio of luminance discontinuity at
/// 8-pixel-aligned block boundaries to discontinuity elsewhere in the patch.
///
/// Boundaries are aligned to the image origin (a boundary pair straddles
/// columns or rows where the larger coordinate is a multiple of 8). Patches
/// containing no interior boundary pair score 0. The ratio is clamped to
/// [0, 100]; a constant patch scores 0.
pub fn compute_blockiness_map(image: &GrayImage, grid: &PatchGrid) -> Result<Vec<f64>> {
    grid.matches_image(image)?;
    let size = grid.patch_size();
    let mut map = Vec::with_capacity(grid.patch_count());
    for index in 0..grid.patch_count() {
        let (x0, y0) = grid.patch_origin(index);
        let mut boundary_sum = 0.0;
        let mut boundary_count = 0u32;
        let mut interior_sum = 0.0;
        let mut interior_count = 0u32;
        for y in y0..y0 + size {
            for x in (x0 + 1)..x0 + size {
                let step = (image.get(x, y) - image.get(x - 1, y)).abs();
                if x % 8 == 0 {
                    boundary_sum += step;
                    boundary_count += 1;
                } else {
                    interior_sum += step;
                    interior_count += 1;
                }
            }
        }
        for x in x0..x0 + size {
            for y in (y0 + 1)..y0 + size {
                let step = (image.get(x, y) - image.get(x, y - 1)).abs();
                if y % 8 == 0 {
                    boundary_sum += step;
                    boundary_count += 1;
                } else {
                    interior_sum += step;
                    interior_count += 1;
                }
            }
        }
        let boundary_mean = if boundary_count > 0 {
            boundary_sum / boundary_count as f64
        } else {
            0.0
        };
        let interior_mean = if interior_count > 0 {
            interior_sum / interior_count as f64
        } else {
            0.0
        };
        let ratio = boundary_mean / (interior_mean + BLOCKINESS_EPSILON);
        map.push(ratio.clamp(0.0, BLOCKINESS_MAX));
    }
    Ok(map)
}

/// Loads a per-patch blockiness map: whitespace-separated non-negative
/// decimals in row-major patch order, one value per patch.
pub fn load_blockiness_map(path: &Path, grid: &PatchGrid) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let expected = grid.patch_count();
    let mut values = Vec::with_capacity(expected);
    for (index, token) in text.split_whitespace().enumerate() {
        let value: f64 = token.parse().map_err(|_| Error::BlockinessParse {
            path: path.to_path_buf(),
            index,
            text: token.to_string(),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::BlockinessValue {
                path: path.to_path_buf(),
                index,
                value,
            });
        }
        values.push(value);
    }
    if values.len() != expected {
        return Err(Error::PatchCountMismatch {
            expected,
            actual: values.len(),
        });
    }
    Ok(values)
}

/// Writes a per-patch map in the format `load_blockiness_map` reads, one grid
/// row per line.
pub fn write_blockiness_map(path: &Path, grid: &PatchGrid, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), grid.patch_count());
    let mut text = String::new();
    for row in values.chunks(grid.cols()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Rank-based histogram equalization onto (0, 1], averaging tied ranks.
///
/// Order-preserving: strictly smaller inputs map to strictly smaller
/// outputs, and ties share one output value.
pub fn histogram_equalize(values: &[f64]) -> Vec<f64> {
    assert!(
        values.iter().all(|v| v.is_finite()),
        "equalization input must be finite"
    );
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // 1-based ranks; tied entries share the mean rank of their run.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &index in &order[start..end] {
            out[index] = mean_rank / n as f64;
        }
        start = end;
    }
    out
}

/// Channel weights applied as exponents when combining features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseExponents {
    pub contrast: f64,
    pub luminance: f64,
    pub entropy: f64,
    pub blockiness: f64,
}

impl ResponseExponents {
    pub fn is_finite(&self) -> bool {
        self.contrast.is_finite()
            && self.luminance.is_finite()
            && self.entropy.is_finite()
            && self.blockiness.is_finite()
    }
}

impl Default for ResponseExponents {
    fn default() -> Self {
        Self {
            contrast: 1.0,
            luminance: 1.0,
            entropy: 1.0,
            blockiness: 1.0,
        }
    }
}

/// The noiseless per-patch response map, scaled so its mean is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseExpectation {
    /// Expected response per patch; non-negative, whole-image mean one.
    pub values: Vec<f64>,
    /// The constant that scaled the raw map to mean one.
    pub scale: f64,
    /// Exponents the map was built with.
    pub exponents: ResponseExponents,
}

impl ResponseExpectation {
    pub fn patch_count(&self) -> usize {
        self.values.len()
    }
}

/// Combines feature channels into the expected response map.
///
/// Pristine mode multiplies contrast, luminance, and entropy raised to their
/// exponents. Distorted mode first scales that saliency product to mean one,
/// then multiplies by the rank-equalized blockiness channel raised to its
/// exponent. Either way the final map is rescaled to mean one. Zero bases
/// with zero exponents evaluate to one, so a zero exponent disables a
/// channel.
pub fn compute_expectation(
    features: &FeatureChannels,
    exponents: ResponseExponents,
    distorted: bool,
) -> Result<ResponseExpectation> {
    let patches = features.patch_count();
    assert!(
        features.luminance.len() == patches && features.entropy.len() == patches,
        "feature channel lengths disagree"
    );
    if distorted && features.blockiness.is_none() {
        return Err(Error::MissingBlockiness);
    }
    if !distorted && features.blockiness.is_some() {
        return Err(Error::UnexpectedBlockiness);
    }

    let mut raw: Vec<f64> = (0..patches)
        .map(|i| {
            features.contrast[i].powf(exponents.contrast)
                * features.luminance[i].powf(exponents.luminance)
                * features.entropy[i].powf(exponents.entropy)
        })
        .collect();
    if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResponse { index });
    }

    if distorted {
        let saliency_mean = mean(&raw);
        if saliency_mean == 0.0 {
            return Err(Error::DegenerateResponse);
        }
        let equalized = histogram_equalize(features.blockiness.as_ref().unwrap());
        for (i, value) in raw.iter_mut().enumerate() {
            *value = (*value / saliency_mean) * equalized[i].powf(exponents.blockiness);
        }
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResponse { index });
        }
    }

    let raw_mean = mean(&raw);
    if raw_mean == 0.0 {
        return Err(Error::DegenerateResponse);
    }
    let scale = 1.0 / raw_mean;
    let values: Vec<f64> = raw.iter().map(|v| v * scale).collect();
    debug_assert!((mean(&values) - 1.0).abs() < 1e-9);
    Ok(ResponseExpectation {
        values,
        scale,
        exponents,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One noisy readout of every patch from a single fixation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSample {
    /// Noisy response per patch.
    pub values: Vec<f64>,
    /// Patch index the observer was fixating when the sample was encoded.
    pub fixation: usize,
}

/// Draws a noisy response for every patch from the given fixation.
///
/// Each patch's response is its expectation plus Gaussian noise with
/// standard deviation `1 / detectability`, so poorly resolved patches are
/// read with more noise. With `zero_noise` the expectation is returned
/// verbatim and the RNG is untouched.
pub fn sample_response<R: Rng + ?Sized>(
    expectation: &ResponseExpectation,
    visibility_row: &[f64],
    fixation: usize,
    rng: &mut R,
    zero_noise: bool,
) -> ResponseSample {
    assert_eq!(visibility_row.len(), expectation.patch_count());
    assert!(
        visibility_row.iter().all(|&d| d > 0.0),
        "detectability must be positive"
    );
    let values = if zero_noise {
        expectation.values.clone()
    } else {
        expectation
            .values
            .iter()
            .zip(visibility_row)
            .map(|(&e, &d)| {
                let z: f64 = rng.sample(StandardNormal);
                e + z / d
            })
            .collect()
    };
    ResponseSample { values, fixation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::build_patch_grid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn image_from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f64) -> GrayImage {
        let mut pixels = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage::new(width, height, pixels).unwrap()
    }

    fn uniform_features(patches: usize, value: f64) -> FeatureChannels {
        FeatureChannels {
            contrast: vec![value; patches],
            luminance: vec![value; patches],
            entropy: vec![value; patches],
            blockiness: None,
        }
    }

    #[test]
    fn constant_patch_features() {
        let img = image_from_fn(16, 16, |_, _| 0.5);
        let grid = build_patch_grid(&img, 16).unwrap();
        let f = extract_features(&img, &grid, None).unwrap();
        assert_eq!(f.contrast[0], 0.0);
        assert_eq!(f.luminance[0], 0.5);
        assert_eq!(f.entropy[0], 0.0);
        assert!(f.blockiness.is_none());
    }

    #[test]
    fn binary_patch_features() {
        let img = image_from_fn(16, 16, |x, _| if x < 8 { 0.0 } else { 1.0 });
        let grid = build_patch_grid(&img, 16).unwrap();
        let f = extract_features(&img, &grid, None).unwrap();
        assert!((f.luminance[0] - 0.5).abs() < 1e-12);
        assert!((f.contrast[0] - 0.5).abs() < 1e-12);
        assert!((f.entropy[0] - 1.0).abs() < 1e-12);

        // Independent histogram route for the entropy value.
        let mut histogram = vec![0u32; 256];
        for &v in img.pixels() {
            histogram[((v * 256.0) as usize).min(255)] += 1;
        }
        let total: u32 = histogram.iter().sum();
        let mut expect = 0.0;
        for &c in &histogram {
            if c > 0 {
                let p = c as f64 / total as f64;
                expect -= p * p.log2();
            }
        }
        assert!((f.entropy[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_beats_constant_on_contrast_and_entropy() {
        let img = image_from_fn(32, 16, |x, y| {
            if x < 16 {
                if (x + y) % 2 == 0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                0.5
            }
        });
        let grid = build_patch_grid(&img, 16).unwrap();
        let f = extract_features(&img, &grid, None).unwrap();
        assert!(f.contrast[0] > f.contrast[1]);
        assert!(f.entropy[0] > f.entropy[1]);
    }

    #[test]
    fn blockiness_near_one_on_smooth_ramp() {
        let img = image_from_fn(64, 64, |x, _| x as f64 / 63.0);
        let grid = build_patch_grid(&img, 16).unwrap();
        let map = compute_blockiness_map(&img, &grid).unwrap();
        for &b in &map {
            assert!((b - 1.0).abs() < 1e-2, "ramp blockiness {b}");
        }
    }

    #[test]
    fn blockiness_saturates_on_constant_tiles() {
        // Constant 8x8 tiles with distinct levels: interior steps are zero,
        // boundary steps positive, so the ratio hits the clamp.
        let img = image_from_fn(64, 64, |x, y| {
            let tile = (y / 8) * 8 + x / 8;
            tile as f64 / 63.0
        });
        let grid = build_patch_grid(&img, 16).unwrap();
        let map = compute_blockiness_map(&img, &grid).unwrap();
        for &b in &map {
            assert!(b > 10.0);
            assert_eq!(b, BLOCKINESS_MAX);
        }
    }

    #[test]
    fn blockiness_zero_on_constant_image() {
        let img = image_from_fn(32, 32, |_, _| 0.25);
        let grid = build_patch_grid(&img, 16).unwrap();
        let map = compute_blockiness_map(&img, &grid).unwrap();
        assert!(map.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn blockiness_file_roundtrip_matches_computed() {
        let img = image_from_fn(48, 32, |x, y| {
            let tile = (y / 8) * 11 + x / 8;
            (tile % 7) as f64 / 6.0
        });
        let grid = build_patch_grid(&img, 16).unwrap();
        let computed = compute_blockiness_map(&img, &grid).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("block.txt");
        write_blockiness_map(&path, &grid, &computed).unwrap();
        let loaded = load_blockiness_map(&path, &grid).unwrap();
        assert_eq!(computed, loaded);

        // Identical downstream expectation maps.
        let mut features = extract_features(&img, &grid, None).unwrap();
        features.blockiness = Some(computed);
        let from_computed =
            compute_expectation(&features, ResponseExponents::default(), true).unwrap();
        features.blockiness = Some(loaded);
        let from_loaded =
            compute_expectation(&features, ResponseExponents::default(), true).unwrap();
        assert_eq!(from_computed.values, from_loaded.values);
    }

    #[test]
    fn blockiness_loader_validates() {
        let img = image_from_fn(32, 32, |_, _| 0.5);
        let grid = build_patch_grid(&img, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let zeros = dir.path().join("zeros.txt");
        std::fs::write(&zeros, "0 0 0 0").unwrap();
        assert_eq!(load_blockiness_map(&zeros, &grid).unwrap(), vec![0.0; 4]);

        let short = dir.path().join("short.txt");
        std::fs::write(&short, "0 0 0").unwrap();
        assert!(matches!(
            load_blockiness_map(&short, &grid).unwrap_err(),
            Error::PatchCountMismatch {
                expected: 4,
                actual: 3
            }
        ));

        let negative = dir.path().join("neg.txt");
        std::fs::write(&negative, "0 0 -1 0").unwrap();
        assert!(matches!(
            load_blockiness_map(&negative, &grid).unwrap_err(),
            Error::BlockinessValue { index: 2, .. }
        ));

        let garbage = dir.path().join("garbage.txt");
        std::fs::write(&garbage, "0 0 zebra 0").unwrap();
        assert!(matches!(
            load_blockiness_map(&garbage, &grid).unwrap_err(),
            Error::BlockinessParse { index: 2, .. }
        ));
    }

    #[test]
    fn equalize_strictly_increasing() {
        let out = histogram_equalize(&[0.1, 0.4, 0.9, 2.0]);
        assert_eq!(out, vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn equalize_ties_share_mean_rank() {
        let out = histogram_equalize(&[3.0, 3.0, 3.0, 3.0]);
        // All tied: mean rank (1+2+3+4)/4 over n=4.
        assert_eq!(out, vec![0.625; 4]);
    }

    #[test]
    fn expectation_of_uniform_unit_features() {
        let e = compute_expectation(&uniform_features(6, 1.0), ResponseExponents::default(), false)
            .unwrap();
        assert_eq!(e.values, vec![1.0; 6]);
        assert_eq!(e.scale, 1.0);
    }

    #[test]
    fn zero_exponents_flatten_any_features() {
        let features = FeatureChannels {
            contrast: vec![0.0, 0.3, 2.0],
            luminance: vec![0.5, 0.0, 1.0],
            entropy: vec![1.0, 4.0, 0.0],
            blockiness: None,
        };
        let exponents = ResponseExponents {
            contrast: 0.0,
            luminance: 0.0,
            entropy: 0.0,
            blockiness: 0.0,
        };
        let e = compute_expectation(&features, exponents, false).unwrap();
        assert_eq!(e.values, vec![1.0; 3]);
    }

    #[test]
    fn mean_one_scaling_two_patches() {
        let features = FeatureChannels {
            contrast: vec![1.0, 3.0],
            luminance: vec![1.0, 1.0],
            entropy: vec![1.0, 1.0],
            blockiness: None,
        };
        let e = compute_expectation(&features, ResponseExponents::default(), false).unwrap();
        assert!((e.scale - 0.5).abs() < 1e-12);
        assert!((e.values[0] - 0.5).abs() < 1e-12);
        assert!((e.values[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_all_zero_map_is_error() {
        let e = compute_expectation(&uniform_features(4, 0.0), ResponseExponents::default(), false);
        assert!(matches!(e.unwrap_err(), Error::DegenerateResponse));
    }

    #[test]
    fn blockiness_channel_presence_is_checked() {
        let mut features = uniform_features(4, 1.0);
        assert!(matches!(
            compute_expectation(&features, ResponseExponents::default(), true).unwrap_err(),
            Error::MissingBlockiness
        ));
        features.blockiness = Some(vec![1.0; 4]);
        assert!(matches!(
            compute_expectation(&features, ResponseExponents::default(), false).unwrap_err(),
            Error::UnexpectedBlockiness
        ));
    }

    #[test]
    fn distorted_with_zero_blockiness_exponent_matches_pristine() {
        let mut features = FeatureChannels {
            contrast: vec![0.2, 0.4, 0.1, 0.8],
            luminance: vec![0.5, 0.6, 0.7, 0.2],
            entropy: vec![2.0, 1.0, 3.0, 4.0],
            blockiness: Some(vec![5.0, 0.0, 2.0, 9.0]),
        };
        let mut exponents = ResponseExponents::default();
        exponents.blockiness = 0.0;
        let distorted = compute_expectation(&features, exponents, true).unwrap();
        features.blockiness = None;
        let pristine = compute_expectation(&features, exponents, false).unwrap();
        for (a, b) in distorted.values.iter().zip(&pristine.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_returns_expectation() {
        let e = compute_expectation(&uniform_features(4, 1.0), ResponseExponents::default(), false)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sample = sample_response(&e, &[5.0, 5.0, 5.0, 5.0], 2, &mut rng, true);
        assert_eq!(sample.values, e.values);
        assert_eq!(sample.fixation, 2);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let e = compute_expectation(&uniform_features(8, 1.0), ResponseExponents::default(), false)
            .unwrap();
        let row = vec![2.5; 8];
        let a = sample_response(&e, &row, 0, &mut ChaCha8Rng::seed_from_u64(9), false);
        let b = sample_response(&e, &row, 0, &mut ChaCha8Rng::seed_from_u64(9), false);
        assert_eq!(a, b);
    }

    #[test]
    fn noise_spread_tracks_inverse_detectability() {
        let e = compute_expectation(&uniform_features(1, 1.0), ResponseExponents::default(), false)
            .unwrap();
        let row = vec![5.0];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let w = sample_response(&e, &row, 0, &mut rng, false).values[0] - e.values[0];
            sum += w;
            sum_sq += w * w;
        }
        let n = draws as f64;
        let variance = sum_sq / n - (sum / n) * (sum / n);
        let sd = variance.sqrt();
        assert!((sd - 0.2).abs() < 0.01, "sample sd {sd}");
    }

    proptest! {
        #[test]
        fn expectation_has_mean_one_and_no_negatives(
            contrast in proptest::collection::vec(0.0..1.0f64, 2..40),
        ) {
            let n = contrast.len();
            let features = FeatureChannels {
                contrast,
                luminance: vec![0.5; n],
                entropy: vec![2.0; n],
                blockiness: None,
            };
            match compute_expectation(&features, ResponseExponents::default(), false) {
                Ok(e) => {
                    let mean = e.values.iter().sum::<f64>() / n as f64;
                    prop_assert!((mean - 1.0).abs() < 1e-9);
                    prop_assert!(e.values.iter().all(|v| v.is_finite() && *v >= 0.0));
                }
                Err(Error::DegenerateResponse) => {} // all-zero contrast draw
                Err(other) => return Err(TestCaseError::fail(format!("{other}"))),
            }
        }

        #[test]
        fn equalization_preserves_order(
            values in proptest::collection::vec(-100.0..100.0f64, 1..50),
        ) {
            let out = histogram_equalize(&values);
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(out[i] < out[j]);
                    } else if values[i] == values[j] {
                        prop_assert_eq!(out[i], out[j]);
                    }
                }
            }
            let argmax_in = (0..values.len())
                .max_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
                .unwrap();
            let argmax_out = (0..out.len())
                .max_by(|&a, &b| out[a].partial_cmp(&out[b]).unwrap())
                .unwrap();
            prop_assert_eq!(values[argmax_in], values[argmax_out]);
        }
    }
}
