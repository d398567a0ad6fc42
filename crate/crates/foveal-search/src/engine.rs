//! Trial orchestration: from a stimulus image to a fixation scanpath.
//!
//! A trial starts at the patch nearest the image midpoint and then loops:
//! sample a noisy foveated response from the current fixation, fold it into
//! the posterior, and let the configured searcher pick the next fixation.
//! A trial with F fixations therefore performs F belief updates and F - 1
//! selections. Batches run trials in parallel with per-trial seeds derived
//! from one base seed, so a batch is reproducible and each trial is
//! independently replayable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foveation::{build_visibility_table, VisibilityProfile, VisibilityTable};
use crate::raster::{build_patch_grid, GrayImage, PatchGrid};
use crate::response::{
    compute_expectation, extract_features, sample_response, BoundaryBlockiness,
    DistortionProvider, FeatureChannels, ResponseExpectation, ResponseExponents,
};
use crate::inference::PosteriorState;
use crate::searchers::SearcherKind;

/// Everything that defines one simulated viewing, minus the stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub searcher: SearcherKind,
    /// Number of fixations in the scanpath, including the forced first one.
    pub num_fixations: usize,
    /// Patch side length in pixels.
    pub patch_size: u32,
    pub profile: VisibilityProfile,
    pub exponents: ResponseExponents,
    /// How many past fixations suppress the location prior; 0 disables.
    pub inhibition_depth: usize,
    /// Whether responses are modulated by a blockiness channel.
    pub distorted: bool,
    /// Skip response noise; the observer reads expectations exactly.
    pub zero_noise: bool,
    /// Keep per-step posterior, prior, response, and score maps.
    pub record_steps: bool,
    /// Nominal fixation-to-fixation interval; metadata only.
    pub saccade_interval_ms: u32,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            searcher: SearcherKind::Elm,
            num_fixations: 12,
            patch_size: 16,
            profile: VisibilityProfile::default(),
            exponents: ResponseExponents::default(),
            inhibition_depth: 8,
            distorted: false,
            zero_noise: false,
            record_steps: false,
            saccade_interval_ms: 250,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_fixations == 0 {
            return Err(Error::InvalidConfig(
                "a trial needs at least one fixation".into(),
            ));
        }
        if !self.exponents.is_finite() {
            return Err(Error::InvalidConfig("exponents must be finite".into()));
        }
        Ok(())
    }
}

/// Identity and patch layout of the stimulus a scanpath was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    /// Input path, or a synthetic-stimulus tag like `1of:256x256:seed=7`.
    pub source: Option<String>,
    pub width: u32,
    pub height: u32,
    /// Patch grid shape actually used.
    pub cols: usize,
    pub rows: usize,
}

/// Stimulus-dependent state shared by every trial in a batch.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub config: TrialConfig,
    pub meta: ImageMeta,
    pub grid: PatchGrid,
    pub features: FeatureChannels,
    pub expectation: ResponseExpectation,
    pub table: VisibilityTable,
}

/// One recorded simulation step: the fixation and the belief it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSnapshot {
    /// 1-based fixation number.
    pub step: usize,
    /// Patch fixated during this step.
    pub fixation: usize,
    /// Noisy per-patch response read from this fixation.
    pub response: Vec<f64>,
    /// Location prior after inhibition of return.
    pub inhibited_prior: Vec<f64>,
    /// Posterior after folding in this step's response.
    pub posterior: Vec<f64>,
    /// Searcher score map; absent on the final step (nothing left to pick).
    pub score_map: Option<Vec<f64>>,
}

/// A completed (or, inside errors, partial) simulated viewing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanpathTrace {
    pub image: ImageMeta,
    pub config: TrialConfig,
    pub seed: u64,
    /// Fixated patch indices, in viewing order.
    pub fixations: Vec<usize>,
    /// Per-step maps; present only when `record_steps` was set.
    pub steps: Option<Vec<StepSnapshot>>,
}

impl ScanpathTrace {
    /// Pixel center of the `index`-th fixation.
    pub fn fixation_center(&self, index: usize) -> (f64, f64) {
        patch_center(
            self.fixations[index],
            self.image.cols,
            self.config.patch_size,
        )
    }
}

fn patch_center(patch: usize, cols: usize, patch_size: u32) -> (f64, f64) {
    let s = patch_size as f64;
    let col = (patch % cols) as f64;
    let row = (patch / cols) as f64;
    (col * s + s / 2.0, row * s + s / 2.0)
}

/// Builds the shared per-stimulus state for one or many trials.
///
/// `distortion` overrides the blockiness source for distorted runs; when
/// omitted the built-in boundary estimator is used. Supplying one for a
/// pristine run is a configuration error.
pub fn prepare_context(
    image: &GrayImage,
    config: &TrialConfig,
    source: Option<&str>,
    distortion: Option<&dyn DistortionProvider>,
) -> Result<TrialContext> {
    config.validate()?;
    if distortion.is_some() && !config.distorted {
        return Err(Error::InvalidConfig(
            "a blockiness source was supplied for a pristine run".into(),
        ));
    }
    let grid = build_patch_grid(image, config.patch_size)?;
    let builtin = BoundaryBlockiness;
    let provider: Option<&dyn DistortionProvider> = if config.distorted {
        Some(distortion.unwrap_or(&builtin))
    } else {
        None
    };
    let features = extract_features(image, &grid, provider)?;
    let expectation = compute_expectation(&features, config.exponents, config.distorted)?;
    let table = build_visibility_table(&config.profile, &grid)?;
    let meta = ImageMeta {
        source: source.map(str::to_owned),
        width: image.width(),
        height: image.height(),
        cols: grid.cols(),
        rows: grid.rows(),
    };
    Ok(TrialContext {
        config: config.clone(),
        meta,
        grid,
        features,
        expectation,
        table,
    })
}

/// Patch whose center lies nearest the image midpoint (ties to lowest index).
pub fn initial_fixation(grid: &PatchGrid, width: u32, height: u32) -> usize {
    let midpoint = (width as f64 / 2.0, height as f64 / 2.0);
    let mut best = 0;
    let mut best_sq = f64::INFINITY;
    for (i, &(cx, cy)) in grid.centers().iter().enumerate() {
        let dx = cx - midpoint.0;
        let dy = cy - midpoint.1;
        let sq = dx * dx + dy * dy;
        if sq < best_sq {
            best_sq = sq;
            best = i;
        }
    }
    best
}

/// Runs a single trial in a prepared context.
pub fn run_trial_in_context(ctx: &TrialContext, seed: u64) -> Result<ScanpathTrace> {
    let config = &ctx.config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = PosteriorState::new(ctx.grid.patch_count(), config.inhibition_depth);
    let mut fixations = Vec::with_capacity(config.num_fixations);
    let mut steps: Option<Vec<StepSnapshot>> = config.record_steps.then(Vec::new);
    let mut current = initial_fixation(&ctx.grid, ctx.meta.width, ctx.meta.height);

    for step in 1..=config.num_fixations {
        fixations.push(current);
        state.record_fixation(current);
        let row = ctx.table.from_fixation(current);
        let sample = sample_response(&ctx.expectation, row, current, &mut rng, config.zero_noise);
        if let Err(source) = state.update(&sample, row, &ctx.grid, &config.profile) {
            debug_assert!(matches!(source, Error::DegeneratePosterior));
            let trace = ScanpathTrace {
                image: ctx.meta.clone(),
                config: config.clone(),
                seed,
                fixations,
                steps,
            };
            return Err(Error::DegenerateTrial {
                step,
                trace: Box::new(trace),
            });
        }
        let selection = (step < config.num_fixations).then(|| {
            config
                .searcher
                .select(state.posterior(), &ctx.features.contrast, &ctx.table)
        });
        if let Some(list) = steps.as_mut() {
            list.push(StepSnapshot {
                step,
                fixation: current,
                response: sample.values.clone(),
                inhibited_prior: state.inhibited_prior(&ctx.grid, &config.profile),
                posterior: state.posterior().to_vec(),
                score_map: selection.as_ref().map(|s| s.score_map.clone()),
            });
        }
        if let Some(selection) = selection {
            current = selection.chosen;
        }
    }

    Ok(ScanpathTrace {
        image: ctx.meta.clone(),
        config: config.clone(),
        seed,
        fixations,
        steps,
    })
}

/// Prepares a context and runs one trial with the given seed.
pub fn run_trial(
    image: &GrayImage,
    config: &TrialConfig,
    source: Option<&str>,
    distortion: Option<&dyn DistortionProvider>,
    seed: u64,
) -> Result<ScanpathTrace> {
    let ctx = prepare_context(image, config, source, distortion)?;
    run_trial_in_context(&ctx, seed)
}

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Per-trial seed for trial `trial_index` of a batch with `base_seed`.
///
/// Walks the base seed along a golden-ratio stride and scrambles it with the
/// SplitMix64 finalizer. The finalizer is a bijection, so distinct trial
/// indices under one base seed can never collide.
pub fn derive_seed(base_seed: u64, trial_index: usize) -> u64 {
    let mut z = base_seed.wrapping_add((trial_index as u64 + 1).wrapping_mul(SEED_STRIDE));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `trials` independent trials in parallel, in deterministic order.
///
/// Trial `j` uses `derive_seed(base_seed, j)`, so `trials = 1` reproduces
/// exactly `run_trial_in_context(ctx, derive_seed(base_seed, 0))`.
pub fn run_batch(ctx: &TrialContext, base_seed: u64, trials: usize) -> Result<Vec<ScanpathTrace>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("a batch needs at least one trial".into()));
    }
    (0..trials)
        .into_par_iter()
        .map(|j| run_trial_in_context(ctx, derive_seed(base_seed, j)))
        .collect()
}

/// Saccade statistics of one scanpath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaccadeSummary {
    /// Center-to-center distance in pixels of each saccade.
    pub amplitudes: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Fixations landing on a patch already visited within the window.
    pub revisits_in_window: usize,
}

/// Computes saccade amplitudes and revisit counts for a finished trace.
///
/// A fixation counts as a revisit when its patch appeared among the previous
/// `revisit_window` fixations. Needs at least two fixations.
pub fn summarize_saccades(trace: &ScanpathTrace, revisit_window: usize) -> Result<SaccadeSummary> {
    let n = trace.fixations.len();
    if n < 2 {
        return Err(Error::TooFewFixations(n));
    }
    let mut amplitudes = Vec::with_capacity(n - 1);
    for i in 1..n {
        let (ax, ay) = trace.fixation_center(i - 1);
        let (bx, by) = trace.fixation_center(i);
        let (dx, dy) = (bx - ax, by - ay);
        amplitudes.push((dx * dx + dy * dy).sqrt());
    }
    let mean = amplitudes.iter().sum::<f64>() / amplitudes.len() as f64;
    let mut sorted = amplitudes.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let max = *sorted.last().unwrap();
    let mut revisits_in_window = 0;
    for i in 1..n {
        let start = i.saturating_sub(revisit_window);
        if trace.fixations[start..i].contains(&trace.fixations[i]) {
            revisits_in_window += 1;
        }
    }
    Ok(SaccadeSummary {
        amplitudes,
        mean,
        median,
        max,
        revisits_in_window,
    })
}
