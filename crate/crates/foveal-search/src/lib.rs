//! Foveated Bayesian visual-search simulator.
//!
//! Predicts free-viewing eye-fixation scanpaths on grayscale images. The
//! stimulus is tiled into square patches; an ideal observer reads a noisy
//! response from every patch on each fixation, with noise growing away from
//! the fovea, and maintains a Bayesian posterior over which patch holds the
//! most salient content. A searcher policy (`map`, `elm`, or `nelm`) picks
//! each next fixation, and inhibition of return keeps the gaze from cycling
//! over recently visited patches. Distorted stimuli add a blockiness channel
//! that draws fixations toward compression artifacts.
//!
//! The crate is organized bottom-up:
//!
//! * [`raster`] — grayscale images, patch grids, PGM output, 1/f noise.
//! * [`response`] — feature channels, expectation maps, noisy sampling.
//! * [`foveation`] — eccentricity-dependent detectability and its table.
//! * [`inference`] — the running posterior with inhibition of return.
//! * [`searchers`] — fixation selection rules.
//! * [`engine`] — trial and batch orchestration.
//! * [`artifacts`] — scanpath JSON, saliency maps, overlays.
//! * [`cli`] — the `foveal-search` binary's interface.

pub mod artifacts;
pub mod cli;
pub mod engine;
pub mod error;
pub mod foveation;
pub mod inference;
pub mod raster;
pub mod response;
pub mod searchers;

pub use engine::{
    derive_seed, prepare_context, run_batch, run_trial, run_trial_in_context, summarize_saccades,
    ImageMeta, SaccadeSummary, ScanpathTrace, StepSnapshot, TrialConfig, TrialContext,
};
pub use error::{Error, Result};
pub use foveation::{build_visibility_table, VisibilityProfile, VisibilityTable};
pub use raster::{build_patch_grid, load_gray_image, synthesize_one_over_f, GrayImage, PatchGrid};
pub use response::{ResponseExpectation, ResponseExponents};
pub use searchers::SearcherKind;
