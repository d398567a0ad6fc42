//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::engine::ScanpathTrace;

/// Errors in stimulus handling, simulation, and artifact serialization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("pixel buffer holds {actual} values, expected {expected}")]
    PixelCountMismatch { expected: usize, actual: usize },

    #[error("pixel value {value} at index {index} lies outside [0, 1]")]
    PixelOutOfRange { index: usize, value: f64 },

    #[error("patch size {patch_size} does not fit a {width}x{height} image")]
    PatchSizeTooLarge {
        patch_size: u32,
        width: u32,
        height: u32,
    },

    #[error("patch size must be at least 2, got {0}")]
    PatchSizeTooSmall(u32),

    #[error("grid of {grid_cols}x{grid_rows} patches (size {patch_size}) does not match a {width}x{height} image")]
    GridImageMismatch {
        grid_cols: usize,
        grid_rows: usize,
        patch_size: u32,
        width: u32,
        height: u32,
    },

    #[error("expected {expected} per-patch values, got {actual}")]
    PatchCountMismatch { expected: usize, actual: usize },

    #[error("blockiness map {path}: entry {index} ({value}) must be finite and non-negative")]
    BlockinessValue {
        path: PathBuf,
        index: usize,
        value: f64,
    },

    #[error("blockiness map {path}: cannot parse entry {index}: {text:?}")]
    BlockinessParse {
        path: PathBuf,
        index: usize,
        text: String,
    },

    #[error("distortion-modulated response requested but no blockiness channel is present")]
    MissingBlockiness,

    #[error("pristine response requested but a blockiness channel is present")]
    UnexpectedBlockiness,

    #[error("response map is identically zero; cannot scale it to mean one")]
    DegenerateResponse,

    #[error("response at patch {index} is not finite; check for negative exponents on zero-valued features")]
    NonFiniteResponse { index: usize },

    #[error("visibility profile invalid: peak {peak}, sigma {sigma}, floor {floor}")]
    InvalidProfile { peak: f64, sigma: f64, floor: f64 },

    #[error("visibility table for {patches} patches needs {required} bytes, over the {limit} byte cap")]
    VisibilityTableTooLarge {
        patches: usize,
        required: usize,
        limit: usize,
    },

    #[error("posterior mass vanished during update")]
    DegeneratePosterior,

    #[error("posterior mass vanished at fixation {step}; partial trace retained")]
    DegenerateTrial { step: usize, trace: Box<ScanpathTrace> },

    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),

    #[error("scanpath has {0} fixation(s); saccade statistics need at least 2")]
    TooFewFixations(usize),

    #[error("scanpath document {path}: {source}")]
    ScanpathJson {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("scanpath document {path}: unsupported schema version {found} (supported: {supported})")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        supported: u32,
    },

    #[error("{0}")]
    Saliency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
