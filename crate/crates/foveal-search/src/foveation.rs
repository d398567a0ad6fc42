//! Eccentricity-dependent detectability.
//!
//! A fixating observer resolves a patch with sensitivity that peaks at the
//! fovea and falls off as a Gaussian of the distance between patch and
//! fixation, clamped below so that far patches keep a small nonzero value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::PatchGrid;

/// Cap on the precomputed table; past this the all-pairs matrix is refused.
const MAX_TABLE_BYTES: usize = 1 << 30;

/// Parameters of the detectability falloff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityProfile {
    /// Peak detectability at zero eccentricity.
    pub peak: f64,
    /// Gaussian falloff scale in pixels.
    pub sigma: f64,
    /// Lower clamp keeping far-away patches detectable at a trace level.
    pub floor: f64,
}

impl VisibilityProfile {
    pub fn new(peak: f64, sigma: f64, floor: f64) -> Result<Self> {
        let valid = peak.is_finite()
            && sigma.is_finite()
            && floor.is_finite()
            && peak > floor
            && floor > 0.0
            && sigma > 0.0;
        if !valid {
            return Err(Error::InvalidProfile { peak, sigma, floor });
        }
        Ok(Self { peak, sigma, floor })
    }

    /// Detectability at the given eccentricity in pixels.
    pub fn detectability(&self, eccentricity_px: f64) -> f64 {
        debug_assert!(eccentricity_px >= 0.0);
        (self.peak * self.falloff(eccentricity_px)).max(self.floor)
    }

    /// The unit-peak spatial falloff, without the detectability floor.
    ///
    /// Equals 1 at zero eccentricity and decays as a Gaussian with the
    /// profile's sigma; inhibition of return reuses this shape.
    pub fn falloff(&self, eccentricity_px: f64) -> f64 {
        (-eccentricity_px * eccentricity_px / (2.0 * self.sigma * self.sigma)).exp()
    }
}

impl Default for VisibilityProfile {
    fn default() -> Self {
        Self {
            peak: 5.0,
            sigma: 50.0,
            floor: 0.01,
        }
    }
}

/// Euclidean distance between two pixel coordinates.
pub fn eccentricity(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Precomputed detectability between every (patch, fixation) pair.
///
/// Entry (i, k) is the detectability of patch `i` while fixating the center
/// of patch `k`. The matrix is symmetric because eccentricity is.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityTable {
    patches: usize,
    values: Vec<f64>,
}

impl VisibilityTable {
    pub fn patch_count(&self) -> usize {
        self.patches
    }

    /// Detectability of patch `i` from fixation `k`.
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.patches + k]
    }

    /// All-patch detectability row for a fixation at patch `k`.
    pub fn from_fixation(&self, k: usize) -> &[f64] {
        &self.values[k * self.patches..(k + 1) * self.patches]
    }
}

/// Computes the full all-pairs detectability table for a patch lattice.
pub fn build_visibility_table(profile: &VisibilityProfile, grid: &PatchGrid) -> Result<VisibilityTable> {
    let patches = grid.patch_count();
    let required = patches
        .checked_mul(patches)
        .and_then(|n| n.checked_mul(std::mem::size_of::<f64>()))
        .unwrap_or(usize::MAX);
    if required > MAX_TABLE_BYTES {
        return Err(Error::VisibilityTableTooLarge {
            patches,
            required,
            limit: MAX_TABLE_BYTES,
        });
    }
    let centers = grid.centers();
    let mut values = vec![0.0; patches * patches];
    for i in 0..patches {
        // Fill the upper triangle and mirror it; the diagonal is the peak.
        values[i * patches + i] = profile.detectability(0.0);
        for k in (i + 1)..patches {
            let d = profile.detectability(eccentricity(centers[i], centers[k]));
            values[i * patches + k] = d;
            values[k * patches + i] = d;
        }
    }
    Ok(VisibilityTable { patches, values })
}
