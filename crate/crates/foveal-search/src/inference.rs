//! Bayesian belief over target location, updated from foveated responses.
//!
//! The observer entertains one hypothesis per patch and accumulates, for
//! each hypothesis, the detectability-weighted evidence `d'^2 * W` from every
//! response it has collected. The posterior is the softmax of that running
//! sum against a spatial prior that discounts recently fixated locations
//! (inhibition of return). All normalization happens in the log domain so
//! evidence magnitudes in the thousands stay finite.

use crate::error::{Error, Result};
use crate::foveation::{eccentricity, VisibilityProfile};
use crate::raster::PatchGrid;
use crate::response::ResponseSample;

/// Contrast divisors below this are clamped before posterior normalization.
pub const CONTRAST_EPSILON: f64 = 1e-6;

/// Running posterior over target-location hypotheses.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    posterior: Vec<f64>,
    /// Per-hypothesis evidence sum `sum_t d'^2_i(k_t) * W_i(t)`.
    accumulator: Vec<f64>,
    /// Fixated patch indices, oldest first.
    history: Vec<usize>,
    /// Number of past fixations that suppress the prior; 0 disables.
    inhibition_depth: usize,
}

impl PosteriorState {
    /// Uniform belief over `patches` hypotheses.
    pub fn new(patches: usize, inhibition_depth: usize) -> Self {
        assert!(patches > 0, "need at least one patch");
        Self {
            posterior: vec![1.0 / patches as f64; patches],
            accumulator: vec![0.0; patches],
            history: Vec::new(),
            inhibition_depth,
        }
    }

    pub fn patch_count(&self) -> usize {
        self.posterior.len()
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn history(&self) -> &[usize] {
        &self.history
    }

    /// Appends a fixation to the history the prior is built from.
    pub fn record_fixation(&mut self, patch: usize) {
        assert!(patch < self.patch_count());
        self.history.push(patch);
    }

    /// Location prior with recently fixated patches suppressed.
    ///
    /// Starts uniform and, for each of the last `inhibition_depth` fixations,
    /// multiplies in `1 - w * falloff(distance)` where the recency weight `w`
    /// ramps linearly from 1 at the most recent fixation down toward 0 at the
    /// edge of the window. The most recent patch itself gets prior exactly 0.
    /// The result is normalized to sum 1 when any mass survives; with a
    /// single patch under active inhibition it can be identically zero.
    pub fn inhibited_prior(&self, grid: &PatchGrid, profile: &VisibilityProfile) -> Vec<f64> {
        let m = self.patch_count();
        let mut prior = vec![1.0 / m as f64; m];
        if self.inhibition_depth == 0 || self.history.is_empty() {
            return prior;
        }
        let depth = self.inhibition_depth;
        let window = &self.history[self.history.len().saturating_sub(depth)..];
        for (age, &fixated) in window.iter().rev().enumerate() {
            let weight = 1.0 - age as f64 / depth as f64;
            let center = grid.center_of(fixated);
            for (i, p) in prior.iter_mut().enumerate() {
                let falloff = profile.falloff(eccentricity(grid.center_of(i), center));
                *p *= 1.0 - weight * falloff;
            }
        }
        let total: f64 = prior.iter().sum();
        if total > 0.0 {
            for p in &mut prior {
                *p /= total;
            }
        }
        prior
    }

    /// Folds one response sample into the belief.
    ///
    /// `visibility_row` must hold the detectability of every patch from the
    /// fixation the sample was taken at. Patches whose prior is zero get
    /// posterior zero; the rest are the softmax of `ln prior + evidence`,
    /// stabilized by subtracting the running maximum. Fails if no hypothesis
    /// retains positive mass.
    pub fn update(
        &mut self,
        sample: &ResponseSample,
        visibility_row: &[f64],
        grid: &PatchGrid,
        profile: &VisibilityProfile,
    ) -> Result<()> {
        let m = self.patch_count();
        assert_eq!(sample.values.len(), m);
        assert_eq!(visibility_row.len(), m);
        for i in 0..m {
            let d = visibility_row[i];
            self.accumulator[i] += d * d * sample.values[i];
        }
        let prior = self.inhibited_prior(grid, profile);
        let mut log_mass = vec![f64::NEG_INFINITY; m];
        let mut max_log = f64::NEG_INFINITY;
        for i in 0..m {
            if prior[i] > 0.0 {
                let lm = prior[i].ln() + self.accumulator[i];
                log_mass[i] = lm;
                if lm > max_log {
                    max_log = lm;
                }
            }
        }
        if !max_log.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let mut total = 0.0;
        for i in 0..m {
            let p = if log_mass[i].is_finite() {
                (log_mass[i] - max_log).exp()
            } else {
                0.0
            };
            self.posterior[i] = p;
            total += p;
        }
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::DegeneratePosterior);
        }
        for p in &mut self.posterior {
            *p /= total;
        }
        Ok(())
    }
}

/// Rebalances a posterior by each patch's RMS contrast.
///
/// Divides every probability by `max(contrast, CONTRAST_EPSILON)` and
/// renormalizes, shifting belief toward low-contrast patches whose evidence
/// is intrinsically weak.
pub fn contrast_normalized(posterior: &[f64], contrast: &[f64]) -> Vec<f64> {
    assert_eq!(posterior.len(), contrast.len());
    let mut out: Vec<f64> = posterior
        .iter()
        .zip(contrast)
        .map(|(&p, &c)| p / c.max(CONTRAST_EPSILON))
        .collect();
    let total: f64 = out.iter().sum();
    debug_assert!(total > 0.0);
    for q in &mut out {
        *q /= total;
    }
    out
}
