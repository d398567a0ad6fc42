//! Fixation selection rules.
//!
//! All three searchers consume the current posterior and return the patch to
//! fixate next plus the per-patch score map they maximized. Ties always
//! break toward the lowest patch index, which keeps runs reproducible.
//!
//! * `Map` fixates the most probable patch.
//! * `Elm` fixates where the expected squared detectability of the target,
//!   integrated over the posterior, is highest — information gathering
//!   rather than belief confirmation.
//! * `NElm` is `Elm` after rebalancing the posterior by patch contrast, so
//!   low-contrast patches (whose evidence accrues slowly) get extra scrutiny.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::foveation::VisibilityTable;
use crate::inference::contrast_normalized;

/// Which fixation-selection rule drives a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearcherKind {
    Map,
    Elm,
    NElm,
}

impl SearcherKind {
    /// Runs this searcher's selection rule.
    ///
    /// `contrast` is consulted only by `NElm`; the others ignore it.
    pub fn select(
        self,
        posterior: &[f64],
        contrast: &[f64],
        table: &VisibilityTable,
    ) -> SelectionOutcome {
        match self {
            SearcherKind::Map => select_map(posterior),
            SearcherKind::Elm => select_elm(posterior, table),
            SearcherKind::NElm => select_nelm(posterior, contrast, table),
        }
    }
}

impl fmt::Display for SearcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SearcherKind::Map => "map",
            SearcherKind::Elm => "elm",
            SearcherKind::NElm => "nelm",
        };
        f.write_str(name)
    }
}

impl FromStr for SearcherKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(SearcherKind::Map),
            "elm" => Ok(SearcherKind::Elm),
            "nelm" => Ok(SearcherKind::NElm),
            other => Err(format!("unknown searcher {other:?} (expected map, elm, or nelm)")),
        }
    }
}

/// A searcher's decision: the winning patch and the scores it compared.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Patch index of the next fixation.
    pub chosen: usize,
    /// Score assigned to every candidate patch.
    pub score_map: Vec<f64>,
}

fn argmax_lowest(scores: &[f64]) -> usize {
    assert!(!scores.is_empty());
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fixates the posterior mode.
pub fn select_map(posterior: &[f64]) -> SelectionOutcome {
    SelectionOutcome {
        chosen: argmax_lowest(posterior),
        score_map: posterior.to_vec(),
    }
}

/// Fixates the patch maximizing posterior-weighted squared detectability.
///
/// `score(k) = sum_i posterior[i] * d'(i, k)^2`, the expected evidence rate
/// about the target if the next fixation lands on `k`.
pub fn select_elm(posterior: &[f64], table: &VisibilityTable) -> SelectionOutcome {
    let m = posterior.len();
    assert_eq!(table.patch_count(), m);
    let mut scores = Vec::with_capacity(m);
    for k in 0..m {
        let row = table.from_fixation(k);
        let mut score = 0.0;
        for i in 0..m {
            score += posterior[i] * row[i] * row[i];
        }
        scores.push(score);
    }
    SelectionOutcome {
        chosen: argmax_lowest(&scores),
        score_map: scores,
    }
}

/// `Elm` on the contrast-rebalanced posterior.
pub fn select_nelm(
    posterior: &[f64],
    contrast: &[f64],
    table: &VisibilityTable,
) -> SelectionOutcome {
    select_elm(&contrast_normalized(posterior, contrast), table)
}
