//! Splitting the frame budget between the two views.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::RelevanceVector;
use crate::types::View;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub k_ego: usize,
    pub k_exo: usize,
    pub k_total: usize,
}

impl BudgetSplit {
    pub fn get(&self, view: View) -> usize {
        match view {
            View::Ego => self.k_ego,
            View::Exo => self.k_exo,
        }
    }
}

/// Relevance-proportional split of `k` frames.
///
/// The ego share is `round(k * Σego / (Σego + Σexo))`, rounding halves away
/// from zero; exo takes the rest. If either share exceeds its view's frame
/// count the excess moves to the other view. Scores must already be clamped
/// to a positive floor.
pub fn soft_allocate(
    ego: &RelevanceVector,
    exo: &RelevanceVector,
    k: usize,
) -> Result<BudgetSplit> {
    let (n_ego, n_exo) = (ego.len(), exo.len());
    if k == 0 {
        return Err(Error::InvalidBudget { k, n: n_ego + n_exo });
    }
    if k > n_ego + n_exo {
        return Err(Error::BudgetExceedsFrames {
            budget: k,
            available: n_ego + n_exo,
        });
    }
    if ego.scores.iter().chain(&exo.scores).any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::UnclampedScores);
    }
    let (sum_ego, sum_exo) = (ego.sum(), exo.sum());
    let share = k as f64 * sum_ego / (sum_ego + sum_exo);
    let mut k_ego = (share.round() as usize).min(k);
    let mut k_exo = k - k_ego;
    if k_ego > n_ego {
        k_ego = n_ego;
        k_exo = k - n_ego;
    } else if k_exo > n_exo {
        k_exo = n_exo;
        k_ego = k - n_exo;
    }
    Ok(BudgetSplit {
        k_ego,
        k_exo,
        k_total: k,
    })
}

/// Per-timestep winner between synchronized views; ties go to ego.
pub fn hard_select(ego: &RelevanceVector, exo: &RelevanceVector) -> Result<Vec<View>> {
    if ego.len() != exo.len() {
        return Err(Error::UnsynchronizedStreams {
            n_ego: ego.len(),
            n_exo: exo.len(),
        });
    }
    Ok(ego
        .scores
        .iter()
        .zip(&exo.scores)
        .map(|(e, x)| if e >= x { View::Ego } else { View::Exo })
        .collect())
}
