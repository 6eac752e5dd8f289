use serde::{Deserialize, Serialize};

use crate::linalg::{NormOptions, SchurWeights};

/// Numerical knobs shared by the criteria checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub norm: NormOptions,
    /// Relative change between the last two windows below which a norm
    /// curve counts as flat.
    pub flatness: f64,
    /// Window sizes `N` (sections `[1, N]`) for banded operators.
    pub ladder: Vec<usize>,
    /// Largest window used when a section has to be stored densely.
    pub dense_cap: usize,
    /// Values of `n` for approximate-unit families.
    pub n_values: Vec<u64>,
    /// Absolute/relative tolerance for exact algebraic identities.
    pub identity_tol: f64,
    /// Largest probe window for Schur-test certificates.
    pub schur_cap: usize,
    pub schur_weights: SchurWeights,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            norm: NormOptions::default(),
            flatness: 0.01,
            ladder: vec![64, 128, 256, 512, 1024, 2048, 4096],
            dense_cap: 512,
            n_values: vec![1, 2, 4, 8, 16, 32, 64, 128, 256],
            identity_tol: 1e-10,
            schur_cap: 1024,
            schur_weights: SchurWeights::Unit,
        }
    }
}

impl Settings {
    /// Ladder sizes usable for a section: all of them when banded, capped at
    /// `dense_cap` otherwise. Never empty when the ladder is non-empty.
    pub fn ladder_for(&self, banded: bool) -> Vec<usize> {
        if banded {
            return self.ladder.clone();
        }
        let capped: Vec<usize> = self
            .ladder
            .iter()
            .copied()
            .filter(|&n| n <= self.dense_cap)
            .collect();
        if capped.is_empty() {
            self.ladder.iter().copied().min().into_iter().collect()
        } else {
            capped
        }
    }

    /// Caps every ladder entry at `max`, dropping duplicates.
    pub fn with_max_window(mut self, max: usize) -> Self {
        let mut ladder: Vec<usize> = self.ladder.iter().map(|&n| n.min(max)).collect();
        ladder.dedup();
        self.ladder = ladder;
        self.dense_cap = self.dense_cap.min(max);
        self
    }
}
