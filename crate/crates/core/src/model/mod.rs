// SPDX-License-Identifier: Apache-2.0

//! Power-model identification.
//!
//! Windows of activity counts are paired with measured window power, split
//! into training and test sets, and a linear model with at most `budget`
//! terms is fitted by forward selection with an OLS refit at every step.

mod metrics;
pub mod ols;
mod select;

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{ActivityMatrix, FeatureDesc};
use crate::power::WindowedPower;

pub use metrics::{evaluate, Metrics, Normalizer};
pub use select::{identify_model, Identification, IdentifyOptions, SelectionMode, SelectionStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("activity has {activity} windows but power has {power}")]
    WindowCountMismatch { activity: usize, power: usize },
    #[error("activity window is {activity_s} s but power window is {power_s} s")]
    ResolutionMismatch { activity_s: f64, power_s: f64 },
    #[error("power target of window {0} is not finite")]
    NonFiniteTarget(usize),
    #[error("dataset shape is inconsistent: {0}")]
    Shape(&'static str),
    #[error("dataset has {rows} rows, at least {needed} are required")]
    TooFewRows { rows: usize, needed: usize },
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("budget must be at least 1")]
    BadBudget,
    #[error("model feature `{0}` is missing from the dataset")]
    FeatureMismatch(String),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("NRMSE normalizer is not positive ({0})")]
    DegenerateNormalizer(f64),
    #[error("exhaustive search over {0} subsets is too large")]
    ExhaustiveTooLarge(u128),
}

/// Regression inputs: one column per feature, one row per window.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<FeatureDesc>,
    /// Column-major feature values.
    pub columns: Vec<Vec<f64>>,
    /// Watts per window.
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Vec<FeatureDesc>, columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, ModelError> {
        if features.len() != columns.len() {
            return Err(ModelError::Shape("feature count differs from column count"));
        }
        if columns.iter().any(|c| c.len() != y.len()) {
            return Err(ModelError::Shape("column length differs from target length"));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteTarget(i));
        }
        Ok(Dataset { features, columns, y })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
        }
    }

    pub fn feature_index(&self, f: &FeatureDesc) -> Option<usize> {
        self.features.iter().position(|g| g == f)
    }
}

/// Pairs activity counts with window power.
pub fn assemble_dataset(acts: &ActivityMatrix, power: &WindowedPower) -> Result<Dataset, ModelError> {
    if acts.n_windows != power.values.len() {
        return Err(ModelError::WindowCountMismatch { activity: acts.n_windows, power: power.values.len() });
    }
    let activity_s = acts.window_len.as_secs();
    if libm::fabs(activity_s - power.window_len) > 1e-9 * activity_s.max(power.window_len) {
        return Err(ModelError::ResolutionMismatch { activity_s, power_s: power.window_len });
    }
    let columns = (0..acts.n_features()).map(|f| acts.column(f).map(f64::from).collect()).collect();
    Dataset::new(acts.features.clone(), columns, power.values.clone())
}

/// Row indices of a train/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub const MIN_SPLIT_ROWS: usize = 10;

/// Seeded shuffle; the first `ceil(ratio * n)` permuted rows train the model.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<Split, ModelError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ModelError::BadRatio(ratio));
    }
    if n < MIN_SPLIT_ROWS {
        return Err(ModelError::TooFewRows { rows: n, needed: MIN_SPLIT_ROWS });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (libm::ceil(ratio * n as f64 - 1e-9) as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok(Split { train: idx, test })
}

pub fn split_dataset(d: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset, Split), ModelError> {
    let split = split_indices(d.n_rows(), ratio, seed)?;
    Ok((d.subset(&split.train), d.subset(&split.test), split))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub feature: FeatureDesc,
    /// Watts per count.
    pub weight: f64,
}

/// `power = intercept + Σ weight · count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub intercept: f64,
    pub terms: Vec<Term>,
    pub budget: usize,
}

impl PowerModel {
    /// Column index of every term in `features`.
    pub fn bind(&self, features: &[FeatureDesc]) -> Result<Vec<usize>, ModelError> {
        self.terms
            .iter()
            .map(|t| {
                features
                    .iter()
                    .position(|f| *f == t.feature)
                    .ok_or_else(|| ModelError::FeatureMismatch(alloc::format!("{}", t.feature)))
            })
            .collect()
    }

    pub fn predict(&self, counts: impl IntoIterator<Item = f64>) -> f64 {
        self.terms.iter().zip(counts).fold(self.intercept, |acc, (t, c)| acc + t.weight * c)
    }

    /// Predictions for every row of `d`.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>, ModelError> {
        let cols = self.bind(&d.features)?;
        Ok((0..d.n_rows()).map(|r| self.predict(cols.iter().map(|&c| d.columns[c][r]))).collect())
    }

    /// Predictions for every window of `acts`.
    pub fn predict_activity(&self, acts: &ActivityMatrix) -> Result<Vec<f64>, ModelError> {
        let cols = self.bind(&acts.features)?;
        Ok((0..acts.n_windows).map(|w| self.predict(cols.iter().map(|&c| acts.get(w, c) as f64))).collect())
    }
}
