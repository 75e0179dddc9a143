// SPDX-License-Identifier: Apache-2.0

//! Budgeted subset selection.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ols::{self, OlsFit, Rank};
use super::{Dataset, ModelError, PowerModel, Term};
use crate::activity::FeatureDesc;

/// Relative train-RMSE gain below which greedy selection stops.
pub const MIN_REL_IMPROVEMENT: f64 = 1e-3;

/// Upper bound on the number of subsets an exhaustive run may visit.
pub const EXHAUSTIVE_LIMIT: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    #[default]
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyOptions {
    pub budget: usize,
    pub mode: SelectionMode,
    /// Drop negative-weight terms one at a time until none remain.
    pub non_negative: bool,
}

impl IdentifyOptions {
    pub fn greedy(budget: usize) -> Self {
        IdentifyOptions { budget, mode: SelectionMode::Greedy, non_negative: false }
    }

    pub fn exhaustive(budget: usize) -> Self {
        IdentifyOptions { budget, mode: SelectionMode::Exhaustive, non_negative: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub added: FeatureDesc,
    /// Set when the step swapped a term for the other counter type of the
    /// same signal.
    pub replaced: Option<FeatureDesc>,
    pub train_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub model: PowerModel,
    pub train_rmse: f64,
    /// Greedy additions in order; empty for exhaustive runs.
    pub steps: Vec<SelectionStep>,
    /// Candidates discarded because they were collinear with the selection.
    pub dropped: Vec<FeatureDesc>,
    /// Terms removed by the non-negativity pass.
    pub removed_negative: Vec<FeatureDesc>,
}

fn fit_subset(d: &Dataset, subset: &[usize]) -> Result<OlsFit, Rank> {
    let cols: Vec<&[f64]> = subset.iter().map(|&i| d.columns[i].as_slice()).collect();
    ols::fit(&cols, &d.y)
}

fn sorted_with(selected: &[usize], extra: usize) -> Vec<usize> {
    let mut s = selected.to_vec();
    let at = s.partition_point(|&i| i < extra);
    s.insert(at, extra);
    s
}

/// Below this RMSE (relative to the largest |y|) the fit counts as exact.
fn exact_floor(y: &[f64]) -> f64 {
    1e-12 * y.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)))
}

struct Greedy {
    selected: Vec<usize>,
    fit: OlsFit,
    steps: Vec<SelectionStep>,
    dropped: Vec<usize>,
}

fn greedy(d: &Dataset, budget: usize) -> Greedy {
    let floor = exact_floor(&d.y);
    let mut out = Greedy { selected: Vec::new(), fit: ols::intercept_only(&d.y), steps: Vec::new(), dropped: Vec::new() };
    while out.selected.len() < budget && out.fit.rmse > floor {
        let mut best: Option<(usize, Vec<usize>, OlsFit)> = None;
        for f in 0..d.n_features() {
            let taken = out.selected.iter().any(|&s| d.features[s].signal == d.features[f].signal);
            if taken || out.dropped.contains(&f) {
                continue;
            }
            let subset = sorted_with(&out.selected, f);
            match fit_subset(d, &subset) {
                Ok(fit) => {
                    if best.as_ref().is_none_or(|(_, _, b)| fit.rmse < b.rmse) {
                        best = Some((f, subset, fit));
                    }
                }
                Err(Rank::Deficient(_)) => out.dropped.push(f),
                Err(Rank::Underdetermined) => {}
            }
        }
        let Some((f, subset, fit)) = best else { break };
        let gain = (out.fit.rmse - fit.rmse) / out.fit.rmse;
        if gain < MIN_REL_IMPROVEMENT {
            break;
        }
        out.steps.push(SelectionStep { added: d.features[f].clone(), replaced: None, train_rmse: fit.rmse });
        out.selected = subset;
        out.fit = fit;
        replace_terms(d, &mut out, floor);
    }
    out
}

/// Relative train-RMSE gain a replacement must achieve.
const MIN_SWAP_GAIN: f64 = 1e-9;

/// Sequential replacement: while some selected term can be exchanged for an
/// eligible candidate (including the other counter type of its own signal)
/// with a lower training error, apply the best such exchange. Forward
/// selection alone keeps every early pick, which fails on correlated
/// features and fixes each signal's counter type at first sight.
fn replace_terms(d: &Dataset, g: &mut Greedy, floor: f64) {
    let max_rounds = 10 * d.n_features().max(1);
    for _ in 0..max_rounds {
        if g.fit.rmse <= floor {
            return;
        }
        let bar = g.fit.rmse * (1.0 - MIN_SWAP_GAIN);
        let mut best: Option<(usize, usize, Vec<usize>, OlsFit)> = None;
        for &out in &g.selected {
            let rest: Vec<usize> = g.selected.iter().copied().filter(|&x| x != out).collect();
            for cand in 0..d.n_features() {
                if cand == out
                    || g.dropped.contains(&cand)
                    || rest.iter().any(|&r| d.features[r].signal == d.features[cand].signal)
                {
                    continue;
                }
                let subset = sorted_with(&rest, cand);
                if let Ok(fit) = fit_subset(d, &subset) {
                    if fit.rmse < best.as_ref().map_or(bar, |b| b.3.rmse) {
                        best = Some((out, cand, subset, fit));
                    }
                }
            }
        }
        let Some((out, cand, subset, fit)) = best else { return };
        g.steps.push(SelectionStep {
            added: d.features[cand].clone(),
            replaced: Some(d.features[out].clone()),
            train_rmse: fit.rmse,
        });
        g.selected = subset;
        g.fit = fit;
    }
}

fn subset_count(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for j in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    total
}

fn exhaustive(d: &Dataset, budget: usize) -> Result<(Vec<usize>, OlsFit), ModelError> {
    let n = d.n_features();
    let count = subset_count(n, budget);
    if count > EXHAUSTIVE_LIMIT {
        return Err(ModelError::ExhaustiveTooLarge(count));
    }
    let mut best = (Vec::new(), ols::intercept_only(&d.y));
    let mut stack: Vec<usize> = Vec::new();
    // Depth-first over increasing index sequences.
    fn visit(d: &Dataset, budget: usize, start: usize, stack: &mut Vec<usize>, best: &mut (Vec<usize>, OlsFit)) {
        for f in start..d.n_features() {
            if stack.iter().any(|&s| d.features[s].signal == d.features[f].signal) {
                continue;
            }
            stack.push(f);
            if let Ok(fit) = fit_subset(d, stack) {
                if fit.rmse < best.1.rmse {
                    *best = (stack.clone(), fit);
                }
            }
            if stack.len() < budget {
                visit(d, budget, f + 1, stack, best);
            }
            stack.pop();
        }
    }
    visit(d, budget, 0, &mut stack, &mut best);
    Ok(best)
}

/// Identifies a model with at most `opts.budget` terms, one per signal.
pub fn identify_model(train: &Dataset, opts: IdentifyOptions) -> Result<Identification, ModelError> {
    if opts.budget == 0 {
        return Err(ModelError::BadBudget);
    }
    if train.n_rows() < opts.budget + 1 {
        return Err(ModelError::TooFewRows { rows: train.n_rows(), needed: opts.budget + 1 });
    }
    let (mut selected, mut fit, steps, dropped) = match opts.mode {
        SelectionMode::Greedy => {
            let g = greedy(train, opts.budget);
            (g.selected, g.fit, g.steps, g.dropped)
        }
        SelectionMode::Exhaustive => {
            let (s, f) = exhaustive(train, opts.budget)?;
            (s, f, Vec::new(), Vec::new())
        }
    };
    let mut removed_negative = Vec::new();
    if opts.non_negative {
        while let Some((pos, _)) = fit
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w < 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            removed_negative.push(train.features[selected.remove(pos)].clone());
            // Dropping a column from a full-rank design keeps it full rank.
            fit = fit_subset(train, &selected).expect("subset of a full-rank design");
        }
    }
    let terms = selected
        .iter()
        .zip(&fit.weights)
        .map(|(&i, &w)| Term { feature: train.features[i].clone(), weight: w })
        .collect();
    Ok(Identification {
        model: PowerModel { intercept: fit.intercept, terms, budget: opts.budget },
        train_rmse: fit.rmse,
        steps,
        dropped: dropped.into_iter().map(|i| train.features[i].clone()).collect(),
        removed_negative,
    })
}
