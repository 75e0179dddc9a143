// SPDX-License-Identifier: Apache-2.0

//! JSON artifacts exchanged between pipeline phases.

use std::collections::BTreeMap;

use blink_core::activity::{CounterType, FeatureDesc, TriggerWindow};
use blink_core::model::{Metrics, Normalizer, SelectionMode, SelectionStep, Term};
use blink_core::monitor::{Overhead, TapRoute};
use blink_core::PowerModel;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

pub const ACTIVITY: &str = "activity.blka";
pub const SIGNALS: &str = "signals.json";
pub const ACTIVITY_META: &str = "activity_meta.json";
pub const POWER: &str = "power.blkp";
pub const POWER_META: &str = "power_meta.json";
pub const MODEL: &str = "model.json";
pub const MONITOR_RTL: &str = "blink_monitor.v";
pub const WRAPPER_RTL: &str = "blink_wrapper.v";
pub const MONITOR: &str = "monitor.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityMeta {
    pub format_version: u32,
    pub n_windows: usize,
    pub n_features: usize,
    pub resolution_us: f64,
    pub settle_us: f64,
    pub trigger: String,
    /// Trigger edges and settle delay in VCD ticks.
    pub window: TriggerWindow,
    pub tick_fs: u64,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureInfo {
    /// File name; the full path and digest are in the report.
    pub file: String,
    pub capture_id: String,
    pub instrument: String,
    pub samples: usize,
    pub sample_period_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMeta {
    pub format_version: u32,
    pub n_windows: usize,
    pub resolution_us: f64,
    pub settle_us: f64,
    pub r_shunt_ohm: f64,
    /// Constant supply, or `None` when the capture's channel was used.
    pub supply_v: Option<f64>,
    pub captures: Vec<CaptureInfo>,
    pub trigger_index: usize,
    /// Samples with negative computed power, set to zero.
    pub clamped_samples: usize,
    pub peak_window_w: f64,
    pub mean_window_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    pub signal: String,
    pub counter_type: CounterType,
    pub weight_w_per_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionInfo {
    pub mode: SelectionMode,
    pub non_negative: bool,
    pub train_rmse_w: f64,
    pub steps: Vec<SelectionStep>,
    pub dropped_collinear: Vec<FeatureDesc>,
    pub removed_negative: Vec<FeatureDesc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub intercept_w: f64,
    pub terms: Vec<ModelTerm>,
    pub budget: usize,
    pub resolution_us: f64,
    pub split_ratio: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub normalizer: Normalizer,
    pub metrics: Metrics,
    /// Largest window power in the test split.
    pub peak_test_w: f64,
    pub selection: SelectionInfo,
}

impl ModelFile {
    pub fn model(&self) -> PowerModel {
        PowerModel {
            intercept: self.intercept_w,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    feature: FeatureDesc { signal: t.signal.clone(), counter_type: t.counter_type },
                    weight: t.weight_w_per_count,
                })
                .collect(),
            budget: self.budget,
        }
    }

    pub fn terms_of(m: &PowerModel) -> Vec<ModelTerm> {
        m.terms
            .iter()
            .map(|t| ModelTerm {
                signal: t.feature.signal.clone(),
                counter_type: t.feature.counter_type,
                weight_w_per_count: t.weight,
            })
            .collect()
    }

    pub fn counter_mix(&self) -> (usize, usize) {
        let hw = self.terms.iter().filter(|t| t.counter_type == CounterType::Hw).count();
        (hw, self.terms.len() - hw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorTap {
    pub signal: String,
    pub width: u32,
    pub counter_type: CounterType,
    pub counter_width: u32,
    pub weight_q: i64,
    pub route: TapRoute,
}

/// Replay of the VCD through the software model of the monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub windows: usize,
    /// Windows where the replay disagrees with the quantized model.
    pub mismatched_windows: usize,
    pub saturated_windows: usize,
    pub counter_overflow: bool,
    /// Largest `|float model − scale·estimate|` over all windows, in watts.
    pub max_float_error_w: f64,
    pub error_bound_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorFile {
    pub format_version: u32,
    pub frac_bits: u32,
    pub scale_w_per_lsb: f64,
    pub weight_width: u32,
    pub output_width: u32,
    pub accumulator_width: u32,
    pub window_cycles: u64,
    pub window_counter_width: u32,
    pub clock_mhz: f64,
    pub intercept_q: i64,
    pub taps: Vec<MonitorTap>,
    /// Pre-synthesis estimate; LUTs are approximate.
    pub overhead: Overhead,
    pub self_check: Option<SelfCheck>,
    /// Why the self-check was skipped, when it was.
    pub self_check_skipped: Option<String>,
}

/// Digests of files, keyed by artifact name.
pub type Digests = BTreeMap<String, String>;
