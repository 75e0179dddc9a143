// SPDX-License-Identifier: Apache-2.0

//! Per-window switching activity.
//!
//! The analyzed span starts `settle_delay` after the trigger's first rising
//! edge and ends at the next falling edge. It is cut into windows of the
//! temporal resolution; an event at time `t` belongs to window
//! `(t - t0) / resolution` and a trailing partial window is dropped.
//!
//! Every candidate signal yields two feature columns: a Hamming-weight
//! count (bits flipped) and a single-toggle count (changes with at least one
//! flipped bit). Bits that are `x` or `z` on either side never count. By
//! default, changes sharing a timestamp are collapsed into their net
//! transition, so delta-cycle glitches are invisible, as they are to a
//! counter clocked once per cycle.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::LogicVec;
use crate::time::Femtos;
use crate::vcd::{SignalEntry, SignalTable, ValueEvent, VcdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CounterType {
    #[serde(rename = "HW")]
    Hw,
    #[serde(rename = "ST")]
    St,
}

impl CounterType {
    pub fn as_str(self) -> &'static str {
        match self {
            CounterType::Hw => "HW",
            CounterType::St => "ST",
        }
    }
}

impl fmt::Display for CounterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureDesc {
    pub signal: String,
    pub counter_type: CounterType,
}

impl fmt::Display for FeatureDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.signal, self.counter_type)
    }
}

/// Trigger-framed span, in timescale ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerWindow {
    pub t_start: u64,
    pub t_end: u64,
    pub settle_delay: u64,
}

impl TriggerWindow {
    /// First tick that is analyzed.
    pub fn analysis_start(&self) -> u64 {
        self.t_start + self.settle_delay
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActivityError {
    #[error("trigger signal `{0}` not found")]
    TriggerNotFound(String),
    #[error("trigger signal `{name}` is {width} bits wide, expected 1")]
    TriggerNotScalar { name: String, width: u32 },
    #[error("trigger has no rising edge followed by a falling edge")]
    NoTriggerEdge,
    #[error("settle delay of {settle} ticks leaves nothing of the {span}-tick trigger window")]
    SettleExceedsWindow { settle: u64, span: u64 },
    #[error("{what} of {fs} fs is not a whole number of {tick} fs ticks")]
    UnalignedDuration { what: &'static str, fs: u64, tick: u64 },
    #[error("resolution must be positive")]
    ZeroResolution,
    #[error("resolution of {resolution} ticks yields no full window in a {span}-tick span")]
    ResolutionTooCoarse { span: u64, resolution: u64 },
    #[error("candidate `{0}` is not in the signal table")]
    UnknownSignal(String),
    #[error(transparent)]
    Vcd(#[from] VcdError),
}

/// Net effect of a set of changes: Hamming weight and single toggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Toggle {
    pub hw: u32,
    pub st: u32,
}

impl Toggle {
    pub fn between(before: &LogicVec, after: &LogicVec) -> Self {
        let hw = before.toggles(after);
        Toggle { hw, st: (hw > 0) as u32 }
    }
}

/// Collapses changes that share a timestamp and signal into the single
/// transition from the value before the first change to the last value.
pub fn merge_same_timestamp(before: &LogicVec, changes: &[LogicVec]) -> Toggle {
    match changes.last() {
        Some(last) => Toggle::between(before, last),
        None => Toggle::default(),
    }
}

struct EdgeTracker {
    committed: char,
    t_start: Option<u64>,
    t_end: Option<u64>,
}

impl EdgeTracker {
    fn commit(&mut self, (t, v): (u64, char)) {
        match (self.committed, v, self.t_start) {
            ('0', '1', None) => self.t_start = Some(t),
            ('1', '0', Some(_)) if self.t_end.is_none() => self.t_end = Some(t),
            _ => {}
        }
        self.committed = v;
    }
}

fn to_ticks(what: &'static str, d: Femtos, tick: Femtos) -> Result<u64, ActivityError> {
    d.in_ticks(tick).ok_or(ActivityError::UnalignedDuration { what, fs: d.0, tick: tick.0 })
}

/// Finds the first rising edge of `trigger_name` and the first falling edge
/// after it. Values are compared once per timestamp, so a pulse that opens
/// and closes at the same time is not an edge.
pub fn detect_trigger_window<I>(
    events: I,
    table: &SignalTable,
    trigger_name: &str,
    settle_delay: Femtos,
) -> Result<TriggerWindow, ActivityError>
where
    I: IntoIterator<Item = Result<ValueEvent, VcdError>>,
{
    let (id, entry) = table
        .find(trigger_name)
        .ok_or_else(|| ActivityError::TriggerNotFound(trigger_name.into()))?;
    if entry.width != 1 {
        return Err(ActivityError::TriggerNotScalar { name: trigger_name.into(), width: entry.width });
    }
    let settle = to_ticks("settle delay", settle_delay, table.timescale.tick())?;

    let mut edges = EdgeTracker { committed: 'x', t_start: None, t_end: None };
    let mut pending: Option<(u64, char)> = None;
    for ev in events {
        let ev = ev?;
        if let Some(p) = pending {
            if p.0 != ev.time {
                edges.commit(p);
                pending = None;
                if edges.t_end.is_some() {
                    break;
                }
            }
        }
        if ev.signal == id {
            pending = Some((ev.time, ev.value.bit(0)));
        }
    }
    if let Some(p) = pending {
        edges.commit(p);
    }

    let (t_start, t_end) = (edges.t_start, edges.t_end);
    match (t_start, t_end) {
        (Some(t_start), Some(t_end)) => {
            let span = t_end - t_start;
            if settle >= span {
                return Err(ActivityError::SettleExceedsWindow { settle, span });
            }
            Ok(TriggerWindow { t_start, t_end, settle_delay: settle })
        }
        _ => Err(ActivityError::NoTriggerEdge),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityOptions {
    pub collapse_same_timestamp: bool,
}

impl Default for ActivityOptions {
    fn default() -> Self {
        ActivityOptions { collapse_same_timestamp: true }
    }
}

/// Toggle counts, `n_windows` rows by `features.len()` columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityMatrix {
    pub window_len: Femtos,
    pub n_windows: usize,
    pub features: Vec<FeatureDesc>,
    /// Row-major counts.
    pub counts: Vec<u32>,
}

impl ActivityMatrix {
    pub fn zeros(window_len: Femtos, n_windows: usize, features: Vec<FeatureDesc>) -> Self {
        let counts = vec![0; n_windows * features.len()];
        ActivityMatrix { window_len, n_windows, features, counts }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn get(&self, window: usize, feature: usize) -> u32 {
        self.counts[window * self.features.len() + feature]
    }

    pub fn get_mut(&mut self, window: usize, feature: usize) -> &mut u32 {
        let n = self.features.len();
        &mut self.counts[window * n + feature]
    }

    pub fn row(&self, window: usize) -> &[u32] {
        let n = self.features.len();
        &self.counts[window * n..(window + 1) * n]
    }

    pub fn column(&self, feature: usize) -> impl Iterator<Item = u32> + '_ {
        (0..self.n_windows).map(move |w| self.get(w, feature))
    }

    pub fn feature_index(&self, f: &FeatureDesc) -> Option<usize> {
        self.features.iter().position(|g| g == f)
    }

    /// Tab-separated dump, one row per window.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# activity: {} windows x {} features, window {} us",
            self.n_windows,
            self.features.len(),
            self.window_len.as_micros()
        );
        s.push_str("window");
        for f in &self.features {
            let _ = write!(s, "\t{f}");
        }
        s.push('\n');
        for w in 0..self.n_windows {
            let _ = write!(s, "{w}");
            for c in self.row(w) {
                let _ = write!(s, "\t{c}");
            }
            s.push('\n');
        }
        s
    }
}

/// Feature columns for `candidates`, Hamming-weight before single-toggle.
pub fn feature_columns(candidates: &[SignalEntry]) -> Vec<FeatureDesc> {
    candidates
        .iter()
        .flat_map(|c| {
            [CounterType::Hw, CounterType::St]
                .map(|counter_type| FeatureDesc { signal: c.hier_name.clone(), counter_type })
        })
        .collect()
}

struct Accumulator {
    matrix: ActivityMatrix,
    state: Vec<LogicVec>,
    pending: Vec<Option<LogicVec>>,
    touched: Vec<usize>,
    t0: u64,
    end: u64,
    res: u64,
}

impl Accumulator {
    fn record(&mut self, col: usize, t: u64, new: LogicVec) {
        if t >= self.t0 && t < self.end {
            let w = ((t - self.t0) / self.res) as usize;
            let tg = Toggle::between(&self.state[col], &new);
            *self.matrix.get_mut(w, 2 * col) += tg.hw;
            *self.matrix.get_mut(w, 2 * col + 1) += tg.st;
        }
        self.state[col] = new;
    }

    fn flush(&mut self, t: u64) {
        let touched = core::mem::take(&mut self.touched);
        for &col in &touched {
            if let Some(new) = self.pending[col].take() {
                self.record(col, t, new);
            }
        }
        self.touched = touched;
        self.touched.clear();
    }
}

/// Counts per-window activity of `candidates` inside `window`.
pub fn window_activity<I>(
    events: I,
    table: &SignalTable,
    candidates: &[SignalEntry],
    window: &TriggerWindow,
    resolution: Femtos,
    opts: ActivityOptions,
) -> Result<ActivityMatrix, ActivityError>
where
    I: IntoIterator<Item = Result<ValueEvent, VcdError>>,
{
    if resolution.0 == 0 {
        return Err(ActivityError::ZeroResolution);
    }
    let res = to_ticks("resolution", resolution, table.timescale.tick())?;
    let t0 = window.analysis_start();
    let span = window.t_end.saturating_sub(t0);
    let n_windows = (span / res) as usize;
    if n_windows == 0 {
        return Err(ActivityError::ResolutionTooCoarse { span, resolution: res });
    }

    let mut column_of: Vec<Option<usize>> = vec![None; table.len()];
    let mut state = Vec::with_capacity(candidates.len());
    for (col, c) in candidates.iter().enumerate() {
        let (id, e) = table.find(&c.hier_name).ok_or_else(|| ActivityError::UnknownSignal(c.hier_name.clone()))?;
        column_of[id.index()] = Some(col);
        state.push(LogicVec::unknown(e.width));
    }

    let mut acc = Accumulator {
        matrix: ActivityMatrix::zeros(resolution, n_windows, feature_columns(candidates)),
        state,
        pending: vec![None; candidates.len()],
        touched: Vec::new(),
        t0,
        end: t0 + n_windows as u64 * res,
        res,
    };

    let mut now = 0u64;
    for ev in events {
        let ev = ev?;
        if ev.time != now {
            acc.flush(now);
            now = ev.time;
        }
        if now >= acc.end {
            break;
        }
        let Some(col) = column_of[ev.signal.index()] else { continue };
        if opts.collapse_same_timestamp {
            if acc.pending[col].is_none() {
                acc.touched.push(col);
            }
            acc.pending[col] = Some(ev.value);
        } else {
            acc.record(col, now, ev.value);
        }
    }
    acc.flush(now);
    Ok(acc.matrix)
}
