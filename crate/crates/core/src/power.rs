// SPDX-License-Identifier: Apache-2.0

//! Shunt-resistor captures to window-averaged power.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("channel `{channel}` has {len} samples, expected {expected}")]
    ChannelLengthMismatch { channel: &'static str, len: usize, expected: usize },
    #[error("sample period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("shunt resistance must be positive, got {0}")]
    NonPositiveShunt(f64),
    #[error("supply {supply} V does not exceed the shunt drop {drop} V at sample {index}")]
    SupplyBelowDrop { index: usize, supply: f64, drop: f64 },
    #[error("supply taken from the capture but it has no supply channel")]
    MissingSupplyChannel,
    #[error("trigger channel never crosses its 50% threshold upwards")]
    NoTriggerCrossing,
    #[error("trace covers only {coverable} of {expected} windows")]
    TraceTooShort { coverable: usize, expected: usize },
    #[error("invalid duration: {0}")]
    BadDuration(&'static str),
    #[error("captures cannot be stitched: {0}")]
    CaptureMismatch(String),
}

/// Oscilloscope channels sampled on a common time base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeCapture {
    /// Seconds between samples.
    pub sample_period: f64,
    /// Volts across the shunt.
    pub shunt: Vec<f64>,
    /// Volts upstream of the shunt, when captured.
    pub supply: Option<Vec<f64>>,
    pub trigger: Vec<f64>,
    pub capture_id: String,
    pub instrument: String,
}

impl ScopeCapture {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.sample_period > 0.0) {
            return Err(PowerError::NonPositivePeriod(self.sample_period));
        }
        let expected = self.shunt.len();
        let check = |channel, len| {
            if len == expected {
                Ok(())
            } else {
                Err(PowerError::ChannelLengthMismatch { channel, len, expected })
            }
        };
        check("trigger", self.trigger.len())?;
        if let Some(s) = &self.supply {
            check("supply", s.len())?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shunt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shunt.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supply {
    /// Fixed supply voltage.
    Constant(f64),
    /// Use the capture's supply channel.
    Channel,
}

/// Instantaneous power in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    pub sample_period: f64,
    pub samples: Vec<f64>,
    /// Index of the first sample at or above the trigger threshold.
    pub t0_trigger: usize,
    /// Negative samples that were clamped to zero.
    pub clamped: usize,
}

/// Mean power per analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedPower {
    /// Seconds.
    pub window_len: f64,
    /// Watts.
    pub values: Vec<f64>,
}

/// Index of the first upward crossing of the midpoint between the channel's
/// minimum and maximum.
pub fn trigger_edge(trigger: &[f64]) -> Option<usize> {
    let (lo, hi) = trigger
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return None;
    }
    let threshold = (hi + lo) / 2.0;
    trigger.windows(2).position(|w| w[0] < threshold && w[1] >= threshold).map(|i| i + 1)
}

/// `P = (V_shunt / R) * (V_supply - V_shunt)` per sample, with the supply
/// measured upstream of the shunt.
pub fn compute_power(cap: &ScopeCapture, r_shunt: f64, supply: Supply) -> Result<PowerTrace, PowerError> {
    cap.validate()?;
    if !(r_shunt > 0.0) {
        return Err(PowerError::NonPositiveShunt(r_shunt));
    }
    let supply_at = |i: usize| -> Result<f64, PowerError> {
        match supply {
            Supply::Constant(v) => Ok(v),
            Supply::Channel => cap.supply.as_ref().map(|s| s[i]).ok_or(PowerError::MissingSupplyChannel),
        }
    };
    let mut clamped = 0;
    let mut samples = Vec::with_capacity(cap.len());
    for (i, &drop) in cap.shunt.iter().enumerate() {
        let v = supply_at(i)?;
        if !(v > drop) {
            return Err(PowerError::SupplyBelowDrop { index: i, supply: v, drop });
        }
        let p = drop / r_shunt * (v - drop);
        if p < 0.0 {
            clamped += 1;
            samples.push(0.0);
        } else {
            samples.push(p);
        }
    }
    let t0_trigger = trigger_edge(&cap.trigger).ok_or(PowerError::NoTriggerCrossing)?;
    Ok(PowerTrace { sample_period: cap.sample_period, samples, t0_trigger, clamped })
}

/// Rounds sample positions that are integers up to floating-point noise,
/// and takes the ceiling otherwise, so `[a, b)` selects samples whose time
/// lies inside the interval.
fn sample_boundary(x: f64) -> usize {
    let r = libm::round(x);
    if libm::fabs(x - r) <= 1e-6 {
        r as usize
    } else {
        libm::ceil(x) as usize
    }
}

/// Sample range `[start, end)` of window `k`.
pub fn window_samples(trace: &PowerTrace, settle_delay: f64, resolution: f64, k: usize) -> (usize, usize) {
    let dt = trace.sample_period;
    let at = |j: usize| trace.t0_trigger + sample_boundary((settle_delay + j as f64 * resolution) / dt);
    (at(k), at(k + 1))
}

/// Averages `trace` over `n_windows_expected` windows starting
/// `settle_delay` seconds after the trigger edge.
pub fn align_and_resample(
    trace: &PowerTrace,
    settle_delay: f64,
    resolution: f64,
    n_windows_expected: usize,
) -> Result<WindowedPower, PowerError> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(PowerError::BadDuration("resolution must be positive"));
    }
    if !(settle_delay >= 0.0) || !settle_delay.is_finite() {
        return Err(PowerError::BadDuration("settle delay must be non-negative"));
    }
    if n_windows_expected == 0 {
        return Err(PowerError::BadDuration("at least one window is required"));
    }
    let mut values = Vec::with_capacity(n_windows_expected);
    for k in 0..n_windows_expected {
        let (a, b) = window_samples(trace, settle_delay, resolution, k);
        if b > trace.samples.len() || b <= a {
            return Err(PowerError::TraceTooShort { coverable: k, expected: n_windows_expected });
        }
        let sum: f64 = trace.samples[a..b].iter().sum();
        values.push(sum / (b - a) as f64);
    }
    Ok(WindowedPower { window_len: resolution, values })
}

/// Merges two captures of the same run, aligned on their trigger edges.
/// Where both cover a sample the first capture wins.
pub fn stitch(first: &ScopeCapture, second: &ScopeCapture) -> Result<ScopeCapture, PowerError> {
    first.validate()?;
    second.validate()?;
    if libm::fabs(first.sample_period - second.sample_period) > 1e-6 * first.sample_period {
        return Err(PowerError::CaptureMismatch(format!(
            "sample periods {} and {} differ",
            first.sample_period, second.sample_period
        )));
    }
    if first.supply.is_some() != second.supply.is_some() {
        return Err(PowerError::CaptureMismatch("channel sets differ".into()));
    }
    let e1 = trigger_edge(&first.trigger).ok_or(PowerError::NoTriggerCrossing)? as i64;
    let e2 = trigger_edge(&second.trigger).ok_or(PowerError::NoTriggerCrossing)? as i64;
    let offset = e1 - e2;
    let (len1, len2) = (first.len() as i64, second.len() as i64);
    let start = offset.min(0);
    let end = len1.max(offset + len2);
    if offset > len1 || offset + len2 < 0 {
        return Err(PowerError::CaptureMismatch("captures do not overlap or touch".into()));
    }

    let pick = |a: &[f64], b: &[f64]| -> Vec<f64> {
        (start..end)
            .map(|i| if (0..len1).contains(&i) { a[i as usize] } else { b[(i - offset) as usize] })
            .collect()
    };
    Ok(ScopeCapture {
        sample_period: first.sample_period,
        shunt: pick(&first.shunt, &second.shunt),
        supply: match (&first.supply, &second.supply) {
            (Some(a), Some(b)) => Some(pick(a, b)),
            _ => None,
        },
        trigger: pick(&first.trigger, &second.trigger),
        capture_id: format!("{}+{}", first.capture_id, second.capture_id),
        instrument: first.instrument.clone(),
    })
}
