// SPDX-License-Identifier: Apache-2.0

//! Fixed-point monitor: quantization, Verilog emission, a cycle-accurate
//! software model of the emitted hardware and a resource estimate.

mod rtl;
mod sim;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::CounterType;
use crate::model::PowerModel;

pub use rtl::{emit_monitor_rtl, emit_wrapper, PortDecl, TapRoute, WrapperConfig, WrapperRtl};
pub use sim::{events_to_cycles, simulate_monitor, CycleEvent, MonitorRun};

pub const DEFAULT_WEIGHT_WIDTH: u32 = 16;
pub const DEFAULT_OUTPUT_WIDTH: u32 = 32;
pub const DEFAULT_MAX_FRAC: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("{what} = {value} does not fit a {width}-bit signed constant even without fraction bits")]
    WeightOverflow { what: String, value: String, width: u32 },
    #[error("bit width {0} is outside 2..=63")]
    BadWidth(u32),
    #[error("window must span at least one cycle")]
    ZeroWindow,
    #[error("tap `{0}` has zero width")]
    ZeroWidthTap(String),
    #[error("model has {terms} terms but {widths} signal widths were given")]
    TapCountMismatch { terms: usize, widths: usize },
    #[error("counter of tap `{tap}` has {have} bits, {need} are required")]
    CounterTooNarrow { tap: String, have: u32, need: u32 },
    #[error("quantized weight of tap `{0}` does not fit its width")]
    WeightTooWide(String),
    #[error("tap `{0}` is neither a top-level port nor a known hierarchical signal")]
    UnresolvableTap(String),
    #[error("port `{0}` is not a valid Verilog identifier")]
    BadIdentifier(String),
}

/// Integer form of a [`PowerModel`]: every value is scaled by `2^frac_bits`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub frac_bits: u32,
    pub weight_width: u32,
    /// Width of the intercept and of the saturated estimate.
    pub output_width: u32,
    pub weights: Vec<i64>,
    pub intercept: i64,
}

fn fits(v: i64, width: u32) -> bool {
    v.unsigned_abs() < 1u64 << (width - 1)
}

fn check_width(w: u32) -> Result<(), MonitorError> {
    if (2..=63).contains(&w) {
        Ok(())
    } else {
        Err(MonitorError::BadWidth(w))
    }
}

fn scaled(v: f64, f: u32) -> Option<i64> {
    let r = libm::round(libm::ldexp(v, f as i32));
    // `i64::MAX as f64` is 2^63; anything at or above it cannot fit.
    (r.is_finite() && libm::fabs(r) < i64::MAX as f64).then_some(r as i64)
}

/// Picks the largest `f ≤ max_frac` for which every weight fits
/// `weight_width` signed bits and the intercept fits `output_width`.
pub fn quantize_weights(
    m: &PowerModel,
    weight_width: u32,
    output_width: u32,
    max_frac: u32,
) -> Result<QuantizedModel, MonitorError> {
    check_width(weight_width)?;
    check_width(output_width)?;
    let attempt = |f: u32| -> Option<QuantizedModel> {
        let weights = m
            .terms
            .iter()
            .map(|t| scaled(t.weight, f).filter(|&q| fits(q, weight_width)))
            .collect::<Option<Vec<i64>>>()?;
        let intercept = scaled(m.intercept, f).filter(|&q| fits(q, output_width))?;
        Some(QuantizedModel { frac_bits: f, weight_width, output_width, weights, intercept })
    };
    if let Some(q) = (0..=max_frac).rev().find_map(attempt) {
        return Ok(q);
    }
    let bad_weight = m.terms.iter().find(|t| scaled(t.weight, 0).is_none_or(|q| !fits(q, weight_width)));
    Err(match bad_weight {
        Some(t) => MonitorError::WeightOverflow {
            what: format!("weight of {}", t.feature),
            value: format!("{}", t.weight),
            width: weight_width,
        },
        None => MonitorError::WeightOverflow {
            what: "intercept".into(),
            value: format!("{}", m.intercept),
            width: output_width,
        },
    })
}

impl QuantizedModel {
    /// Watts per least significant bit of the estimate.
    pub fn scale(&self) -> f64 {
        libm::ldexp(1.0, -(self.frac_bits as i32))
    }

    pub fn output_max(&self) -> i64 {
        (1i64 << (self.output_width - 1)) - 1
    }

    pub fn output_min(&self) -> i64 {
        -(1i64 << (self.output_width - 1))
    }

    /// Exact unsaturated `b_q + Σ w_q·count`.
    pub fn accumulate(&self, counts: &[u32]) -> i128 {
        self.weights
            .iter()
            .zip(counts)
            .fold(self.intercept as i128, |acc, (&w, &c)| acc + w as i128 * c as i128)
    }

    /// The estimate register value for one window of counts.
    pub fn apply(&self, counts: &[u32]) -> i64 {
        self.accumulate(counts).clamp(self.output_min() as i128, self.output_max() as i128) as i64
    }

    /// The float model this integer model represents.
    pub fn dequantize(&self, m: &PowerModel) -> PowerModel {
        let s = self.scale();
        let mut d = m.clone();
        d.intercept = self.intercept as f64 * s;
        for (t, &w) in d.terms.iter_mut().zip(&self.weights) {
            t.weight = w as f64 * s;
        }
        d
    }

    /// Largest possible `|float − scale·fixed|` for a window whose largest
    /// count is `max_count`, absent saturation.
    pub fn error_bound(&self, max_count: u32) -> f64 {
        (self.weights.len() + 1) as f64 * libm::ldexp(1.0, -(self.frac_bits as i32 + 1)) * max_count.max(1) as f64
    }
}

/// Bits needed to hold values `0..=max`.
pub fn bits_for(max: u64) -> u32 {
    (64 - max.leading_zeros()).max(1)
}

/// Smallest counter that cannot wrap within `window_cycles` cycles.
pub fn min_counter_width(width: u32, counter_type: CounterType, window_cycles: u64) -> u32 {
    match counter_type {
        CounterType::Hw => bits_for(width as u64 * window_cycles),
        CounterType::St => bits_for(window_cycles),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tap {
    pub hier_name: String,
    pub width: u32,
    pub counter_type: CounterType,
    pub counter_width: u32,
}

impl Tap {
    /// Largest count the counter can reach in one window.
    pub fn max_count(&self, window_cycles: u64) -> u64 {
        match self.counter_type {
            CounterType::Hw => self.width as u64 * window_cycles,
            CounterType::St => window_cycles,
        }
    }
}

/// Everything the emitter and the software model need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorSpec {
    pub window_cycles: u64,
    pub taps: Vec<Tap>,
    pub quantized: QuantizedModel,
}

impl MonitorSpec {
    /// Taps follow the model's term order; `widths[i]` is the bit width of
    /// term `i`'s signal.
    pub fn new(m: &PowerModel, q: QuantizedModel, widths: &[u32], window_cycles: u64) -> Result<Self, MonitorError> {
        if widths.len() != m.terms.len() {
            return Err(MonitorError::TapCountMismatch { terms: m.terms.len(), widths: widths.len() });
        }
        let taps = m
            .terms
            .iter()
            .zip(widths)
            .map(|(t, &width)| Tap {
                hier_name: t.feature.signal.clone(),
                width,
                counter_type: t.feature.counter_type,
                counter_width: min_counter_width(width, t.feature.counter_type, window_cycles),
            })
            .collect();
        let spec = MonitorSpec { window_cycles, taps, quantized: q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MonitorError> {
        if self.window_cycles == 0 {
            return Err(MonitorError::ZeroWindow);
        }
        check_width(self.quantized.weight_width)?;
        check_width(self.quantized.output_width)?;
        if self.quantized.weights.len() != self.taps.len() {
            return Err(MonitorError::TapCountMismatch { terms: self.taps.len(), widths: self.quantized.weights.len() });
        }
        if !fits(self.quantized.intercept, self.quantized.output_width) {
            return Err(MonitorError::WeightTooWide("intercept".into()));
        }
        for (t, &w) in self.taps.iter().zip(&self.quantized.weights) {
            if t.width == 0 {
                return Err(MonitorError::ZeroWidthTap(t.hier_name.clone()));
            }
            let need = min_counter_width(t.width, t.counter_type, self.window_cycles);
            if t.counter_width < need || t.counter_width > 64 {
                return Err(MonitorError::CounterTooNarrow { tap: t.hier_name.clone(), have: t.counter_width, need });
            }
            if !fits(w, self.quantized.weight_width) {
                return Err(MonitorError::WeightTooWide(t.hier_name.clone()));
            }
        }
        Ok(())
    }

    pub fn window_counter_width(&self) -> u32 {
        bits_for(self.window_cycles - 1)
    }

    /// Signed width that holds every reachable accumulator value and the
    /// saturated output.
    pub fn accumulator_width(&self) -> u32 {
        let q = &self.quantized;
        let mut mag = q.intercept.unsigned_abs() as u128;
        for (t, &w) in self.taps.iter().zip(&q.weights) {
            let cmax = (1u128 << t.counter_width) - 1;
            mag += w.unsigned_abs() as u128 * cmax;
        }
        let bits = 128 - mag.leading_zeros() + 1;
        bits.max(q.output_width + 1)
    }
}

/// Pre-synthesis resource estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overhead {
    /// Exact count of data-path flip-flops.
    pub ff: u64,
    /// Approximate 6-input LUT count.
    pub lut: u64,
}

/// Flip-flops: tap history registers, counters, the window counter and the
/// estimate register. The priming and valid flags are not counted.
///
/// LUTs, approximated as:
/// - HW tap: `width − 1` for the popcount tree, plus one per counter bit;
/// - ST tap: `ceil(width / 3)` for the inequality compare, plus one per counter bit;
/// - MAC: one accumulator-width adder per set bit of each `|w_q|` and of `|b_q|`;
/// - saturation: one per output bit; window counter: one per bit.
pub fn estimate_overhead(spec: &MonitorSpec) -> Overhead {
    let q = &spec.quantized;
    let wc = spec.window_counter_width() as u64;
    let ow = q.output_width as u64;
    let aw = spec.accumulator_width() as u64;
    let mut ff = wc + ow;
    let mut lut = wc + ow + aw * q.intercept.unsigned_abs().count_ones() as u64;
    for (t, &w) in spec.taps.iter().zip(&q.weights) {
        ff += t.width as u64 + t.counter_width as u64;
        lut += t.counter_width as u64 + aw * w.unsigned_abs().count_ones() as u64;
        lut += match t.counter_type {
            CounterType::Hw => t.width as u64 - 1,
            CounterType::St => (t.width as u64).div_ceil(3),
        };
    }
    Overhead { ff, lut }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::FeatureDesc;
    use crate::model::Term;
    use alloc::vec;

    fn model(intercept: f64, weights: &[f64]) -> PowerModel {
        PowerModel {
            intercept,
            terms: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Term {
                    feature: FeatureDesc { signal: format!("top.m.s{i}"), counter_type: CounterType::Hw },
                    weight: w,
                })
                .collect(),
            budget: weights.len().max(1),
        }
    }

    #[test]
    fn frac_bits_selection() {
        let q = quantize_weights(&model(0.0, &[0.5, -0.25]), 16, 32, 24).unwrap();
        assert_eq!(q.frac_bits, 15);
        assert_eq!(q.weights, vec![16384, -8192]);
        let z = quantize_weights(&model(0.0, &[0.0, 0.0]), 16, 32, 24).unwrap();
        assert_eq!((z.frac_bits, z.weights.clone()), (24, vec![0, 0]));
        assert!(matches!(
            quantize_weights(&model(0.0, &[40000.0]), 16, 32, 24),
            Err(MonitorError::WeightOverflow { width: 16, .. })
        ));
        // The intercept is bounded by the output width, not the weight width.
        let b = quantize_weights(&model(0.3, &[1e-4]), 16, 32, 24).unwrap();
        assert_eq!(b.frac_bits, 24);
        assert_eq!(b.intercept, 5_033_165);
        assert!(matches!(
            quantize_weights(&model(3e9, &[]), 16, 32, 24),
            Err(MonitorError::WeightOverflow { width: 32, .. })
        ));
    }

    #[test]
    fn rounding_error_per_weight() {
        let m = model(0.123456, &[3.3e-4, -7.1e-5, 1.9e-3]);
        let q = quantize_weights(&m, 16, 32, 24).unwrap();
        let d = q.dequantize(&m);
        let half = libm::ldexp(1.0, -(q.frac_bits as i32 + 1));
        for (a, b) in m.terms.iter().zip(&d.terms) {
            assert!(libm::fabs(a.weight - b.weight) <= half);
        }
        assert!(libm::fabs(m.intercept - d.intercept) <= half);
    }

    #[test]
    fn counter_widths_and_overhead() {
        assert_eq!(min_counter_width(8, CounterType::Hw, 1500), 14);
        assert_eq!(min_counter_width(8, CounterType::St, 1000), 10);
        assert_eq!(min_counter_width(1, CounterType::St, 1), 1);
        let m = model(0.1, &[]);
        let q = quantize_weights(&m, 16, 32, 24).unwrap();
        let s = MonitorSpec::new(&m, q, &[], 1000).unwrap();
        assert_eq!(estimate_overhead(&s).ff, 10 + 32);
        let m = model(0.1, &[0.01]);
        let q = quantize_weights(&m, 16, 32, 24).unwrap();
        let s = MonitorSpec::new(&m, q, &[8], 1500).unwrap();
        assert_eq!(s.taps[0].counter_width, 14);
        assert_eq!(estimate_overhead(&s).ff, 11 + 32 + 8 + 14);
    }

    #[test]
    fn saturation() {
        let q = QuantizedModel { frac_bits: 0, weight_width: 16, output_width: 8, weights: vec![100, -100], intercept: 0 };
        assert_eq!(q.apply(&[1, 0]), 100);
        assert_eq!(q.apply(&[2, 0]), 127);
        assert_eq!(q.apply(&[0, 3]), -128);
    }
}
