// SPDX-License-Identifier: Apache-2.0

//! Synthetic designs with known power models.
//!
//! A design is a `top → clusterN → coreM` hierarchy of registers whose
//! toggle rates follow a phase schedule in which whole clusters go idle or
//! burst. Rendering produces a VCD, the activity counts computed directly
//! from the generated values, and an oscilloscope capture whose window power
//! is the ground-truth model applied to those counts.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{ActivityMatrix, CounterType, FeatureDesc, TriggerWindow};
use crate::model::{PowerModel, Term};
use crate::power::ScopeCapture;
use crate::time::Femtos;
use crate::vcd::PortRole;

pub const MAX_SIGNALS: usize = 4096;
pub const MAX_WIDTH: u32 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
}

fn out_of_range(msg: impl Into<String>) -> HarnessError {
    HarnessError::ParamOutOfRange(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub n_signals: usize,
    pub min_width: u32,
    pub max_width: u32,
    pub n_clusters: usize,
    pub cores_per_cluster: usize,
    /// Number of terms in the ground-truth model.
    pub support_size: usize,
    pub n_phases: usize,
    /// Allow negative ground-truth weights.
    pub mixed_sign: bool,
    /// Static power range in watts.
    pub intercept_w: (f64, f64),
    /// Typical dynamic power at full activity, in watts.
    pub dynamic_w: f64,
    /// Window length used to scale weights to per-count values.
    pub nominal_window_cycles: u64,
    /// Fraction of signals that start out unknown.
    pub initial_x_fraction: f64,
}

impl Default for DesignParams {
    fn default() -> Self {
        DesignParams {
            n_signals: 40,
            min_width: 1,
            max_width: 32,
            n_clusters: 4,
            cores_per_cluster: 2,
            support_size: 5,
            n_phases: 8,
            mixed_sign: false,
            intercept_w: (0.2, 0.4),
            dynamic_w: 0.4,
            nominal_window_cycles: 100,
            initial_x_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub hier_name: String,
    pub width: u32,
    pub role: PortRole,
    pub cluster: usize,
    /// Changes per cycle at full activity.
    pub base_rate: f64,
    /// Probability that each bit flips when the signal changes.
    pub bit_flip_prob: f64,
    pub initial_x: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// Share of the analyzed span.
    pub fraction: f64,
    pub cluster_active: Vec<bool>,
    /// Per-signal multiplier of `base_rate`, in `[0, 1]`.
    pub rate_scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDesign {
    pub seed: u64,
    pub params: DesignParams,
    /// Sorted by `hier_name`.
    pub signals: Vec<SignalSpec>,
    pub phases: Vec<Phase>,
    pub truth: PowerModel,
}

impl SyntheticDesign {
    /// Feature columns of every generated signal, in candidate order.
    pub fn features(&self) -> Vec<FeatureDesc> {
        self.signals
            .iter()
            .flat_map(|s| [CounterType::Hw, CounterType::St].map(|c| FeatureDesc { signal: s.hier_name.clone(), counter_type: c }))
            .collect()
    }

    /// Toggle probability of signal `s` during phase `p`.
    pub fn rate(&self, s: usize, p: usize) -> f64 {
        let sig = &self.signals[s];
        let ph = &self.phases[p];
        if ph.cluster_active[sig.cluster] {
            sig.base_rate * ph.rate_scale[s]
        } else {
            0.0
        }
    }

    /// Ground-truth power for each window of `acts`.
    pub fn true_power(&self, acts: &ActivityMatrix) -> Vec<f64> {
        self.truth.predict_activity(acts).expect("truth features are generated columns")
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals.binary_search_by(|s| s.hier_name.as_str().cmp(name)).ok()
    }
}

/// Builds a design deterministically from `seed`.
pub fn gen_design(seed: u64, params: &DesignParams) -> Result<SyntheticDesign, HarnessError> {
    let p = params;
    if p.n_signals == 0 || p.n_signals > MAX_SIGNALS {
        return Err(out_of_range(format!("n_signals = {} not in 1..={MAX_SIGNALS}", p.n_signals)));
    }
    if p.min_width == 0 || p.min_width > p.max_width || p.max_width > MAX_WIDTH {
        return Err(out_of_range(format!("widths {}..={} not within 1..={MAX_WIDTH}", p.min_width, p.max_width)));
    }
    if p.n_clusters == 0 || p.cores_per_cluster == 0 || p.n_phases == 0 {
        return Err(out_of_range("clusters, cores and phases must be positive"));
    }
    if p.support_size > p.n_signals {
        return Err(out_of_range(format!("support_size = {} exceeds n_signals", p.support_size)));
    }
    if !(0.0..=1.0).contains(&p.initial_x_fraction) {
        return Err(out_of_range("initial_x_fraction must lie in [0, 1]"));
    }
    if p.nominal_window_cycles == 0 || !(p.dynamic_w >= 0.0) || !(p.intercept_w.0 <= p.intercept_w.1) {
        return Err(out_of_range("power scale parameters are inconsistent"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_cores = p.n_clusters * p.cores_per_cluster;

    let mut signals: Vec<SignalSpec> = (0..p.n_signals)
        .map(|j| {
            let core = j % n_cores;
            let (cluster, local) = (core / p.cores_per_cluster, core % p.cores_per_cluster);
            let (role, stem) = match rng.random_range(0..10) {
                0..=2 => (PortRole::Input, "in_d"),
                3..=5 => (PortRole::Output, "out_q"),
                _ => (PortRole::Internal, "r"),
            };
            SignalSpec {
                hier_name: format!("top.cluster{cluster}.core{local}.{stem}{j}"),
                width: rng.random_range(p.min_width..=p.max_width),
                role,
                cluster,
                base_rate: rng.random_range(0.02..0.4),
                bit_flip_prob: rng.random_range(0.15..0.85),
                initial_x: rng.random_bool(p.initial_x_fraction),
            }
        })
        .collect();
    signals.sort_by(|a, b| a.hier_name.cmp(&b.hier_name));

    let raw: Vec<f64> = (0..p.n_phases).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let phases = raw
        .iter()
        .enumerate()
        .map(|(i, r)| Phase {
            fraction: r / total,
            // Phase 0 bursts everywhere so every signal is exercised.
            cluster_active: (0..p.n_clusters).map(|_| i == 0 || rng.random_bool(0.6)).collect(),
            rate_scale: (0..p.n_signals).map(|_| rng.random_range(0.2..1.0)).collect(),
        })
        .collect();

    // Support: prefer multi-bit signals so HW and ST differ.
    let wide: Vec<usize> = (0..p.n_signals).filter(|&i| signals[i].width >= 4).collect();
    let narrow: Vec<usize> = (0..p.n_signals).filter(|&i| signals[i].width < 4).collect();
    let pick_from = |pool: &[usize], n: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let n = n.min(pool.len());
        let mut idx: Vec<usize> = sample(rng, pool.len(), n).into_iter().map(|k| pool[k]).collect();
        idx.sort_unstable();
        idx
    };
    let mut support = pick_from(&wide, p.support_size, &mut rng);
    let rest = p.support_size - support.len();
    support.extend(pick_from(&narrow, rest, &mut rng));
    support.sort_unstable();

    let per_term = p.dynamic_w / p.support_size.max(1) as f64;
    let terms = support
        .iter()
        .map(|&i| {
            let s = &signals[i];
            let counter_type = if s.width == 1 || rng.random_bool(0.5) { CounterType::Hw } else { CounterType::St };
            let per_change = match counter_type {
                CounterType::Hw => s.width as f64 * s.bit_flip_prob,
                CounterType::St => 1.0,
            };
            let expected = p.nominal_window_cycles as f64 * s.base_rate * per_change;
            let mut weight = per_term * rng.random_range(0.5..1.5) / expected;
            if p.mixed_sign && rng.random_bool(0.3) {
                weight = -weight;
            }
            Term { feature: FeatureDesc { signal: s.hier_name.clone(), counter_type }, weight }
        })
        .collect();
    let intercept = rng.random_range(p.intercept_w.0..=p.intercept_w.1);

    Ok(SyntheticDesign {
        seed,
        params: p.clone(),
        signals,
        phases,
        truth: PowerModel { intercept, terms, budget: p.support_size.max(1) },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcdParams {
    pub n_windows: usize,
    pub window_cycles: u64,
    pub settle_cycles: u64,
    /// Clock period in nanoseconds; must be even.
    pub clock_period_ns: u64,
    /// Cycles of activity before the trigger rises.
    pub pre_trigger_cycles: u64,
    /// Cycles of activity after the trigger falls.
    pub tail_cycles: u64,
    /// Toggle the clock in the dump.
    pub emit_clock: bool,
    /// Probability that a change is preceded by a glitch at the same time.
    pub churn: f64,
}

impl Default for VcdParams {
    fn default() -> Self {
        VcdParams {
            n_windows: 1000,
            window_cycles: 100,
            settle_cycles: 500,
            clock_period_ns: 100,
            pre_trigger_cycles: 40,
            tail_cycles: 20,
            emit_clock: true,
            churn: 0.0,
        }
    }
}

impl VcdParams {
    pub fn resolution(&self) -> Femtos {
        Femtos(self.window_cycles * self.clock_period_ns * 1_000_000)
    }

    pub fn settle_delay(&self) -> Femtos {
        Femtos(self.settle_cycles * self.clock_period_ns * 1_000_000)
    }

    /// First analyzed cycle.
    pub fn start_cycle(&self) -> u64 {
        self.pre_trigger_cycles + self.settle_cycles
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedVcd {
    pub text: String,
    /// Counts computed while generating, one column pair per signal.
    pub truth: ActivityMatrix,
    /// Trigger edges in nanoseconds.
    pub window: TriggerWindow,
    /// Number of value changes written, clock and trigger included.
    pub n_events: usize,
}

fn id_code(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            return s;
        }
        i -= 1;
    }
}

fn write_value(out: &mut String, width: u32, v: Option<u64>, id: &str) {
    match (width, v) {
        (1, Some(b)) => {
            let _ = writeln!(out, "{b}{id}");
        }
        (1, None) => {
            let _ = writeln!(out, "x{id}");
        }
        (_, Some(b)) => {
            let _ = writeln!(out, "b{b:b} {id}");
        }
        (_, None) => {
            let _ = writeln!(out, "bx {id}");
        }
    }
}

fn mask(width: u32) -> u64 {
    u64::MAX >> (64 - width)
}

/// Writes the VCD for `d` and counts its activity per window.
pub fn render_vcd(d: &SyntheticDesign, vp: &VcdParams) -> Result<RenderedVcd, HarnessError> {
    if vp.n_windows < 10 {
        return Err(out_of_range("at least 10 windows are required"));
    }
    if vp.window_cycles == 0 || vp.clock_period_ns < 2 || !vp.clock_period_ns.is_multiple_of(2) {
        return Err(out_of_range("window_cycles must be positive and clock_period_ns even"));
    }
    if !(0.0..=1.0).contains(&vp.churn) {
        return Err(out_of_range("churn must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed ^ 0x5643_445f_7265_6e64);
    let n = d.signals.len();
    let period = vp.clock_period_ns;
    let c_trig = vp.pre_trigger_cycles;
    let c0 = vp.start_cycle();
    let c_end = c0 + vp.n_windows as u64 * vp.window_cycles;
    let c_last = c_end + vp.tail_cycles;

    // Phase of each analyzed cycle; pre-trigger cycles use phase 0 and the
    // tail the last phase.
    let span = (c_end - c_trig) as f64;
    let mut bounds = Vec::with_capacity(d.phases.len());
    let mut acc = 0.0;
    for ph in &d.phases {
        acc += ph.fraction;
        bounds.push(c_trig + libm::round(acc * span) as u64);
    }
    let phase_at = |c: u64| bounds.iter().position(|&b| c < b).unwrap_or(d.phases.len() - 1);

    let mut out = String::new();
    let _ = writeln!(out, "$version blink synthetic harness $end");
    let _ = writeln!(out, "$timescale 1ns $end");
    let _ = writeln!(out, "$scope module top $end");
    let (clk_id, rst_id, trg_id) = (id_code(0), id_code(1), id_code(2));
    let _ = writeln!(out, "$var wire 1 {clk_id} clk $end");
    let _ = writeln!(out, "$var wire 1 {rst_id} rst_n $end");
    let _ = writeln!(out, "$var wire 1 {trg_id} trg $end");
    let ids: Vec<String> = (0..n).map(|i| id_code(i + 3)).collect();
    let mut open: Vec<&str> = Vec::new();
    for (s, id) in d.signals.iter().zip(&ids) {
        let parts: Vec<&str> = s.hier_name.split('.').collect();
        let scopes = &parts[1..parts.len() - 1];
        let common = open.iter().zip(scopes).take_while(|(a, b)| a == b).count();
        for _ in common..open.len() {
            let _ = writeln!(out, "$upscope $end");
        }
        open.truncate(common);
        for sc in &scopes[common..] {
            let _ = writeln!(out, "$scope module {sc} $end");
            open.push(sc);
        }
        let kind = if s.role == PortRole::Internal { "reg" } else { "wire" };
        let leaf = parts[parts.len() - 1];
        if s.width == 1 {
            let _ = writeln!(out, "$var {kind} 1 {id} {leaf} $end");
        } else {
            let _ = writeln!(out, "$var {kind} {} {id} {leaf} [{}:0] $end", s.width, s.width - 1);
        }
    }
    for _ in 0..open.len() + 1 {
        let _ = writeln!(out, "$upscope $end");
    }
    let _ = writeln!(out, "$enddefinitions $end");

    let mut value: Vec<Option<u64>> = d.signals.iter().map(|s| (!s.initial_x).then(|| rng.random::<u64>() & mask(s.width))).collect();
    // Unknown signals resolve at a random cycle, possibly inside the analysis.
    let resolve_at: Vec<u64> = d.signals.iter().map(|s| if s.initial_x { rng.random_range(1..c_end) } else { 0 }).collect();
    let _ = writeln!(out, "#0");
    let _ = writeln!(out, "$dumpvars");
    let _ = writeln!(out, "{}{clk_id}", vp.emit_clock as u8);
    let _ = writeln!(out, "0{rst_id}");
    let _ = writeln!(out, "0{trg_id}");
    for i in 0..n {
        write_value(&mut out, d.signals[i].width, value[i], &ids[i]);
    }
    let _ = writeln!(out, "$end");
    let mut n_events = 3 + n;

    let mut truth = ActivityMatrix::zeros(vp.resolution(), vp.n_windows, d.features());
    let mut line = String::new();
    for c in 0..c_last {
        let t = c * period;
        line.clear();
        if c > 0 && vp.emit_clock {
            let _ = writeln!(line, "1{clk_id}");
        }
        if c == 2 {
            let _ = writeln!(line, "1{rst_id}");
        }
        if c == c_trig {
            let _ = writeln!(line, "1{trg_id}");
        }
        if c == c_end {
            let _ = writeln!(line, "0{trg_id}");
        }
        let ph = phase_at(c);
        let window = (c >= c0 && c < c_end).then(|| ((c - c0) / vp.window_cycles) as usize);
        for i in 0..n {
            let s = &d.signals[i];
            let m = mask(s.width);
            let new = match value[i] {
                None if c == resolve_at[i] => Some(rng.random::<u64>() & m),
                None => continue,
                Some(old) => {
                    let r = d.rate(i, ph);
                    if r == 0.0 || !rng.random_bool(r) {
                        continue;
                    }
                    let mut flip = 0u64;
                    while flip == 0 {
                        for b in 0..s.width {
                            if rng.random_bool(s.bit_flip_prob) {
                                flip |= 1 << b;
                            }
                        }
                    }
                    Some(old ^ flip)
                }
            };
            if vp.churn > 0.0 && rng.random_bool(vp.churn) {
                let glitch = if rng.random_bool(0.5) { None } else { Some(rng.random::<u64>() & m) };
                write_value(&mut line, s.width, glitch, &ids[i]);
            }
            write_value(&mut line, s.width, new, &ids[i]);
            if let (Some(w), Some(old), Some(v)) = (window, value[i], new) {
                let hw = (old ^ v).count_ones();
                *truth.get_mut(w, 2 * i) += hw;
                *truth.get_mut(w, 2 * i + 1) += (hw > 0) as u32;
            }
            value[i] = new;
        }
        if !line.is_empty() {
            let _ = writeln!(out, "#{t}");
            out.push_str(&line);
            n_events += line.lines().count();
        }
        if vp.emit_clock {
            let _ = writeln!(out, "#{}", t + period / 2);
            let _ = writeln!(out, "0{clk_id}");
            n_events += 1;
        }
    }
    let _ = writeln!(out, "#{}", c_last * period);

    Ok(RenderedVcd {
        text: out,
        truth,
        window: TriggerWindow { t_start: c_trig * period, t_end: c_end * period, settle_delay: vp.settle_cycles * period },
        n_events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Independent noise on every sample.
    PerSample,
    /// One noise draw per window, added to all of its samples.
    PerWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeParams {
    /// Samples per second.
    pub sample_rate: f64,
    /// Seconds.
    pub settle_delay: f64,
    pub pre_trigger_samples: usize,
    pub tail_samples: usize,
    /// Standard deviation as a fraction of the peak window power.
    pub noise_sigma: f64,
    pub noise_mode: NoiseMode,
    /// Ohms.
    pub r_shunt: f64,
    /// Volts upstream of the shunt.
    pub supply_v: f64,
    pub record_supply: bool,
    /// Peak ringing amplitude right after the trigger, as a fraction of the
    /// mean window power.
    pub ringing: f64,
    pub noise_seed: u64,
}

impl Default for ScopeParams {
    fn default() -> Self {
        ScopeParams {
            sample_rate: 10e6,
            settle_delay: 50e-6,
            pre_trigger_samples: 200,
            tail_samples: 100,
            noise_sigma: 0.0,
            noise_mode: NoiseMode::PerSample,
            r_shunt: 0.1,
            supply_v: 1.0,
            record_supply: true,
            ringing: 0.3,
            noise_seed: 0,
        }
    }
}

pub const TRIGGER_HIGH_V: f64 = 3.3;
pub const RINGING_HZ: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTrace {
    pub capture: ScopeCapture,
    /// Noiseless power per window.
    pub window_power: Vec<f64>,
    /// Sample at which the trigger first reaches its midpoint.
    pub trigger_index: usize,
}

fn whole(x: f64, what: &str) -> Result<usize, HarnessError> {
    let r = libm::round(x);
    if r < 0.0 || libm::fabs(x - r) > 1e-6 {
        return Err(out_of_range(format!("{what} = {x} is not a whole number of samples")));
    }
    Ok(r as usize)
}

/// Shunt voltage at which `(v/r)(supply − v)` equals `p`.
pub fn shunt_voltage(p: f64, r: f64, supply: f64) -> Option<f64> {
    let disc = supply * supply - 4.0 * r * p;
    (disc >= 0.0).then(|| 2.0 * p * r / (supply + libm::sqrt(disc)))
}

/// Renders a capture whose window means are the ground-truth power of
/// `acts`, plus noise.
pub fn render_power_trace(d: &SyntheticDesign, acts: &ActivityMatrix, sp: &ScopeParams) -> Result<RenderedTrace, HarnessError> {
    let resolution = acts.window_len.as_secs();
    let spw = whole(sp.sample_rate * resolution, "samples per window")?;
    if spw < 100 {
        return Err(out_of_range(format!("{spw} samples per window, at least 100 are required")));
    }
    let settle = whole(sp.sample_rate * sp.settle_delay, "settle delay")?;
    if sp.pre_trigger_samples < 2 {
        return Err(out_of_range("at least 2 pre-trigger samples are required"));
    }
    if !(sp.noise_sigma >= 0.0) || !(sp.r_shunt > 0.0) || !(sp.supply_v > 0.0) {
        return Err(out_of_range("noise, shunt and supply must be non-negative/positive"));
    }
    let window_power = d.true_power(acts);
    let peak = window_power.iter().copied().fold(0.0, f64::max);
    let mean = window_power.iter().sum::<f64>() / window_power.len() as f64;
    let dt = 1.0 / sp.sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(sp.noise_seed);
    let normal = Normal::new(0.0, sp.noise_sigma * peak).map_err(|_| out_of_range("noise sigma"))?;

    let edge = sp.pre_trigger_samples;
    let first = edge + settle;
    let end = first + spw * window_power.len();
    let total = end + sp.tail_samples;
    let idle = d.truth.intercept;
    let mut power = Vec::with_capacity(total);
    for i in 0..total {
        let p = if i < edge || i >= end {
            idle
        } else if i < first {
            let t = (i - edge) as f64 * dt;
            let decay = libm::exp(-5.0 * t / sp.settle_delay.max(dt));
            mean + sp.ringing * mean * decay * libm::sin(2.0 * core::f64::consts::PI * RINGING_HZ * t)
        } else {
            window_power[(i - first) / spw]
        };
        power.push(p);
    }
    if sp.noise_sigma > 0.0 {
        match sp.noise_mode {
            NoiseMode::PerSample => power.iter_mut().for_each(|p| *p += normal.sample(&mut rng)),
            NoiseMode::PerWindow => {
                for k in 0..window_power.len() {
                    let e = normal.sample(&mut rng);
                    power[first + k * spw..first + (k + 1) * spw].iter_mut().for_each(|p| *p += e);
                }
            }
        }
    }
    let shunt = power
        .iter()
        .map(|&p| shunt_voltage(p, sp.r_shunt, sp.supply_v))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| out_of_range("power exceeds what the supply can deliver through the shunt"))?;
    // Two-sample ramp so the midpoint crossing lands exactly on `edge`.
    let trigger = (0..total)
        .map(|i| match i {
            _ if i + 1 < edge => 0.0,
            _ if i + 1 == edge => 0.4 * TRIGGER_HIGH_V,
            _ if i == edge => 0.7 * TRIGGER_HIGH_V,
            _ if i < end => TRIGGER_HIGH_V,
            _ => 0.0,
        })
        .collect();
    Ok(RenderedTrace {
        capture: ScopeCapture {
            sample_period: dt,
            shunt,
            supply: sp.record_supply.then(|| vec![sp.supply_v; total]),
            trigger,
            capture_id: format!("synthetic-{}", d.seed),
            instrument: String::from("blink harness"),
        },
        window_power,
        trigger_index: edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_codes_are_unique() {
        let mut codes: Vec<String> = (0..20000).map(id_code).collect();
        assert_eq!(codes[0], "!");
        assert_eq!(codes[93], "~");
        assert_eq!(codes[94], "!!");
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), 20000);
    }

    #[test]
    fn design_is_deterministic_and_checked() {
        let p = DesignParams::default();
        assert_eq!(gen_design(1, &p), gen_design(1, &p));
        assert_ne!(gen_design(1, &p).unwrap().truth, gen_design(2, &p).unwrap().truth);
        let big = DesignParams { n_signals: 5000, ..p.clone() };
        assert!(matches!(gen_design(1, &big), Err(HarnessError::ParamOutOfRange(_))));
        let wide = DesignParams { max_width: 65, ..p };
        assert!(gen_design(1, &wide).is_err());
    }

    #[test]
    fn shunt_inverse() {
        let v = shunt_voltage(0.099, 0.1, 1.0).unwrap();
        assert!((v - 0.01).abs() < 1e-15);
        assert_eq!(shunt_voltage(0.0, 0.1, 1.0), Some(0.0));
        assert_eq!(shunt_voltage(3.0, 0.1, 1.0), None);
    }
}
