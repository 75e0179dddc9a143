// SPDX-License-Identifier: Apache-2.0

//! Synthetic run directories: a VCD, a scope capture, the ground truth and
//! a ready-to-run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use blink_core::harness::{
    gen_design, render_power_trace, render_vcd, DesignParams, NoiseMode, ScopeParams, SyntheticDesign, VcdParams,
};
use blink_core::PowerModel;
use serde::{Deserialize, Serialize};

use crate::config::{Activity, Candidates, Identify, Inputs, Monitor, Output, PipelineConfig, Power, Role};
use crate::error::{BlinkError, Result};
use crate::pipeline::write_atomic;
use crate::scope_csv::write_scope_csv;

pub const FIXTURE_VCD: &str = "design.vcd";
pub const FIXTURE_SCOPE: &str = "scope.csv";
pub const FIXTURE_TRUTH: &str = "truth.json";
pub const FIXTURE_CONFIG: &str = "blink.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    pub design: DesignParams,
    pub vcd: VcdParams,
    pub scope: ScopeParams,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            design: DesignParams::default(),
            vcd: VcdParams { n_windows: 400, ..VcdParams::default() },
            scope: ScopeParams { noise_sigma: 0.02, noise_mode: NoiseMode::PerWindow, ..ScopeParams::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub params: FixtureParams,
    pub model: PowerModel,
    /// Noiseless power of every analysis window, in watts.
    pub window_power_w: Vec<f64>,
}

pub struct Fixture {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub design: SyntheticDesign,
}

/// Configuration matching the harness conventions for `p`.
pub fn fixture_config(seed: u64, p: &FixtureParams) -> PipelineConfig {
    let period_ns = p.vcd.clock_period_ns as f64;
    PipelineConfig {
        id: format!("fixture-{seed}"),
        inputs: Inputs { vcd: FIXTURE_VCD.into(), scope: vec![FIXTURE_SCOPE.into()] },
        output: Output { dir: "out".into() },
        candidates: Candidates {
            inputs: vec!["*.in_*".into(), "top.clk".into(), "top.rst_n".into()],
            outputs: vec!["*.out_*".into(), "top.trg".into()],
            roles: vec![Role::Input, Role::Output, Role::Internal],
            ..Candidates::default()
        },
        activity: Activity {
            trigger: "top.trg".into(),
            resolution_us: p.vcd.window_cycles as f64 * period_ns * 1e-3,
            settle_us: p.vcd.settle_cycles as f64 * period_ns * 1e-3,
            collapse_same_timestamp: true,
        },
        power: Power { r_shunt_ohm: p.scope.r_shunt, supply_v: (!p.scope.record_supply).then_some(p.scope.supply_v) },
        identify: Identify { budget: p.design.support_size.max(1), ..Identify::default() },
        monitor: Monitor { clock_mhz: 1e3 / period_ns, top_module: Some("top".into()), ..Monitor::default() },
    }
}

/// Writes a fixture for `seed` into `dir`. The same seed and parameters
/// always produce the same bytes.
pub fn gen_fixture(seed: u64, p: &FixtureParams, dir: &Path) -> Result<Fixture> {
    let harness = |e: blink_core::harness::HarnessError| BlinkError::Config(e.to_string());
    let design = gen_design(seed, &p.design).map_err(harness)?;
    let vcd = render_vcd(&design, &p.vcd).map_err(harness)?;
    let scope = ScopeParams { noise_seed: seed, ..p.scope.clone() };
    let trace = render_power_trace(&design, &vcd.truth, &scope).map_err(harness)?;

    fs::create_dir_all(dir).map_err(|e| BlinkError::Io { path: dir.into(), source: e })?;
    write_atomic(dir, FIXTURE_VCD, vcd.text.as_bytes())?;
    let mut csv = Vec::new();
    write_scope_csv(&trace.capture, &mut csv).map_err(|e| BlinkError::Io { path: dir.join(FIXTURE_SCOPE), source: e })?;
    write_atomic(dir, FIXTURE_SCOPE, &csv)?;
    let truth = Truth {
        seed,
        params: FixtureParams { scope, ..p.clone() },
        model: design.truth.clone(),
        window_power_w: trace.window_power,
    };
    let mut json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    json.push('\n');
    write_atomic(dir, FIXTURE_TRUTH, json.as_bytes())?;
    let cfg = toml::to_string(&fixture_config(seed, p)).map_err(|e| BlinkError::Other(e.to_string()))?;
    write_atomic(dir, FIXTURE_CONFIG, cfg.as_bytes())?;
    Ok(Fixture { dir: dir.into(), config: dir.join(FIXTURE_CONFIG), design })
}
