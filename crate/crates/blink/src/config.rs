// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration.
//!
//! Precedence, highest first: command-line flags, the `BLINK_OUTPUT_ROOT`
//! environment variable (output directory only), the TOML file, built-in
//! defaults. Relative paths in the file resolve against the file's
//! directory.

use std::path::{Path, PathBuf};

use blink_core::candidates::{CandidateFilter, RoleMask};
use blink_core::model::{Normalizer, SelectionMode};
use blink_core::monitor::{DEFAULT_MAX_FRAC, DEFAULT_OUTPUT_WIDTH, DEFAULT_WEIGHT_WIDTH};
use serde::{Deserialize, Serialize};

use crate::error::{BlinkError, Result};

pub const OUTPUT_ROOT_ENV: &str = "BLINK_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Label of the design in reports.
    #[serde(default = "default_id")]
    pub id: String,
    pub inputs: Inputs,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub candidates: Candidates,
    #[serde(default)]
    pub activity: Activity,
    #[serde(default)]
    pub power: Power,
    #[serde(default)]
    pub identify: Identify,
    #[serde(default)]
    pub monitor: Monitor,
}

fn default_id() -> String {
    "design".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub vcd: PathBuf,
    /// One or more captures of the same run; several are stitched on their
    /// trigger edges, earlier files winning where they overlap.
    pub scope: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: PathBuf::from("blink-out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Output,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Candidates {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    /// Patterns naming module inputs.
    pub inputs: Vec<String>,
    /// Patterns naming module outputs.
    pub outputs: Vec<String>,
    pub roles: Vec<Role>,
    pub include_top_level: bool,
}

impl Default for Candidates {
    fn default() -> Self {
        let f = CandidateFilter::default();
        Candidates {
            include: f.include,
            exclude: f.exclude,
            inputs: f.inputs,
            outputs: f.outputs,
            roles: vec![Role::Input, Role::Output],
            include_top_level: f.include_top_level,
        }
    }
}

impl Candidates {
    pub fn filter(&self) -> CandidateFilter {
        CandidateFilter {
            include: self.include.clone(),
            exclude: self.exclude.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            roles: RoleMask {
                input: self.roles.contains(&Role::Input),
                output: self.roles.contains(&Role::Output),
                internal: self.roles.contains(&Role::Internal),
            },
            include_top_level: self.include_top_level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Activity {
    pub trigger: String,
    pub resolution_us: f64,
    pub settle_us: f64,
    pub collapse_same_timestamp: bool,
}

impl Default for Activity {
    fn default() -> Self {
        Activity { trigger: "top.trg".into(), resolution_us: 10.0, settle_us: 50.0, collapse_same_timestamp: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Power {
    pub r_shunt_ohm: f64,
    /// Constant supply in volts; when absent the capture's supply channel is used.
    pub supply_v: Option<f64>,
}

impl Default for Power {
    fn default() -> Self {
        Power { r_shunt_ohm: 0.1, supply_v: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Identify {
    pub split_ratio: f64,
    pub seed: u64,
    pub budget: usize,
    pub mode: SelectionMode,
    pub non_negative: bool,
    pub normalizer: Normalizer,
}

impl Default for Identify {
    fn default() -> Self {
        Identify {
            split_ratio: 0.8,
            seed: 1,
            budget: 10,
            mode: SelectionMode::Greedy,
            non_negative: false,
            normalizer: Normalizer::Peak,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Monitor {
    pub clock_mhz: f64,
    pub weight_width: u32,
    pub output_width: u32,
    pub max_frac_bits: u32,
    /// DUT module name; defaults to the top scope of the VCD.
    pub top_module: Option<String>,
    pub clock: String,
    pub reset_n: String,
    /// Replay the VCD through the software model of the monitor and check
    /// it against the quantized model.
    pub verify: bool,
}

impl Default for Monitor {
    fn default() -> Self {
        Monitor {
            clock_mhz: 100.0,
            weight_width: DEFAULT_WEIGHT_WIDTH,
            output_width: DEFAULT_OUTPUT_WIDTH,
            max_frac_bits: DEFAULT_MAX_FRAC,
            top_module: None,
            clock: "clk".into(),
            reset_n: "rst_n".into(),
            verify: true,
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<SelectionMode>,
    pub resolution_us: Option<f64>,
    pub settle_us: Option<f64>,
}

fn config_err(msg: impl Into<String>) -> BlinkError {
    BlinkError::Config(msg.into())
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Reads `path`, applies the environment and `ov`, resolves relative
    /// paths and validates.
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => config_err(format!("config file {} not found", path.display())),
            _ => config_err(format!("{}: {e}", path.display())),
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        cfg.apply(base, std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from), ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, base: &Path, env_output: Option<PathBuf>, ov: &Overrides) {
        let rel = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        self.inputs.vcd = rel(&self.inputs.vcd);
        self.inputs.scope = self.inputs.scope.iter().map(|p| rel(p)).collect();
        self.output.dir = match (&ov.output_dir, env_output) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => d,
            (None, None) => rel(&self.output.dir),
        };
        if let Some(k) = ov.budget {
            self.identify.budget = k;
        }
        if let Some(s) = ov.seed {
            self.identify.seed = s;
        }
        if let Some(m) = ov.mode {
            self.identify.mode = m;
        }
        if let Some(r) = ov.resolution_us {
            self.activity.resolution_us = r;
        }
        if let Some(s) = ov.settle_us {
            self.activity.settle_us = s;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(config_err(format!("{what} must be positive, got {v}"))) };
        positive(self.activity.resolution_us, "activity.resolution_us")?;
        if !(self.activity.settle_us >= 0.0 && self.activity.settle_us.is_finite()) {
            return Err(config_err("activity.settle_us must be non-negative"));
        }
        positive(self.power.r_shunt_ohm, "power.r_shunt_ohm")?;
        if let Some(v) = self.power.supply_v {
            positive(v, "power.supply_v")?;
        }
        positive(self.monitor.clock_mhz, "monitor.clock_mhz")?;
        if !(self.identify.split_ratio > 0.0 && self.identify.split_ratio < 1.0) {
            return Err(config_err(format!("identify.split_ratio must lie in (0, 1), got {}", self.identify.split_ratio)));
        }
        if self.identify.budget == 0 {
            return Err(config_err("identify.budget must be at least 1"));
        }
        if self.inputs.scope.is_empty() {
            return Err(config_err("inputs.scope lists no capture"));
        }
        for (w, what) in [(self.monitor.weight_width, "monitor.weight_width"), (self.monitor.output_width, "monitor.output_width")] {
            if !(2..=63).contains(&w) {
                return Err(config_err(format!("{what} must lie in 2..=63, got {w}")));
            }
        }
        if self.activity.trigger.is_empty() {
            return Err(config_err("activity.trigger is empty"));
        }
        self.window_cycles()?;
        Ok(())
    }

    /// Clock cycles per analysis window.
    pub fn window_cycles(&self) -> Result<u64> {
        let cycles = self.activity.resolution_us * self.monitor.clock_mhz;
        let r = cycles.round();
        if r < 1.0 || (cycles - r).abs() > 1e-6 * r {
            return Err(config_err(format!(
                "resolution {} us at {} MHz is not a whole number of cycles",
                self.activity.resolution_us, self.monitor.clock_mhz
            )));
        }
        Ok(r as u64)
    }
}
