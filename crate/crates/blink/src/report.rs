// SPDX-License-Identifier: Apache-2.0

//! Run reports: a JSON document with a versioned schema and a text table.

use std::fmt::Write as _;

use blink_core::activity::CounterType;
use blink_core::model::{Metrics, Normalizer};
use blink_core::monitor::Overhead;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

pub const REPORT_SCHEMA_ID: &str = "blink-report/1";
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseStatus {
    Ran,
    UpToDate,
}

impl PhaseStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseStatus::Ran => "ran",
            PhaseStatus::UpToDate => "up-to-date",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub name: String,
    pub status: PhaseStatus,
    /// Wall-clock time of the last run that did work.
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapRecord {
    pub signal: String,
    pub counter_type: CounterType,
}

/// One row of the summary table. Fields a run has not produced yet are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: String,
    pub hw: Option<usize>,
    pub st: Option<usize>,
    pub lut_estimate: Option<u64>,
    pub ff_estimate: Option<u64>,
    pub peak_power_w: Option<f64>,
    pub nrmse_pct: Option<f64>,
}

/// Published post-implementation figures, shown next to the estimates for
/// context only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub id: String,
    pub hw: usize,
    pub st: usize,
    pub lut_pct: f64,
    pub ff_pct: f64,
    pub kind: String,
    pub comparable: bool,
    pub note: String,
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    vec![ReferenceRow {
        id: "A10".into(),
        hw: 9,
        st: 1,
        lut_pct: 1.9,
        ff_pct: 1.4,
        kind: "hardware-measured".into(),
        comparable: false,
        note: "post-implementation utilization of a 10-counter monitor on a physical FPGA, \
               as a share of the device; not a target for the pre-synthesis estimates"
            .into(),
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool: String,
    pub tool_version: String,
    pub id: String,
    pub config: PipelineConfig,
    /// Digests of the external inputs.
    pub inputs: Vec<ArtifactRecord>,
    pub phases: Vec<PhaseRecord>,
    pub artifacts: Vec<ArtifactRecord>,
    pub summary: SummaryRow,
    pub taps: Vec<TapRecord>,
    pub metrics: Option<Metrics>,
    pub overhead: Option<Overhead>,
    pub reference: Vec<ReferenceRow>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "blink {} report for `{}`", self.tool_version, self.id);
        let _ = writeln!(t);
        let header = ["ID", "HW", "ST", "LUT~", "FF~", "Pwr(W peak)", "NRMSE"];
        let s = &self.summary;
        let row = [
            s.id.clone(),
            opt(s.hw),
            opt(s.st),
            opt(s.lut_estimate),
            opt(s.ff_estimate),
            s.peak_power_w.map_or("n/a".into(), |p| format!("{p:.4}")),
            s.nrmse_pct.map_or("n/a".into(), |p| format!("{p:.2}%")),
        ];
        let reference: Vec<[String; 7]> = self
            .reference
            .iter()
            .map(|r| {
                [
                    format!("{}*", r.id),
                    r.hw.to_string(),
                    r.st.to_string(),
                    format!("{}%", r.lut_pct),
                    format!("{}%", r.ff_pct),
                    "-".into(),
                    "-".into(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for r in std::iter::once(&row).chain(&reference) {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        table_line(&mut t, &widths, header.iter().map(|h| h.to_string()));
        table_line(&mut t, &widths, row.iter().cloned());
        for r in &reference {
            table_line(&mut t, &widths, r.iter().cloned());
        }
        let _ = writeln!(t);
        let _ = writeln!(t, "LUT~ and FF~ are pre-synthesis estimates; LUT~ is approximate.");
        for r in &self.reference {
            let _ = writeln!(t, "* {} is {} ({}).", r.id, r.kind, r.note);
        }

        if let Some(m) = &self.metrics {
            let _ = writeln!(t);
            let _ = writeln!(
                t,
                "Test split: RMSE {:.6} W, NRMSE {:.3}% of {} power, R2 {:.5}",
                m.rmse,
                m.nrmse,
                match self.config.identify.normalizer {
                    Normalizer::Peak => "peak",
                    Normalizer::Mean => "mean",
                    Normalizer::Range => "range of",
                },
                m.r2
            );
        }
        if !self.taps.is_empty() {
            let _ = writeln!(t);
            let _ = writeln!(t, "Taps:");
            for tap in &self.taps {
                let _ = writeln!(t, "  {} {}", tap.counter_type, tap.signal);
            }
        }
        let _ = writeln!(t);
        let _ = writeln!(t, "Phases:");
        for p in &self.phases {
            let secs = p.seconds.map_or("-".into(), |s| format!("{s:.3} s"));
            let _ = writeln!(t, "  {:<18} {:<11} {secs}", p.name, p.status.as_str());
        }
        let _ = writeln!(t);
        let _ = writeln!(t, "Artifacts (sha256):");
        for a in self.inputs.iter().chain(&self.artifacts) {
            let _ = writeln!(t, "  {}  {}", a.sha256, a.name);
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(t);
            let _ = writeln!(t, "Warnings:");
            for w in &self.warnings {
                let _ = writeln!(t, "  {w}");
            }
        }
        t
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or("n/a".into(), |v| v.to_string())
}

fn table_line(t: &mut String, widths: &[usize], cells: impl Iterator<Item = String>) {
    let mut line = String::new();
    for (i, (c, w)) in cells.zip(widths).enumerate() {
        if i == 0 {
            let _ = write!(line, "{c:<w$}");
        } else {
            let _ = write!(line, "  {c:>w$}");
        }
    }
    let _ = writeln!(t, "{}", line.trim_end());
}
