// SPDX-License-Identifier: Apache-2.0

//! Verilog-2001 emission for the monitor and its wrapper.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{MonitorError, MonitorSpec};
use crate::activity::CounterType;
use crate::vcd::{PortRole, SignalTable};

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

fn signed_lit(width: u32, v: i128) -> String {
    if v < 0 {
        format!("-{width}'sd{}", v.unsigned_abs())
    } else {
        format!("{width}'sd{v}")
    }
}

/// Balanced adder tree over `bits[lo..hi]` of `name`.
fn popcount(name: &str, lo: u32, hi: u32) -> String {
    if hi - lo == 1 {
        format!("{name}[{lo}]")
    } else {
        let mid = lo + (hi - lo).div_ceil(2);
        let l = popcount(name, lo, mid);
        let r = popcount(name, mid, hi);
        let wrap = |s: String, n: u32| if n > 1 { format!("({s})") } else { s };
        format!("{} + {}", wrap(l, mid - lo), wrap(r, hi - mid))
    }
}

/// Emits module `blink_monitor`. Output is a pure function of `spec`.
pub fn emit_monitor_rtl(spec: &MonitorSpec) -> Result<String, MonitorError> {
    spec.validate()?;
    let q = &spec.quantized;
    let aw = spec.accumulator_width();
    let ow = q.output_width;
    let wcw = spec.window_counter_width();
    let mut s = String::new();
    let w = &mut s;

    let _ = writeln!(w, "// Generated by blink. Do not edit.");
    let _ = writeln!(w, "// Window: {} cycles. Estimate LSB: 2^-{} W.", spec.window_cycles, q.frac_bits);
    let _ = writeln!(w, "module blink_monitor (");
    let _ = writeln!(w, "    input  wire clk,");
    let _ = writeln!(w, "    input  wire rst_n,");
    for (i, t) in spec.taps.iter().enumerate() {
        let _ = writeln!(w, "    input  wire {}tap_{i}, // {} ({})", range(t.width), t.hier_name, t.counter_type);
    }
    let _ = writeln!(w, "    output reg  signed [{}:0] power_estimate,", ow - 1);
    let _ = writeln!(w, "    output reg  estimate_valid");
    let _ = writeln!(w, ");");
    let _ = writeln!(w);
    let _ = writeln!(w, "    reg primed;");
    let _ = writeln!(w, "    reg {}cycle_count;", range(wcw));
    let _ = writeln!(w, "    wire window_end = cycle_count == {wcw}'d{};", spec.window_cycles - 1);

    for (i, t) in spec.taps.iter().enumerate() {
        let cw = t.counter_width;
        let _ = writeln!(w);
        let _ = writeln!(w, "    reg  {}prev_{i};", range(t.width));
        let _ = writeln!(w, "    reg  {}cnt_{i};", range(cw));
        match t.counter_type {
            CounterType::Hw => {
                let _ = writeln!(w, "    wire {}diff_{i} = prev_{i} ^ tap_{i};", range(t.width));
                let tree = if t.width == 1 { format!("diff_{i}") } else { popcount(&format!("diff_{i}"), 0, t.width) };
                let _ = writeln!(w, "    wire {}inc_{i} = {tree};", range(cw));
            }
            CounterType::St => {
                let _ = writeln!(w, "    wire {}inc_{i} = prev_{i} != tap_{i};", range(cw));
            }
        }
        let _ = writeln!(w, "    wire {}next_{i} = cnt_{i} + inc_{i};", range(cw));
    }

    let _ = writeln!(w);
    let _ = writeln!(w, "    localparam signed [{}:0] B_Q = {};", aw - 1, signed_lit(aw, q.intercept as i128));
    for (i, &wq) in q.weights.iter().enumerate() {
        let _ = writeln!(w, "    localparam signed [{}:0] W_Q_{i} = {};", aw - 1, signed_lit(aw, wq as i128));
    }
    let _ = writeln!(w, "    localparam signed [{}:0] EST_MAX = {};", aw - 1, signed_lit(aw, q.output_max() as i128));
    let _ = writeln!(w, "    localparam signed [{}:0] EST_MIN = {};", aw - 1, signed_lit(aw, q.output_min() as i128));
    let _ = write!(w, "    wire signed [{}:0] acc = B_Q", aw - 1);
    for i in 0..spec.taps.len() {
        let _ = write!(w, "\n        + W_Q_{i} * $signed({{1'b0, next_{i}}})");
    }
    let _ = writeln!(w, ";");
    let _ = writeln!(w, "    wire signed [{}:0] est_sat = acc > EST_MAX ? EST_MAX : acc < EST_MIN ? EST_MIN : acc;", aw - 1);

    let _ = writeln!(w);
    let _ = writeln!(w, "    always @(posedge clk) begin");
    let _ = writeln!(w, "        if (!rst_n) begin");
    let _ = writeln!(w, "            primed <= 1'b0;");
    let _ = writeln!(w, "            cycle_count <= {wcw}'d0;");
    for (i, t) in spec.taps.iter().enumerate() {
        let _ = writeln!(w, "            prev_{i} <= {}'d0;", t.width);
        let _ = writeln!(w, "            cnt_{i} <= {}'d0;", t.counter_width);
    }
    let _ = writeln!(w, "            power_estimate <= {ow}'sd0;");
    let _ = writeln!(w, "            estimate_valid <= 1'b0;");
    let _ = writeln!(w, "        end else begin");
    for i in 0..spec.taps.len() {
        let _ = writeln!(w, "            prev_{i} <= tap_{i};");
    }
    let _ = writeln!(w, "            estimate_valid <= 1'b0;");
    let _ = writeln!(w, "            if (!primed) begin");
    let _ = writeln!(w, "                primed <= 1'b1;");
    let _ = writeln!(w, "            end else if (window_end) begin");
    let _ = writeln!(w, "                cycle_count <= {wcw}'d0;");
    for (i, t) in spec.taps.iter().enumerate() {
        let _ = writeln!(w, "                cnt_{i} <= {}'d0;", t.counter_width);
    }
    let _ = writeln!(w, "                power_estimate <= $signed(est_sat[{}:0]);", ow - 1);
    let _ = writeln!(w, "                estimate_valid <= 1'b1;");
    let _ = writeln!(w, "            end else begin");
    let _ = writeln!(w, "                cycle_count <= cycle_count + 1'b1;");
    for i in 0..spec.taps.len() {
        let _ = writeln!(w, "                cnt_{i} <= next_{i};");
    }
    let _ = writeln!(w, "            end");
    let _ = writeln!(w, "        end");
    let _ = writeln!(w, "    end");
    let _ = writeln!(w);
    let _ = writeln!(w, "endmodule");
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub role: PortRole,
    pub width: u32,
}

impl PortDecl {
    /// Top-level ports of `table`: signals directly under the top scope whose
    /// role is input or output.
    pub fn from_table(table: &SignalTable) -> Vec<PortDecl> {
        let mut ports: Vec<PortDecl> = table
            .entries
            .iter()
            .filter(|e| e.depth() == 1 && e.port_role != PortRole::Internal)
            .map(|e| PortDecl {
                name: e.hier_name.rsplit('.').next().unwrap_or_default().into(),
                role: e.port_role,
                width: e.width,
            })
            .collect();
        ports.dedup_by(|a, b| a.name == b.name);
        ports
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrapperConfig {
    pub top_module: String,
    /// Name of the top scope in the simulation trace, e.g. `top`.
    pub top_scope: String,
    pub ports: Vec<PortDecl>,
    pub clock: String,
    pub reset_n: String,
}

/// How a tap reaches the monitor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "lowercase")]
pub enum TapRoute {
    Port(String),
    Hierarchical(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrapperRtl {
    pub text: String,
    pub routes: Vec<TapRoute>,
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic() || f == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '$')
}

fn route(spec_tap: &str, cfg: &WrapperConfig, known: &SignalTable) -> Result<TapRoute, MonitorError> {
    let unresolved = || MonitorError::UnresolvableTap(spec_tap.into());
    let rel = spec_tap
        .strip_prefix(cfg.top_scope.as_str())
        .and_then(|r| r.strip_prefix('.'))
        .ok_or_else(unresolved)?;
    known.find(spec_tap).ok_or_else(unresolved)?;
    if cfg.ports.iter().any(|p| p.name == rel && p.role != PortRole::Internal) {
        return Ok(TapRoute::Port(rel.into()));
    }
    Ok(TapRoute::Hierarchical(format!("u_dut.{rel}")))
}

/// Emits module `blink_wrapper`: the unmodified DUT, the monitor, and the
/// DUT's ports plus `power_estimate` and `estimate_valid`.
pub fn emit_wrapper(spec: &MonitorSpec, cfg: &WrapperConfig, known: &SignalTable) -> Result<WrapperRtl, MonitorError> {
    spec.validate()?;
    for name in [&cfg.top_module, &cfg.clock, &cfg.reset_n].into_iter().chain(cfg.ports.iter().map(|p| &p.name)) {
        if !is_ident(name) {
            return Err(MonitorError::BadIdentifier(name.clone()));
        }
    }
    for c in [&cfg.clock, &cfg.reset_n] {
        if !cfg.ports.iter().any(|p| &p.name == c && p.role == PortRole::Input) {
            return Err(MonitorError::UnresolvableTap(c.clone()));
        }
    }
    let routes = spec.taps.iter().map(|t| route(&t.hier_name, cfg, known)).collect::<Result<Vec<_>, _>>()?;
    let ow = spec.quantized.output_width;

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "// Generated by blink. Do not edit.");
    let hier: Vec<&String> = routes
        .iter()
        .filter_map(|r| match r {
            TapRoute::Hierarchical(p) => Some(p),
            TapRoute::Port(_) => None,
        })
        .collect();
    if !hier.is_empty() {
        let _ = writeln!(w, "// Hierarchical references into the DUT:");
        for p in &hier {
            let _ = writeln!(w, "//   {p}");
        }
    }
    let _ = writeln!(w, "module blink_wrapper (");
    for p in &cfg.ports {
        let dir = if p.role == PortRole::Input { "input " } else { "output" };
        let _ = writeln!(w, "    {dir} wire {}{},", range(p.width), p.name);
    }
    let _ = writeln!(w, "    output wire signed [{}:0] power_estimate,", ow - 1);
    let _ = writeln!(w, "    output wire estimate_valid");
    let _ = writeln!(w, ");");
    let _ = writeln!(w);
    let _ = writeln!(w, "    {} u_dut (", cfg.top_module);
    for (i, p) in cfg.ports.iter().enumerate() {
        let sep = if i + 1 == cfg.ports.len() { "" } else { "," };
        let _ = writeln!(w, "        .{0}({0}){sep}", p.name);
    }
    let _ = writeln!(w, "    );");
    let _ = writeln!(w);
    for (i, (t, r)) in spec.taps.iter().zip(&routes).enumerate() {
        let src = match r {
            TapRoute::Port(p) | TapRoute::Hierarchical(p) => p,
        };
        let _ = writeln!(w, "    wire {}blink_tap_{i} = {src};", range(t.width));
    }
    if !spec.taps.is_empty() {
        let _ = writeln!(w);
    }
    let _ = writeln!(w, "    blink_monitor u_monitor (");
    let _ = writeln!(w, "        .clk({}),", cfg.clock);
    let _ = writeln!(w, "        .rst_n({}),", cfg.reset_n);
    for i in 0..spec.taps.len() {
        let _ = writeln!(w, "        .tap_{i}(blink_tap_{i}),");
    }
    let _ = writeln!(w, "        .power_estimate(power_estimate),");
    let _ = writeln!(w, "        .estimate_valid(estimate_valid)");
    let _ = writeln!(w, "    );");
    let _ = writeln!(w);
    let _ = writeln!(w, "endmodule");
    Ok(WrapperRtl { text: s, routes })
}
