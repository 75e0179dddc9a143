// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

//! Monitor specs behind the frozen RTL files in `tests/golden`.

use blink_core::activity::{CounterType, FeatureDesc};
use blink_core::model::{PowerModel, Term};
use blink_core::monitor::{emit_monitor_rtl, emit_wrapper, quantize_weights, MonitorSpec, PortDecl, WrapperConfig};
use blink_core::vcd::{self, PortRole};

pub fn model(intercept: f64, terms: &[(&str, CounterType, f64)]) -> PowerModel {
    PowerModel {
        intercept,
        terms: terms
            .iter()
            .map(|&(s, c, w)| Term { feature: FeatureDesc { signal: s.into(), counter_type: c }, weight: w })
            .collect(),
        budget: terms.len().max(1),
    }
}

pub fn single_st_spec() -> MonitorSpec {
    let m = model(0.0, &[("top.cluster0.core1.state", CounterType::St, 1.0)]);
    let q = quantize_weights(&m, 16, 32, 8).unwrap();
    MonitorSpec::new(&m, q, &[8], 1000).unwrap()
}

const FIXTURE: &str = "$timescale 1ns $end
$scope module top $end
$var wire 1 ! clk $end
$var wire 1 \" rst_n $end
$var wire 4 # out_q [3:0] $end
$var wire 1 $ trg $end
$scope module cluster0 $end
$scope module core1 $end
$var reg 8 % state [7:0] $end
$upscope $end
$upscope $end
$upscope $end
$enddefinitions $end
#0
0!
";

pub fn wrapper_config() -> (WrapperConfig, vcd::SignalTable) {
    let (mut table, _) = vcd::parse_all(FIXTURE.as_bytes()).unwrap();
    for e in &mut table.entries {
        e.port_role = match e.hier_name.as_str() {
            "top.clk" | "top.rst_n" => PortRole::Input,
            "top.out_q" | "top.trg" => PortRole::Output,
            _ => PortRole::Internal,
        };
    }
    let cfg = WrapperConfig {
        top_module: "accel_top".into(),
        top_scope: "top".into(),
        ports: PortDecl::from_table(&table),
        clock: "clk".into(),
        reset_n: "rst_n".into(),
    };
    (cfg, table)
}

pub fn intercept_only_spec() -> MonitorSpec {
    let m = model(0.3, &[]);
    let q = quantize_weights(&m, 16, 32, 24).unwrap();
    MonitorSpec::new(&m, q, &[], 1000).unwrap()
}

pub fn mixed_spec() -> MonitorSpec {
    let m = model(
        0.25,
        &[
            ("top.cluster0.core1.state", CounterType::Hw, 3.1e-4),
            ("top.out_q", CounterType::St, -1.2e-3),
            ("top.trg", CounterType::Hw, 5e-3),
        ],
    );
    let q = quantize_weights(&m, 16, 32, 24).unwrap();
    MonitorSpec::new(&m, q, &[8, 4, 1], 1500).unwrap()
}

/// File name and freshly emitted text of every golden file.
pub fn cases() -> Vec<(&'static str, String)> {
    let (cfg, table) = wrapper_config();
    vec![
        ("monitor_single_st.v", emit_monitor_rtl(&single_st_spec()).unwrap()),
        ("monitor_intercept_only.v", emit_monitor_rtl(&intercept_only_spec()).unwrap()),
        ("monitor_mixed.v", emit_monitor_rtl(&mixed_spec()).unwrap()),
        ("wrapper_mixed.v", emit_wrapper(&mixed_spec(), &cfg, &table).unwrap().text),
    ]
}
