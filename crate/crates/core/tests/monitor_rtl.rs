// SPDX-License-Identifier: Apache-2.0

mod common;

use std::path::PathBuf;

use blink_core::activity::CounterType;
use blink_core::monitor::{emit_monitor_rtl, emit_wrapper, quantize_weights, MonitorError, MonitorSpec, TapRoute};
use common::golden::{self, intercept_only_spec, mixed_spec, model, single_st_spec, wrapper_config};

/// Compares against `tests/golden/<name>`; set `BLINK_BLESS=1` to rewrite.
fn check_golden(name: &str, text: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("BLINK_BLESS").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(want == text, "{name} differs from golden file:\n{text}");
}

#[test]
fn single_st_tap_golden() {
    let q = single_st_spec().quantized;
    assert_eq!((q.frac_bits, q.weights[0]), (8, 256));
    check_golden("monitor_single_st.v", &emit_monitor_rtl(&single_st_spec()).unwrap());
}

#[test]
fn intercept_only_golden() {
    let text = emit_monitor_rtl(&intercept_only_spec()).unwrap();
    assert!(!text.contains("tap_"));
    check_golden("monitor_intercept_only.v", &text);
}

#[test]
fn mixed_taps_golden() {
    let spec = mixed_spec();
    check_golden("monitor_mixed.v", &emit_monitor_rtl(&spec).unwrap());
    let (cfg, table) = wrapper_config();
    let w = emit_wrapper(&spec, &cfg, &table).unwrap();
    assert_eq!(
        w.routes,
        vec![
            TapRoute::Hierarchical("u_dut.cluster0.core1.state".into()),
            TapRoute::Port("out_q".into()),
            TapRoute::Port("trg".into()),
        ]
    );
    check_golden("wrapper_mixed.v", &w.text);
}

#[test]
fn ten_tap_spec_declares_ten_ports() {
    let names: Vec<String> = (0..10).map(|i| format!("top.c.s{i}")).collect();
    let terms: Vec<(&str, CounterType, f64)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), if i < 9 { CounterType::Hw } else { CounterType::St }, 1e-4 * (i + 1) as f64))
        .collect();
    let m = model(0.2, &terms);
    let q = quantize_weights(&m, 16, 32, 24).unwrap();
    let spec = MonitorSpec::new(&m, q, &[16; 10], 1000).unwrap();
    let text = emit_monitor_rtl(&spec).unwrap();
    let ports = text.lines().filter(|l| l.trim_start().starts_with("input  wire") && l.contains("tap_")).count();
    assert_eq!(ports, 10);
}

#[test]
fn wrapper_rejects_unknown_tap() {
    let m = model(0.1, &[("top.cluster0.core9.ghost", CounterType::St, 1e-3)]);
    let q = quantize_weights(&m, 16, 32, 24).unwrap();
    let spec = MonitorSpec::new(&m, q, &[1], 100).unwrap();
    let (cfg, table) = wrapper_config();
    assert_eq!(
        emit_wrapper(&spec, &cfg, &table).unwrap_err(),
        MonitorError::UnresolvableTap("top.cluster0.core9.ghost".into())
    );
}

#[test]
fn shared_cases_match_golden_files() {
    for (name, text) in golden::cases() {
        check_golden(name, &text);
    }
}

#[test]
fn emission_is_deterministic() {
    let a = emit_monitor_rtl(&single_st_spec()).unwrap();
    let b = emit_monitor_rtl(&single_st_spec()).unwrap();
    assert_eq!(a, b);
}
