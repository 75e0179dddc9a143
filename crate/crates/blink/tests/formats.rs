// SPDX-License-Identifier: Apache-2.0

use blink::container::{read_activity, read_power, write_activity, write_power};
use blink::scope_csv::{read_scope_csv, write_scope_csv};
use blink_core::harness::{gen_design, render_vcd, DesignParams, VcdParams};
use blink_core::vcd::{self, SignalTable};
use blink_core::{ScopeCapture, WindowedPower};

#[test]
fn million_row_capture_round_trips() {
    let n = 1_000_000;
    let cap = ScopeCapture {
        sample_period: 1e-7,
        shunt: (0..n).map(|i| 0.05 + 1e-3 * ((i as f64) * 0.37).sin()).collect(),
        supply: Some((0..n).map(|i| 1.0 + 1e-4 * ((i % 97) as f64)).collect()),
        trigger: (0..n).map(|i| if (1000..n - 1000).contains(&i) { 3.3 } else { 0.0 }).collect(),
        capture_id: "rt".into(),
        instrument: "test".into(),
    };
    let mut buf = Vec::new();
    write_scope_csv(&cap, &mut buf).unwrap();
    let back = read_scope_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), n);
    assert!((back.sample_period - cap.sample_period).abs() <= 1e-12 * cap.sample_period);
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * y.abs().max(1.0));
    assert!(close(&back.shunt, &cap.shunt));
    assert!(close(&back.trigger, &cap.trigger));
    assert!(close(back.supply.as_ref().unwrap(), cap.supply.as_ref().unwrap()));
    assert_eq!((back.capture_id, back.instrument), (cap.capture_id, cap.instrument));
}

#[test]
fn signal_table_round_trips_through_json() {
    let d = gen_design(12, &DesignParams { initial_x_fraction: 0.2, ..DesignParams::default() }).unwrap();
    let v = render_vcd(&d, &VcdParams { n_windows: 10, ..VcdParams::default() }).unwrap();
    let (table, _) = vcd::open(v.text.as_bytes()).unwrap();
    let text = serde_json::to_string(&table).unwrap();
    let back: SignalTable = serde_json::from_str(&text).unwrap();
    assert_eq!(back, table);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn containers_round_trip_harness_activity() {
    let d = gen_design(13, &DesignParams::default()).unwrap();
    let v = render_vcd(&d, &VcdParams { n_windows: 50, ..VcdParams::default() }).unwrap();
    let mut buf = Vec::new();
    write_activity(&v.truth, &mut buf).unwrap();
    assert_eq!(read_activity(buf.as_slice()).unwrap(), v.truth);

    let p = WindowedPower { window_len: 1e-5, values: d.true_power(&v.truth) };
    let mut buf = Vec::new();
    write_power(&p, &mut buf).unwrap();
    assert_eq!(read_power(buf.as_slice()).unwrap(), p);
}
