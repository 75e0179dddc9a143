// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

pub mod golden;

use blink_core::activity::{detect_trigger_window, window_activity, ActivityMatrix, ActivityOptions};
use blink_core::candidates::{resolve_candidates, CandidateFilter, RoleMask};
use blink_core::harness::{gen_design, render_vcd, DesignParams, RenderedVcd, SyntheticDesign, VcdParams};
use blink_core::vcd::{self, SignalTable};

pub fn all_roles() -> CandidateFilter {
    CandidateFilter {
        inputs: vec!["*.in_*".into()],
        outputs: vec!["*.out_*".into()],
        roles: RoleMask { input: true, output: true, internal: true },
        ..CandidateFilter::default()
    }
}

pub struct Run {
    pub design: SyntheticDesign,
    pub vcd: RenderedVcd,
    pub table: SignalTable,
    pub acts: ActivityMatrix,
}

/// Generates a design, renders it and extracts activity with the streaming parser.
pub fn extract(seed: u64, dp: &DesignParams, vp: &VcdParams) -> Run {
    let design = gen_design(seed, dp).unwrap();
    let vcd = render_vcd(&design, vp).unwrap();
    let (mut table, _) = vcd::open(vcd.text.as_bytes()).unwrap();
    let filter = all_roles();
    filter.classify(&mut table);
    let (_, events) = vcd::open(vcd.text.as_bytes()).unwrap();
    let win = detect_trigger_window(events, &table, "top.trg", vp.settle_delay()).unwrap();
    assert_eq!(win, vcd.window);
    let cands = resolve_candidates(&table, &filter).unwrap();
    let (_, events) = vcd::open(vcd.text.as_bytes()).unwrap();
    let acts = window_activity(events, &table, &cands, &win, vp.resolution(), ActivityOptions::default()).unwrap();
    Run { design, vcd, table, acts }
}
