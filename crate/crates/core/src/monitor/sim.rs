// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate model of the emitted `blink_monitor`.
//!
//! Reset is released one cycle before `start_cycle`. That first cycle only
//! loads the history registers; from `start_cycle` on, every cycle adds the
//! toggles between the previous and current tap values to the counters, and
//! every `window_cycles` cycles the estimate register is updated and the
//! counters clear.

use alloc::vec;
use alloc::vec::Vec;

use super::MonitorSpec;
use crate::activity::{CounterType, Toggle};
use crate::logic::LogicVec;
use crate::vcd::{SignalTable, ValueEvent, VcdError};

/// A tap taking `value` during clock cycle `cycle`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleEvent {
    pub cycle: u64,
    pub tap: usize,
    pub value: LogicVec,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MonitorRun {
    /// Estimate register after each window.
    pub estimates: Vec<i64>,
    /// Set for taps whose counter wrapped at least once.
    pub counter_overflow: Vec<bool>,
    /// Set for windows whose estimate was clipped.
    pub saturated: Vec<bool>,
}

/// Maps value changes of the monitored taps to clock cycles,
/// `cycle = floor(time / cycle_ticks)`. Other signals are skipped.
pub fn events_to_cycles<I>(
    spec: &MonitorSpec,
    table: &SignalTable,
    cycle_ticks: u64,
    events: I,
) -> impl Iterator<Item = Result<CycleEvent, VcdError>>
where
    I: IntoIterator<Item = Result<ValueEvent, VcdError>>,
{
    let mut tap_of = vec![None; table.len()];
    for (i, t) in spec.taps.iter().enumerate() {
        if let Some((id, _)) = table.find(&t.hier_name) {
            tap_of[id.index()] = Some(i);
        }
    }
    events.into_iter().filter_map(move |ev| match ev {
        Ok(ev) => tap_of[ev.signal.index()].map(|tap| Ok(CycleEvent { cycle: ev.time / cycle_ticks, tap, value: ev.value })),
        Err(e) => Some(Err(e)),
    })
}

/// Runs the monitor for `n_windows` windows starting at `start_cycle`.
/// Events must be ordered by cycle; taps start out unknown.
pub fn simulate_monitor<I>(spec: &MonitorSpec, start_cycle: u64, n_windows: usize, events: I) -> MonitorRun
where
    I: IntoIterator<Item = CycleEvent>,
{
    let n = spec.taps.len();
    let q = &spec.quantized;
    let mut cur: Vec<LogicVec> = spec.taps.iter().map(|t| LogicVec::unknown(t.width)).collect();
    let mut prev = cur.clone();
    let mut cnt = vec![0u64; n];
    let mut run = MonitorRun { counter_overflow: vec![false; n], ..Default::default() };
    let masks: Vec<u64> = spec.taps.iter().map(|t| u64::MAX >> (64 - t.counter_width)).collect();

    let mut events = events.into_iter().peekable();
    let prime = start_cycle.checked_sub(1);
    let end = start_cycle + n_windows as u64 * spec.window_cycles;
    let mut cycle = prime.unwrap_or(0);

    // Everything before the priming cycle only sets the tap values.
    while let Some(ev) = events.next_if(|e| prime.is_some_and(|p| e.cycle < p)) {
        cur[ev.tap] = ev.value;
    }
    if prime.is_some() {
        while let Some(ev) = events.next_if(|e| e.cycle == cycle) {
            cur[ev.tap] = ev.value;
        }
        prev.clone_from(&cur);
        cycle += 1;
    }

    let mut counts = vec![0u32; n];
    let mut in_window = 0u64;
    while cycle < end {
        while let Some(ev) = events.next_if(|e| e.cycle <= cycle) {
            cur[ev.tap] = ev.value;
        }
        for i in 0..n {
            let tg = Toggle::between(&prev[i], &cur[i]);
            let inc = match spec.taps[i].counter_type {
                CounterType::Hw => tg.hw,
                CounterType::St => tg.st,
            } as u64;
            let next = cnt[i] + inc;
            if next > masks[i] {
                run.counter_overflow[i] = true;
            }
            cnt[i] = next & masks[i];
            prev[i].clone_from(&cur[i]);
        }
        in_window += 1;
        if in_window == spec.window_cycles {
            for (c, k) in counts.iter_mut().zip(&mut cnt) {
                *c = u32::try_from(*k).unwrap_or(u32::MAX);
                *k = 0;
            }
            let acc = q.accumulate(&counts);
            let est = q.apply(&counts);
            run.saturated.push(acc != est as i128);
            run.estimates.push(est);
            in_window = 0;
        }
        cycle += 1;
    }
    run
}
