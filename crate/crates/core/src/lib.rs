// SPDX-License-Identifier: Apache-2.0

//! Core algorithms for building run-time power monitors from behavioral
//! simulation traces and measured power.
//!
//! The pipeline is:
//!
//! 1. [`vcd`]: stream a four-state VCD into a [`vcd::SignalTable`] and an
//!    ordered stream of [`vcd::ValueEvent`]s.
//! 2. [`activity`]: locate the trigger window and count per-window
//!    Hamming-weight and single-toggle activity for each candidate signal.
//! 3. [`power`]: turn shunt-resistor captures into power and average them
//!    over the same windows.
//! 4. [`model`]: identify a budgeted linear power model and score it.
//! 5. [`monitor`]: quantize the model, emit Verilog for the monitor and a
//!    cycle-accurate software model of that hardware.
//!
//! [`harness`] generates synthetic designs, traces and ground truth so the
//! whole flow can be checked without hardware.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and everything touching the filesystem live in the `blink` crate.

#![no_std]
// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod activity;
pub mod candidates;
pub mod glob;
pub mod harness;
pub mod logic;
pub mod model;
pub mod monitor;
pub mod power;
pub mod time;
pub mod vcd;

pub use activity::{ActivityMatrix, CounterType, FeatureDesc, TriggerWindow};
pub use candidates::CandidateFilter;
pub use logic::LogicVec;
pub use model::{Dataset, Metrics, PowerModel};
pub use monitor::{MonitorSpec, QuantizedModel};
pub use power::{PowerTrace, ScopeCapture, WindowedPower};
pub use time::{Femtos, Timescale, TimeUnit};
pub use vcd::{SignalEntry, SignalTable, ValueEvent};
