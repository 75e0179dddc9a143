// SPDX-License-Identifier: Apache-2.0

//! File formats, configuration and the phase pipeline around `blink-core`.

pub mod artifacts;
pub mod config;
pub mod container;
pub mod error;
pub mod fixture;
pub mod pipeline;
pub mod report;
pub mod scope_csv;
pub mod source;

pub use config::{Overrides, PipelineConfig};
pub use error::{BlinkError, ExitCode};
pub use pipeline::{Phase, Pipeline, RunOptions, RunSummary};
