// SPDX-License-Identifier: Apache-2.0

//! Simulation time units.

use core::fmt;

use serde::{Deserialize, Serialize};

/// A duration or absolute time in femtoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Femtos(pub u64);

impl Femtos {
    pub const PER_SECOND: f64 = 1e15;

    pub fn from_micros(us: f64) -> Option<Self> {
        Self::from_secs(us * 1e-6)
    }

    /// Rounds to the nearest femtosecond. `None` for negative or non-finite input.
    pub fn from_secs(s: f64) -> Option<Self> {
        let fs = libm::round(s * Self::PER_SECOND);
        if !fs.is_finite() || fs < 0.0 || fs > u64::MAX as f64 {
            return None;
        }
        Some(Femtos(fs as u64))
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / Self::PER_SECOND
    }

    pub fn as_micros(self) -> f64 {
        self.0 as f64 / 1e9
    }

    /// Number of whole `tick`s in `self`, or `None` if it is not an exact multiple.
    pub fn in_ticks(self, tick: Femtos) -> Option<u64> {
        if tick.0 == 0 || !self.0.is_multiple_of(tick.0) {
            None
        } else {
            Some(self.0 / tick.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Fs,
    Ps,
    Ns,
    Us,
    Ms,
}

impl TimeUnit {
    pub fn femtos(self) -> u64 {
        match self {
            TimeUnit::Fs => 1,
            TimeUnit::Ps => 1_000,
            TimeUnit::Ns => 1_000_000,
            TimeUnit::Us => 1_000_000_000,
            TimeUnit::Ms => 1_000_000_000_000,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fs" => TimeUnit::Fs,
            "ps" => TimeUnit::Ps,
            "ns" => TimeUnit::Ns,
            "us" => TimeUnit::Us,
            "ms" => TimeUnit::Ms,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Fs => "fs",
            TimeUnit::Ps => "ps",
            TimeUnit::Ns => "ns",
            TimeUnit::Us => "us",
            TimeUnit::Ms => "ms",
        }
    }
}

/// VCD `$timescale`: one tick is `multiplier` × `unit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Timescale {
    pub multiplier: u32,
    pub unit: TimeUnit,
}

impl Timescale {
    pub fn new(multiplier: u32, unit: TimeUnit) -> Option<Self> {
        matches!(multiplier, 1 | 10 | 100).then_some(Timescale { multiplier, unit })
    }

    pub fn tick(self) -> Femtos {
        Femtos(self.multiplier as u64 * self.unit.femtos())
    }

    /// Parses `1ns`, `10 ps` (already joined) and the like.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let split = s.find(|c: char| !c.is_ascii_digit())?;
        let (num, unit) = s.split_at(split);
        let multiplier: u32 = num.parse().ok()?;
        Timescale::new(multiplier, TimeUnit::parse(unit.trim())?)
    }
}

impl Default for Timescale {
    fn default() -> Self {
        Timescale { multiplier: 1, unit: TimeUnit::Ns }
    }
}

impl fmt::Display for Timescale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.multiplier, self.unit.as_str())
    }
}
