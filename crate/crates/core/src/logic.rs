// SPDX-License-Identifier: Apache-2.0

//! Four-state bit vectors.

use alloc::string::String;
use core::fmt;

use smallvec::{smallvec, SmallVec};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("empty value")]
    Empty,
    #[error("invalid logic character {0:?}")]
    InvalidChar(char),
    #[error("{len}-bit value does not fit a {width}-bit signal")]
    TooWide { len: usize, width: u32 },
}

/// A four-state (`0`, `1`, `x`, `z`) vector, bit 0 is the LSB.
///
/// Two bit planes are stored: `unk` marks non-binary bits and, for those,
/// `val` tells `x` (0) from `z` (1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LogicVec {
    width: u32,
    val: SmallVec<[u64; 1]>,
    unk: SmallVec<[u64; 1]>,
}

fn words(width: u32) -> usize {
    (width as usize).div_ceil(64).max(1)
}

fn top_mask(width: u32) -> u64 {
    match width % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl LogicVec {
    pub fn zeros(width: u32) -> Self {
        LogicVec { width, val: smallvec![0; words(width)], unk: smallvec![0; words(width)] }
    }

    /// All bits `x`, the state of a variable before its first assignment.
    pub fn unknown(width: u32) -> Self {
        let mut v = Self::zeros(width);
        for w in v.unk.iter_mut() {
            *w = u64::MAX;
        }
        v.trim();
        v
    }

    pub fn from_u64(width: u32, value: u64) -> Self {
        let mut v = Self::zeros(width);
        v.val[0] = value;
        v.trim();
        v
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    fn trim(&mut self) {
        let last = self.val.len() - 1;
        let m = top_mask(self.width);
        self.val[last] &= m;
        self.unk[last] &= m;
    }

    fn set_bit(&mut self, bit: usize, c: u8) -> Result<(), LogicError> {
        let (w, b) = (bit / 64, 1u64 << (bit % 64));
        match c {
            b'0' => {}
            b'1' => self.val[w] |= b,
            b'x' | b'X' => self.unk[w] |= b,
            b'z' | b'Z' => {
                self.unk[w] |= b;
                self.val[w] |= b;
            }
            other => return Err(LogicError::InvalidChar(other as char)),
        }
        Ok(())
    }

    /// Parses MSB-first VCD digits into a `width`-bit value.
    ///
    /// Shorter vectors are extended on the left: `0`/`1` extend with `0`,
    /// `x` with `x` and `z` with `z`.
    pub fn parse_vcd(width: u32, digits: &[u8]) -> Result<Self, LogicError> {
        let first = *digits.first().ok_or(LogicError::Empty)?;
        if digits.len() > width as usize {
            return Err(LogicError::TooWide { len: digits.len(), width });
        }
        let mut v = Self::zeros(width);
        let fill = match first {
            b'x' | b'X' | b'z' | b'Z' => Some(first),
            _ => None,
        };
        for (i, &c) in digits.iter().rev().enumerate() {
            v.set_bit(i, c)?;
        }
        if let Some(fill) = fill {
            for i in digits.len()..width as usize {
                v.set_bit(i, fill)?;
            }
        }
        Ok(v)
    }

    pub fn bit(&self, i: u32) -> char {
        let (w, b) = ((i / 64) as usize, 1u64 << (i % 64));
        match (self.unk[w] & b != 0, self.val[w] & b != 0) {
            (false, false) => '0',
            (false, true) => '1',
            (true, false) => 'x',
            (true, true) => 'z',
        }
    }

    pub fn is_binary(&self) -> bool {
        self.unk.iter().all(|&w| w == 0)
    }

    /// Low 64 bits when every bit is binary.
    pub fn to_u64(&self) -> Option<u64> {
        self.is_binary().then(|| self.val[0])
    }

    /// Number of bits that flip between `self` and `next` where both sides
    /// are binary. Transitions touching `x`/`z` are not toggles.
    pub fn toggles(&self, next: &LogicVec) -> u32 {
        debug_assert_eq!(self.width, next.width);
        self.val
            .iter()
            .zip(&next.val)
            .zip(self.unk.iter().zip(&next.unk))
            .map(|((a, b), (ua, ub))| ((a ^ b) & !ua & !ub).count_ones())
            .sum()
    }

    /// MSB-first string of `0 1 x z`.
    pub fn to_bit_string(&self) -> String {
        (0..self.width).rev().map(|i| self.bit(i)).collect()
    }
}

impl fmt::Debug for LogicVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}'b{}", self.width, self.to_bit_string())
    }
}
