// SPDX-License-Identifier: Apache-2.0

//! Streaming reader for four-state IEEE 1364 value change dumps.
//!
//! [`parse_header`] consumes everything up to `$enddefinitions $end` and
//! returns the [`SignalTable`]. [`EventStream`] then yields one
//! [`ValueEvent`] per scalar or vector change without buffering the body.

pub mod events;
pub mod header;
pub mod lexer;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{LogicError, LogicVec};
use crate::time::Timescale;

pub use events::{stream_events, EventStream};
pub use header::parse_header;
pub use lexer::{Lexer, Source, Token};

/// Index of a signal inside its [`SignalTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalId(pub u32);

impl SignalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Wire,
    Reg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    Input,
    Output,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalEntry {
    pub id_code: String,
    pub hier_name: String,
    pub width: u32,
    pub kind: VarKind,
    pub port_role: PortRole,
}

impl SignalEntry {
    /// Hierarchical path of the enclosing scope (`top.core` for `top.core.x`).
    pub fn scope(&self) -> &str {
        self.hier_name.rsplit_once('.').map_or("", |(s, _)| s)
    }

    /// Number of scope levels above the signal.
    pub fn depth(&self) -> usize {
        self.hier_name.matches('.').count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalTable {
    pub entries: Vec<SignalEntry>,
    pub timescale: Timescale,
    pub top_scope: String,
}

impl SignalTable {
    pub fn get(&self, id: SignalId) -> &SignalEntry {
        &self.entries[id.index()]
    }

    pub fn find(&self, hier_name: &str) -> Option<(SignalId, &SignalEntry)> {
        self.entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.hier_name == hier_name)
            .map(|(i, e)| (SignalId(i as u32), e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One value change at an absolute time in timescale ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueEvent {
    pub time: u64,
    pub signal: SignalId,
    pub value: LogicVec,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeaderErrorKind {
    #[error("missing $enddefinitions")]
    MissingEndDefinitions,
    #[error("duplicate id-code")]
    DuplicateIdCode,
    #[error("duplicate hierarchical name")]
    DuplicateName,
    #[error("unknown timescale")]
    UnknownTimescale,
    #[error("real variables are not supported")]
    RealVariable,
    #[error("invalid variable width")]
    BadWidth,
    #[error("$upscope without matching $scope")]
    UnbalancedScope,
    #[error("{0}")]
    Syntax(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BodyErrorKind {
    #[error("undeclared id-code")]
    UndeclaredId,
    #[error("time goes backwards from {prev} to {next}")]
    TimeBackwards { prev: u64, next: u64 },
    #[error("bad timestamp")]
    BadTimestamp,
    #[error("bad value: {0}")]
    BadValue(LogicError),
    #[error("real value changes are not supported")]
    RealValue,
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unrecognized token")]
    Syntax,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcdError {
    #[error("malformed VCD header at byte {offset}: {kind} (token `{token}`)")]
    MalformedHeader { offset: u64, token: String, kind: HeaderErrorKind },
    #[error("malformed VCD body at byte {offset}: {kind} (token `{token}`)")]
    MalformedBody { offset: u64, token: String, kind: BodyErrorKind },
    #[error("read error: {0}")]
    Source(String),
}

fn lossy(text: &[u8]) -> String {
    String::from_utf8_lossy(text).into_owned()
}

/// Parses the header and returns the table with a stream positioned at the
/// first body token.
pub fn open<S: Source>(src: S) -> Result<(SignalTable, EventStream<S>), VcdError> {
    let mut lexer = Lexer::new(src);
    let table = parse_header(&mut lexer)?;
    let stream = stream_events(lexer, &table);
    Ok((table, stream))
}

/// Reads a whole in-memory VCD into a table and an event vector.
pub fn parse_all(text: &[u8]) -> Result<(SignalTable, Vec<ValueEvent>), VcdError> {
    let (table, stream) = open(text)?;
    let events = stream.collect::<Result<Vec<_>, _>>()?;
    Ok((table, events))
}
