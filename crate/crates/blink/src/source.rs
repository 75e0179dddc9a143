// SPDX-License-Identifier: Apache-2.0

//! Streaming VCD input from files.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use blink_core::vcd::{self, lexer::Source, EventStream, SignalTable};

use crate::error::{BlinkError, Result};

/// Adapts any [`Read`] to the core parser's byte source.
pub struct ReadSource<R>(pub R);

impl<R: Read> Source for ReadSource<R> {
    type Error = std::io::Error;

    fn read(&mut self, buf: &mut [u8]) -> std::result::Result<usize, Self::Error> {
        loop {
            match self.0.read(buf) {
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                r => return r,
            }
        }
    }
}

pub type FileEvents = EventStream<ReadSource<BufReader<File>>>;

/// Opens `path` and parses its header.
pub fn open_vcd(path: &Path) -> Result<(SignalTable, FileEvents)> {
    let f = File::open(path).map_err(|e| BlinkError::io(path, e))?;
    vcd::open(ReadSource(BufReader::with_capacity(1 << 16, f))).map_err(|e| BlinkError::data("vcd", format!("{}: {e}", path.display())))
}
