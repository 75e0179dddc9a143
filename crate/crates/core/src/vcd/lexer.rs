// SPDX-License-Identifier: Apache-2.0

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::convert::Infallible;
use core::fmt;

use super::VcdError;

/// A pull-based byte source, the `no_std` stand-in for `std::io::Read`.
pub trait Source {
    type Error: fmt::Display;

    /// Fills `buf` with up to `buf.len()` bytes, returning 0 at end of input.
    fn read(&mut self, buf: &mut [u8]) -> Result<usize, Self::Error>;
}

impl Source for &[u8] {
    type Error = Infallible;

    fn read(&mut self, buf: &mut [u8]) -> Result<usize, Infallible> {
        let n = buf.len().min(self.len());
        buf[..n].copy_from_slice(&self[..n]);
        *self = &self[n..];
        Ok(n)
    }
}

/// A whitespace-delimited token and the absolute byte offset it starts at.
#[derive(Debug, Clone, Copy)]
pub struct Token<'a> {
    pub offset: u64,
    pub text: &'a [u8],
}

/// Splits a byte source into whitespace-separated tokens with a fixed-size
/// read buffer, so memory use does not depend on the input length.
pub struct Lexer<S> {
    src: S,
    buf: Vec<u8>,
    pos: usize,
    len: usize,
    base: u64,
    eof: bool,
    tok: Vec<u8>,
}

const DEFAULT_CHUNK: usize = 64 * 1024;

impl<S: Source> Lexer<S> {
    pub fn new(src: S) -> Self {
        Self::with_chunk_size(src, DEFAULT_CHUNK)
    }

    pub fn with_chunk_size(src: S, chunk: usize) -> Self {
        Lexer { src, buf: vec![0; chunk.max(1)], pos: 0, len: 0, base: 0, eof: false, tok: Vec::new() }
    }

    /// Absolute offset of the next unread byte.
    pub fn offset(&self) -> u64 {
        self.base + self.pos as u64
    }

    fn refill(&mut self) -> Result<bool, VcdError> {
        if self.eof {
            return Ok(false);
        }
        self.base += self.len as u64;
        self.pos = 0;
        self.len = self.src.read(&mut self.buf).map_err(|e| VcdError::Source(e.to_string()))?;
        if self.len == 0 {
            self.eof = true;
        }
        Ok(!self.eof)
    }

    pub fn next_token(&mut self) -> Result<Option<Token<'_>>, VcdError> {
        loop {
            while self.pos < self.len && self.buf[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.len {
                break;
            }
            if !self.refill()? {
                return Ok(None);
            }
        }
        let offset = self.offset();
        let start = self.pos;
        while self.pos < self.len && !self.buf[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos < self.len {
            // Common case: the token sits inside the current chunk.
            return Ok(Some(Token { offset, text: &self.buf[start..self.pos] }));
        }
        self.tok.clear();
        self.tok.extend_from_slice(&self.buf[start..self.pos]);
        while self.refill()? {
            let s = self.pos;
            while self.pos < self.len && !self.buf[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            self.tok.extend_from_slice(&self.buf[s..self.pos]);
            if self.pos < self.len {
                break;
            }
        }
        Ok(Some(Token { offset, text: &self.tok }))
    }
}
