// SPDX-License-Identifier: Apache-2.0

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use smallvec::SmallVec;

use super::{lossy, BodyErrorKind, Lexer, SignalId, SignalTable, Source, ValueEvent, VcdError};
use crate::logic::LogicVec;

/// Iterator over the value changes of a VCD body.
///
/// Times are absolute, in timescale ticks. The stream stops after the first
/// error.
pub struct EventStream<S> {
    lexer: Lexer<S>,
    ids: BTreeMap<Vec<u8>, SignalId>,
    widths: Vec<u32>,
    time: u64,
    failed: bool,
}

/// Wraps a lexer already positioned after the header.
pub fn stream_events<S: Source>(lexer: Lexer<S>, table: &SignalTable) -> EventStream<S> {
    let ids = table
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id_code.as_bytes().to_vec(), SignalId(i as u32)))
        .collect();
    let widths = table.entries.iter().map(|e| e.width).collect();
    EventStream { lexer, ids, widths, time: 0, failed: false }
}

fn err(offset: u64, token: &[u8], kind: BodyErrorKind) -> VcdError {
    VcdError::MalformedBody { offset, token: lossy(token), kind }
}

impl<S: Source> EventStream<S> {
    /// Time of the most recent `#` timestamp.
    pub fn current_time(&self) -> u64 {
        self.time
    }

    fn lookup(&self, offset: u64, id: &[u8]) -> Result<SignalId, VcdError> {
        self.ids.get(id).copied().ok_or_else(|| err(offset, id, BodyErrorKind::UndeclaredId))
    }

    fn value(&self, offset: u64, id: SignalId, digits: &[u8]) -> Result<LogicVec, VcdError> {
        LogicVec::parse_vcd(self.widths[id.index()], digits)
            .map_err(|e| err(offset, digits, BodyErrorKind::BadValue(e)))
    }

    fn advance(&mut self) -> Result<Option<ValueEvent>, VcdError> {
        loop {
            let Some(tok) = self.lexer.next_token()? else {
                return Ok(None);
            };
            let offset = tok.offset;
            let text: SmallVec<[u8; 32]> = SmallVec::from_slice(tok.text);
            let (first, rest) = (text[0], &text[1..]);
            match first {
                b'#' => {
                    let t: u64 = core::str::from_utf8(rest)
                        .ok()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(offset, &text, BodyErrorKind::BadTimestamp))?;
                    if t < self.time {
                        return Err(err(offset, &text, BodyErrorKind::TimeBackwards { prev: self.time, next: t }));
                    }
                    self.time = t;
                }
                b'0' | b'1' | b'x' | b'X' | b'z' | b'Z' => {
                    if rest.is_empty() {
                        return Err(err(offset, &text, BodyErrorKind::Syntax));
                    }
                    let id = self.lookup(offset, rest)?;
                    let value = self.value(offset, id, &[first])?;
                    return Ok(Some(ValueEvent { time: self.time, signal: id, value }));
                }
                b'b' | b'B' => {
                    let digits: SmallVec<[u8; 64]> = SmallVec::from_slice(rest);
                    let at = self.lexer.offset();
                    let id_tok = self.lexer.next_token()?.ok_or_else(|| err(at, b"", BodyErrorKind::UnexpectedEof))?;
                    let (id_off, id_text) = (id_tok.offset, SmallVec::<[u8; 32]>::from_slice(id_tok.text));
                    let id = self.lookup(id_off, &id_text)?;
                    let value = self.value(offset, id, &digits)?;
                    return Ok(Some(ValueEvent { time: self.time, signal: id, value }));
                }
                b'r' | b'R' => return Err(err(offset, &text, BodyErrorKind::RealValue)),
                b'$' => {
                    if &text[..] == b"$comment" {
                        loop {
                            let at = self.lexer.offset();
                            match self.lexer.next_token()? {
                                None => return Err(err(at, b"", BodyErrorKind::UnexpectedEof)),
                                Some(t) if t.text == b"$end" => break,
                                Some(_) => {}
                            }
                        }
                    }
                    // $dumpvars / $dumpall / $dumpon / $dumpoff / $end only bracket changes.
                }
                _ => return Err(err(offset, &text, BodyErrorKind::Syntax)),
            }
        }
    }
}

impl<S: Source> Iterator for EventStream<S> {
    type Item = Result<ValueEvent, VcdError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.advance() {
            Ok(Some(ev)) => Some(Ok(ev)),
            Ok(None) => None,
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    const HEAD: &str = "$timescale 1ns $end $scope module top $end $var wire 1 ! a $end \
                        $var reg 8 \" d $end $upscope $end $enddefinitions $end\n";

    fn events(body: &str) -> Result<Vec<ValueEvent>, VcdError> {
        let text = alloc::format!("{HEAD}{body}");
        parse_all(text.as_bytes()).map(|(_, ev)| ev)
    }

    #[test]
    fn scalar_changes() {
        let ev = events("#0 0! #10 1!").unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].time, ev[0].value.to_u64()), (0, Some(0)));
        assert_eq!((ev[1].time, ev[1].value.to_u64()), (10, Some(1)));
    }

    #[test]
    fn vector_zero_extension() {
        let ev = events("$dumpvars b0 \" $end #25 b1010 \"").unwrap();
        assert_eq!(ev[1].time, 25);
        assert_eq!(ev[1].value.to_bit_string(), "00001010");
        assert_eq!(ev[1].signal, SignalId(1));
    }

    #[test]
    fn body_errors_report_offsets() {
        let e = events("#0 1?").unwrap_err();
        let off = HEAD.len() as u64 + 3;
        assert_eq!(e, VcdError::MalformedBody { offset: off, token: "?".into(), kind: BodyErrorKind::UndeclaredId });
        let e = events("#10 1! #5 0!").unwrap_err();
        assert!(matches!(e, VcdError::MalformedBody { kind: BodyErrorKind::TimeBackwards { prev: 10, next: 5 }, .. }));
        let e = events("#0 b111111111 \"").unwrap_err();
        assert!(matches!(e, VcdError::MalformedBody { kind: BodyErrorKind::BadValue(_), .. }));
        let e = events("#0 r1.5 !").unwrap_err();
        assert!(matches!(e, VcdError::MalformedBody { kind: BodyErrorKind::RealValue, .. }));
    }

    #[test]
    fn comments_and_equal_times() {
        let ev = events("#5 1! $comment hello #3 $end #5 0!").unwrap();
        assert_eq!(ev.iter().map(|e| e.time).collect::<Vec<_>>(), [5, 5]);
    }
}
