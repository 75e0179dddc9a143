// SPDX-License-Identifier: Apache-2.0

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::{lossy, HeaderErrorKind, Lexer, PortRole, SignalEntry, SignalTable, Source, VarKind, VcdError};
use crate::time::Timescale;

fn err(offset: u64, token: &[u8], kind: HeaderErrorKind) -> VcdError {
    VcdError::MalformedHeader { offset, token: lossy(token), kind }
}

/// Collects the tokens of a `$keyword ... $end` section.
fn section<S: Source>(lx: &mut Lexer<S>) -> Result<Vec<(u64, Vec<u8>)>, VcdError> {
    let mut out = Vec::new();
    loop {
        let end = lx.offset();
        match lx.next_token()? {
            None => return Err(err(end, b"", HeaderErrorKind::Syntax("unterminated section"))),
            Some(t) if t.text == b"$end" => return Ok(out),
            Some(t) => out.push((t.offset, t.text.to_vec())),
        }
    }
}

fn var_kind(ty: &[u8]) -> Option<VarKind> {
    match ty {
        b"real" | b"realtime" | b"shortreal" => None,
        b"reg" | b"integer" | b"time" | b"logic" | b"bit" | b"int" | b"shortint" | b"longint"
        | b"byte" => Some(VarKind::Reg),
        _ => Some(VarKind::Wire),
    }
}

/// Splits `name[7:0]` style references and decides whether the range is
/// part of the name. A range covering the whole declared width is dropped,
/// anything else (bit or part selects) stays in the name.
fn reference_name(parts: &[(u64, Vec<u8>)], width: u32) -> String {
    let mut joined = String::new();
    for (_, p) in parts {
        joined.push_str(&String::from_utf8_lossy(p));
    }
    if let Some(open) = joined.find('[') {
        let range = &joined[open + 1..joined.len().saturating_sub(1)];
        if let Some((msb, lsb)) = range.split_once(':') {
            if let (Ok(m), Ok(l)) = (msb.trim().parse::<i64>(), lsb.trim().parse::<i64>()) {
                if (m - l).unsigned_abs() + 1 == width as u64 {
                    joined.truncate(open);
                }
            }
        }
    }
    joined
}

/// Parses the declaration section of a VCD, leaving `lx` at the first
/// value-change token.
pub fn parse_header<S: Source>(lx: &mut Lexer<S>) -> Result<SignalTable, VcdError> {
    let mut scopes: Vec<String> = Vec::new();
    let mut top_scope: Option<String> = None;
    let mut timescale: Option<Timescale> = None;
    let mut entries: Vec<SignalEntry> = Vec::new();
    let mut ids = BTreeSet::new();
    let mut names = BTreeSet::new();

    loop {
        let at = lx.offset();
        let Some(tok) = lx.next_token()? else {
            return Err(err(at, b"", HeaderErrorKind::MissingEndDefinitions));
        };
        let (offset, keyword) = (tok.offset, tok.text.to_vec());
        match keyword.as_slice() {
            b"$enddefinitions" => {
                section(lx)?;
                break;
            }
            b"$timescale" => {
                let body = section(lx)?;
                let text: String = body.iter().map(|(_, t)| String::from_utf8_lossy(t)).collect();
                let ts = Timescale::parse(&text)
                    .ok_or_else(|| err(offset, text.as_bytes(), HeaderErrorKind::UnknownTimescale))?;
                timescale = Some(ts);
            }
            b"$scope" => {
                let body = section(lx)?;
                let Some((_, name)) = body.get(1) else {
                    return Err(err(offset, &keyword, HeaderErrorKind::Syntax("$scope without a name")));
                };
                let name = lossy(name);
                if scopes.is_empty() && top_scope.is_none() {
                    top_scope = Some(name.clone());
                }
                scopes.push(name);
            }
            b"$upscope" => {
                section(lx)?;
                if scopes.pop().is_none() {
                    return Err(err(offset, &keyword, HeaderErrorKind::UnbalancedScope));
                }
            }
            b"$var" => {
                let body = section(lx)?;
                if body.len() < 4 {
                    return Err(err(offset, &keyword, HeaderErrorKind::Syntax("incomplete $var")));
                }
                let kind = var_kind(&body[0].1)
                    .ok_or_else(|| err(body[0].0, &body[0].1, HeaderErrorKind::RealVariable))?;
                let width: u32 = core::str::from_utf8(&body[1].1)
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .filter(|&w| w >= 1)
                    .ok_or_else(|| err(body[1].0, &body[1].1, HeaderErrorKind::BadWidth))?;
                let (id_off, id) = (&body[2].0, lossy(&body[2].1));
                let local = reference_name(&body[3..], width);
                let mut hier_name = scopes.join(".");
                if !hier_name.is_empty() {
                    hier_name.push('.');
                }
                hier_name.push_str(&local);
                if !ids.insert(id.clone()) {
                    return Err(err(*id_off, id.as_bytes(), HeaderErrorKind::DuplicateIdCode));
                }
                if !names.insert(hier_name.clone()) {
                    return Err(err(body[3].0, hier_name.as_bytes(), HeaderErrorKind::DuplicateName));
                }
                entries.push(SignalEntry { id_code: id, hier_name, width, kind, port_role: PortRole::Internal });
            }
            k if k.starts_with(b"$") => {
                // $date, $version, $comment and vendor extensions.
                section(lx)?;
            }
            _ => return Err(err(offset, &keyword, HeaderErrorKind::Syntax("unexpected token"))),
        }
    }

    Ok(SignalTable {
        entries,
        timescale: timescale.unwrap_or_default(),
        top_scope: top_scope.unwrap_or_default(),
    })
}
