// SPDX-License-Identifier: Apache-2.0

//! Oscilloscope exports as delimited text.
//!
//! Leading `#` lines carry metadata (`# capture_id: …`, `# instrument: …`).
//! The header row names the columns `time`, `shunt`, `trigger` and
//! optionally `supply`, case-insensitively, each optionally followed by a
//! unit in parentheses: `time (us)`, `shunt (mV)`. Time defaults to
//! seconds and voltages to volts.

use std::io::{BufRead, Write};

use blink_core::power::ScopeCapture;
use thiserror::Error;

/// Allowed deviation of any time step from the mean step.
pub const UNIFORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScopeCsvError {
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("unknown unit `{unit}` for column `{column}`")]
    UnknownUnit { column: String, unit: String },
    #[error("sampling is not uniform at row {row}: step {step} s, mean step {mean} s")]
    NonUniformSampling { row: usize, step: f64, mean: f64 },
    #[error("at least two samples are required")]
    TooFewRows,
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn split_header(h: &str) -> (String, Option<String>) {
    let h = h.trim();
    match h.split_once('(') {
        Some((name, rest)) => (name.trim().to_ascii_lowercase(), Some(rest.trim_end_matches(')').trim().to_string())),
        None => (h.to_ascii_lowercase(), None),
    }
}

fn time_scale(unit: Option<&str>) -> Option<f64> {
    Some(match unit.unwrap_or("s") {
        "s" => 1.0,
        "ms" => 1e-3,
        "us" | "µs" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        _ => return None,
    })
}

fn volt_scale(unit: Option<&str>) -> Option<f64> {
    Some(match unit.unwrap_or("V") {
        "V" | "v" => 1.0,
        "mV" | "mv" => 1e-3,
        "uV" | "µV" | "uv" => 1e-6,
        _ => return None,
    })
}

pub fn read_scope_csv<R: BufRead>(mut r: R) -> Result<ScopeCapture, ScopeCsvError> {
    let mut capture_id = String::new();
    let mut instrument = String::new();
    let mut header = String::new();
    loop {
        header.clear();
        if r.read_line(&mut header)? == 0 {
            return Err(ScopeCsvError::MissingColumn("time"));
        }
        let line = header.trim();
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once(':') {
                match k.trim() {
                    "capture_id" => capture_id = v.trim().to_string(),
                    "instrument" => instrument = v.trim().to_string(),
                    _ => {}
                }
            }
        } else if !line.is_empty() {
            break;
        }
    }

    let cols: Vec<(String, Option<String>)> = header.trim().split(',').map(split_header).collect();
    let find = |name: &'static str| cols.iter().position(|(n, _)| n == name);
    let scale = |idx: usize, f: fn(Option<&str>) -> Option<f64>| {
        f(cols[idx].1.as_deref())
            .ok_or_else(|| ScopeCsvError::UnknownUnit { column: cols[idx].0.clone(), unit: cols[idx].1.clone().unwrap_or_default() })
    };
    let ti = find("time").ok_or(ScopeCsvError::MissingColumn("time"))?;
    let si = find("shunt").ok_or(ScopeCsvError::MissingColumn("shunt"))?;
    let gi = find("trigger").ok_or(ScopeCsvError::MissingColumn("trigger"))?;
    let vi = find("supply");
    let (ts, ss, gs) = (scale(ti, time_scale)?, scale(si, volt_scale)?, scale(gi, volt_scale)?);
    let vs = vi.map(|i| scale(i, volt_scale)).transpose()?;

    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
    let (mut time, mut shunt, mut trigger) = (Vec::new(), Vec::new(), Vec::new());
    let mut supply = vi.map(|_| Vec::new());
    let mut rec = csv::StringRecord::new();
    let mut row = 0;
    while rdr.read_record(&mut rec).map_err(|e| ScopeCsvError::Parse { row: row + 1, msg: e.to_string() })? {
        row += 1;
        let field = |i: usize, s: f64| -> Result<f64, ScopeCsvError> {
            let txt = rec.get(i).ok_or_else(|| ScopeCsvError::Parse { row, msg: format!("missing field {}", i + 1) })?;
            txt.parse::<f64>().map(|v| v * s).map_err(|e| ScopeCsvError::Parse { row, msg: format!("`{txt}`: {e}") })
        };
        time.push(field(ti, ts)?);
        shunt.push(field(si, ss)?);
        trigger.push(field(gi, gs)?);
        if let (Some(v), Some(i), Some(s)) = (supply.as_mut(), vi, vs) {
            v.push(field(i, s)?);
        }
    }
    if time.len() < 2 {
        return Err(ScopeCsvError::TooFewRows);
    }
    let mean = (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64;
    for (i, w) in time.windows(2).enumerate() {
        let step = w[1] - w[0];
        if mean.is_nan() || mean <= 0.0 || (step - mean).abs() > UNIFORM_TOLERANCE * mean {
            return Err(ScopeCsvError::NonUniformSampling { row: i + 2, step, mean });
        }
    }
    Ok(ScopeCapture { sample_period: mean, shunt, supply, trigger, capture_id, instrument })
}

/// Writes `cap` in the format [`read_scope_csv`] accepts; numbers use the
/// shortest representation that reads back exactly.
pub fn write_scope_csv<W: Write>(cap: &ScopeCapture, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# capture_id: {}", cap.capture_id)?;
    writeln!(w, "# instrument: {}", cap.instrument)?;
    write!(w, "time (s),shunt (V),trigger (V)")?;
    if cap.supply.is_some() {
        write!(w, ",supply (V)")?;
    }
    writeln!(w)?;
    for i in 0..cap.len() {
        write!(w, "{:e},{:e},{:e}", i as f64 * cap.sample_period, cap.shunt[i], cap.trigger[i])?;
        if let Some(s) = &cap.supply {
            write!(w, ",{:e}", s[i])?;
        }
        writeln!(w)?;
    }
    w.flush()
}
