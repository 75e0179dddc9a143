// SPDX-License-Identifier: Apache-2.0

//! Columnar binary containers for activity (`BLKA`) and window power
//! (`BLKP`).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic [4]u8 | version u16 | window_len_fs u64 | n_rows u32 | n_columns u32
//! per column: tag u8 (0 = HW u32, 1 = ST u32, 2 = f64) | name_len u16 | name utf-8
//! per column, in order: n_rows values
//! ```

use std::io::{Read, Write};

use blink_core::activity::{ActivityMatrix, CounterType, FeatureDesc};
use blink_core::power::WindowedPower;
use blink_core::time::Femtos;
use thiserror::Error;

pub const ACTIVITY_MAGIC: [u8; 4] = *b"BLKA";
pub const POWER_MAGIC: [u8; 4] = *b"BLKP";
pub const VERSION: u16 = 1;

const TAG_HW: u8 = 0;
const TAG_ST: u8 = 1;
const TAG_F64: u8 = 2;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("unexpected column tag {0}")]
    BadTag(u8),
    #[error("column name is not valid UTF-8")]
    BadName,
    #[error("{0}")]
    Shape(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Header {
    window_len_fs: u64,
    n_rows: usize,
    columns: Vec<(u8, String)>,
}

fn write_header<W: Write>(w: &mut W, magic: [u8; 4], h: &Header) -> Result<(), ContainerError> {
    w.write_all(&magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&h.window_len_fs.to_le_bytes())?;
    let n_rows = u32::try_from(h.n_rows).map_err(|_| ContainerError::Shape("too many rows"))?;
    let n_cols = u32::try_from(h.columns.len()).map_err(|_| ContainerError::Shape("too many columns"))?;
    w.write_all(&n_rows.to_le_bytes())?;
    w.write_all(&n_cols.to_le_bytes())?;
    for (tag, name) in &h.columns {
        let len = u16::try_from(name.len()).map_err(|_| ContainerError::Shape("column name too long"))?;
        w.write_all(&[*tag])?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], ContainerError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_header<R: Read>(r: &mut R, magic: [u8; 4]) -> Result<Header, ContainerError> {
    let m: [u8; 4] = read_array(r)?;
    if m != magic {
        return Err(ContainerError::BadMagic(m));
    }
    let version = u16::from_le_bytes(read_array(r)?);
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let window_len_fs = u64::from_le_bytes(read_array(r)?);
    let n_rows = u32::from_le_bytes(read_array(r)?) as usize;
    let n_cols = u32::from_le_bytes(read_array(r)?) as usize;
    let mut columns = Vec::with_capacity(n_cols.min(1 << 16));
    for _ in 0..n_cols {
        let [tag] = read_array(r)?;
        if tag > TAG_F64 {
            return Err(ContainerError::BadTag(tag));
        }
        let len = u16::from_le_bytes(read_array(r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        columns.push((tag, String::from_utf8(name).map_err(|_| ContainerError::BadName)?));
    }
    Ok(Header { window_len_fs, n_rows, columns })
}

pub fn write_activity<W: Write>(m: &ActivityMatrix, mut w: W) -> Result<(), ContainerError> {
    let columns = m
        .features
        .iter()
        .map(|f| (if f.counter_type == CounterType::Hw { TAG_HW } else { TAG_ST }, f.signal.clone()))
        .collect();
    write_header(&mut w, ACTIVITY_MAGIC, &Header { window_len_fs: m.window_len.0, n_rows: m.n_windows, columns })?;
    let mut buf = Vec::with_capacity(m.n_windows * 4);
    for f in 0..m.n_features() {
        buf.clear();
        for v in m.column(f) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_activity<R: Read>(mut r: R) -> Result<ActivityMatrix, ContainerError> {
    let h = read_header(&mut r, ACTIVITY_MAGIC)?;
    let features = h
        .columns
        .iter()
        .map(|(tag, name)| match *tag {
            TAG_HW => Ok(FeatureDesc { signal: name.clone(), counter_type: CounterType::Hw }),
            TAG_ST => Ok(FeatureDesc { signal: name.clone(), counter_type: CounterType::St }),
            t => Err(ContainerError::BadTag(t)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut m = ActivityMatrix::zeros(Femtos(h.window_len_fs), h.n_rows, features);
    let mut buf = vec![0u8; h.n_rows * 4];
    for f in 0..m.n_features() {
        r.read_exact(&mut buf)?;
        for (w, chunk) in buf.chunks_exact(4).enumerate() {
            *m.get_mut(w, f) = u32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        }
    }
    Ok(m)
}

pub fn write_power<W: Write>(p: &WindowedPower, mut w: W) -> Result<(), ContainerError> {
    let window_len_fs = Femtos::from_secs(p.window_len).ok_or(ContainerError::Shape("window length"))?.0;
    let header = Header { window_len_fs, n_rows: p.values.len(), columns: vec![(TAG_F64, "power_w".into())] };
    write_header(&mut w, POWER_MAGIC, &header)?;
    let mut buf = Vec::with_capacity(p.values.len() * 8);
    for v in &p.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_power<R: Read>(mut r: R) -> Result<WindowedPower, ContainerError> {
    let h = read_header(&mut r, POWER_MAGIC)?;
    if h.columns.len() != 1 || h.columns[0].0 != TAG_F64 {
        return Err(ContainerError::Shape("power container holds exactly one f64 column"));
    }
    let mut buf = vec![0u8; h.n_rows * 8];
    r.read_exact(&mut buf)?;
    let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(WindowedPower { window_len: Femtos(h.window_len_fs).as_secs(), values })
}
