//! CSV and little-endian binary export of sampled paths.
//!
//! Binary layout: `b"FBMB"`, version `u16`, `H` as `f64`, `m` as `u64`,
//! then `m` `f64` values, all little-endian.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{FgnPath, HurstParameter, TwoSidedFbmGrid};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: [u8; 4] = *b"FBMB";
pub const BINARY_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 8 + 8;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_fgn_csv(fgn: &FgnPath, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| {
        writeln!(w, "index,value")?;
        for (i, v) in fgn.values().iter().enumerate() {
            writeln!(w, "{},{:?}", i + 1, v)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn write_grid_csv(grid: &TwoSidedFbmGrid, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| {
        writeln!(w, "index,value")?;
        for (j, v) in grid.iter() {
            writeln!(w, "{j},{v:?}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn encode_fgn_binary(fgn: &FgnPath) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * fgn.len());
    buf.extend_from_slice(&BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&fgn.hurst().value().to_le_bytes());
    buf.extend_from_slice(&(fgn.len() as u64).to_le_bytes());
    for v in fgn.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_fgn_binary(bytes: &[u8]) -> Result<(HurstParameter, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if bytes[..4] != BINARY_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != BINARY_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let h = f64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let m = u64::from_le_bytes(bytes[14..22].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * m {
        return Err(Error::Format(format!(
            "expected {m} values, found {} bytes",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((HurstParameter::new(h)?, values))
}

pub fn write_fgn_binary(fgn: &FgnPath, path: &Path) -> Result<()> {
    std::fs::write(path, encode_fgn_binary(fgn)).map_err(|e| Error::io(path, e))
}

pub fn read_fgn_binary(path: &Path) -> Result<(HurstParameter, Vec<f64>)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_fgn_binary(&bytes)
}
