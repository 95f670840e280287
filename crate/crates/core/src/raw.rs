//! Raw k-space files.
//!
//! Layout: a plain-text header of `key=value` lines terminated by one blank
//! line, then a binary payload of little-endian 32-bit float real/imag
//! pairs, coil-major then row-major. `rows`, `cols`, and `coils` are
//! required header keys; any other keys ride along untouched. The payload
//! must hold exactly `coils*rows*cols` complex samples.

use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kspace::KSpaceVolume;

const REQUIRED_KEYS: [&str; 3] = ["rows", "cols", "coils"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHeader {
    pub rows: usize,
    pub cols: usize,
    pub coils: usize,
    /// Non-dimension keys in file order.
    pub meta: Vec<(String, String)>,
}

impl RawHeader {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn check_meta(meta: &[(String, String)]) -> Result<()> {
    for (k, v) in meta {
        if k.is_empty() {
            return Err(Error::invalid("meta key must be nonempty"));
        }
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::invalid(format!("meta key/value '{k}' contains '=' or newline")));
        }
        if REQUIRED_KEYS.contains(&k.as_str()) {
            return Err(Error::invalid(format!("meta key '{k}' collides with a dimension key")));
        }
    }
    Ok(())
}

/// Serializes a volume with optional extra header entries.
pub fn encode_raw(vol: &KSpaceVolume, meta: &[(String, String)]) -> Result<Vec<u8>> {
    check_meta(meta)?;
    let mut out = Vec::new();
    out.extend_from_slice(format!("rows={}\n", vol.rows()).as_bytes());
    out.extend_from_slice(format!("cols={}\n", vol.cols()).as_bytes());
    out.extend_from_slice(format!("coils={}\n", vol.n_coils()).as_bytes());
    for (k, v) in meta {
        out.extend_from_slice(format!("{k}={v}\n").as_bytes());
    }
    out.push(b'\n');
    for v in vol.data().iter() {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    Ok(out)
}

/// Parses bytes produced by [`encode_raw`] (or any conforming writer).
pub fn decode_raw(bytes: &[u8]) -> Result<(KSpaceVolume, RawHeader)> {
    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| Error::RawHeader("missing blank-line terminator".into()))?;
    let header_text = std::str::from_utf8(&bytes[..split])
        .map_err(|_| Error::RawHeader("header is not valid utf-8".into()))?;
    let payload = &bytes[split + 2..];

    let mut dims = [None::<usize>; 3];
    let mut meta = Vec::new();
    for line in header_text.split('\n') {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::RawHeader(format!("line without '=': '{line}'")))?;
        if key.is_empty() {
            return Err(Error::RawHeader(format!("empty key in line '{line}'")));
        }
        if let Some(slot) = REQUIRED_KEYS.iter().position(|&k| k == key) {
            if dims[slot].is_some() {
                return Err(Error::RawHeader(format!("duplicate key '{key}'")));
            }
            let n: usize = value
                .parse()
                .map_err(|_| Error::RawHeader(format!("bad value for '{key}': '{value}'")))?;
            if n == 0 {
                return Err(Error::RawHeader(format!("'{key}' must be positive")));
            }
            dims[slot] = Some(n);
        } else {
            meta.push((key.to_string(), value.to_string()));
        }
    }
    let [rows, cols, coils] = dims;
    let (rows, cols, coils) = match (rows, cols, coils) {
        (Some(r), Some(c), Some(n)) => (r, c, n),
        _ => return Err(Error::RawHeader("missing rows/cols/coils".into())),
    };

    let samples = coils
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or_else(|| Error::RawHeader("dims overflow".into()))?;
    let expected = samples
        .checked_mul(8)
        .ok_or_else(|| Error::RawHeader("dims overflow".into()))?;
    if payload.len() < expected {
        return Err(Error::RawTruncated { expected, got: payload.len() });
    }
    if payload.len() > expected {
        return Err(Error::RawPayloadMismatch { expected, got: payload.len() });
    }

    let mut values = Vec::with_capacity(samples);
    for pair in payload.chunks_exact(8) {
        let re = f32::from_le_bytes(pair[0..4].try_into().unwrap()) as f64;
        let im = f32::from_le_bytes(pair[4..8].try_into().unwrap()) as f64;
        values.push(Complex64::new(re, im));
    }
    let data = Array3::from_shape_vec((coils, rows, cols), values)
        .map_err(|e| Error::shape(format!("payload reshape: {e}")))?;
    let vol = KSpaceVolume::new(data)?;
    Ok((vol, RawHeader { rows, cols, coils, meta }))
}

pub fn write_raw(path: impl AsRef<Path>, vol: &KSpaceVolume, meta: &[(String, String)]) -> Result<()> {
    Ok(std::fs::write(path, encode_raw(vol, meta)?)?)
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<(KSpaceVolume, RawHeader)> {
    decode_raw(&std::fs::read(path)?)
}
