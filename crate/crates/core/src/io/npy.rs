//! Minimal NPY support: 2-D, C-order, little-endian `f4`/`f8` arrays.

use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpyDtype {
    F32,
    F64,
}

impl NpyDtype {
    fn descr(self) -> &'static str {
        match self {
            NpyDtype::F32 => "<f4",
            NpyDtype::F64 => "<f8",
        }
    }

    fn size(self) -> usize {
        match self {
            NpyDtype::F32 => 4,
            NpyDtype::F64 => 8,
        }
    }
}

/// A decoded 2-D array, values widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub height: usize,
    pub width: usize,
    pub dtype: NpyDtype,
    pub values: Vec<f64>,
}

#[derive(Debug)]
struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptHeader(msg.into())
}

/// Value text following `'key':` in a Python dict literal.
fn dict_value<'a>(dict: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}'");
    let start = dict
        .find(&pat)
        .ok_or_else(|| corrupt(format!("missing key `{key}`")))?;
    let rest = dict[start + pat.len()..].trim_start();
    rest.strip_prefix(':')
        .map(str::trim_start)
        .ok_or_else(|| corrupt(format!("malformed entry for `{key}`")))
}

fn parse_header(text: &str) -> Result<Header> {
    let text = text.trim();
    if !(text.starts_with('{') && text.ends_with('}')) {
        return Err(corrupt("header is not a dict literal"));
    }
    let descr = dict_value(text, "descr")?;
    let descr = descr
        .strip_prefix('\'')
        .and_then(|s| s.split_once('\''))
        .map(|(d, _)| d.to_owned())
        .ok_or_else(|| corrupt("descr is not a string"))?;
    let fortran = dict_value(text, "fortran_order")?;
    let fortran_order = if fortran.starts_with("True") {
        true
    } else if fortran.starts_with("False") {
        false
    } else {
        return Err(corrupt("fortran_order is not a bool"));
    };
    let shape = dict_value(text, "shape")?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.split_once(')'))
        .map(|(s, _)| s)
        .ok_or_else(|| corrupt("shape is not a tuple"))?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| corrupt(format!("bad dimension `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Header {
        descr,
        fortran_order,
        shape,
    })
}

pub fn decode_npy(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::UnsupportedFormat("not an NPY file".into()));
    }
    let (header_len, offset) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(corrupt("truncated header length"));
            }
            let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
            (len, 12)
        }
        v => return Err(Error::UnsupportedFormat(format!("NPY version {v}"))),
    };
    let data_start = offset + header_len;
    let header_bytes = bytes
        .get(offset..data_start)
        .ok_or_else(|| corrupt("header extends past end of file"))?;
    let text = std::str::from_utf8(header_bytes).map_err(|_| corrupt("header is not text"))?;
    let header = parse_header(text)?;

    if header.fortran_order {
        return Err(Error::UnsupportedFormat("fortran-ordered arrays".into()));
    }
    let dtype = match header.descr.as_str() {
        "<f4" => NpyDtype::F32,
        "<f8" => NpyDtype::F64,
        other => return Err(Error::UnsupportedFormat(format!("dtype `{other}`"))),
    };
    let [height, width] = header.shape[..] else {
        return Err(Error::UnsupportedFormat(format!(
            "{}-D array, expected 2-D",
            header.shape.len()
        )));
    };
    let n = height * width;
    let data = &bytes[data_start..];
    if data.len() != n * dtype.size() {
        return Err(corrupt(format!(
            "expected {} data bytes, found {}",
            n * dtype.size(),
            data.len()
        )));
    }
    let values = match dtype {
        NpyDtype::F32 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        NpyDtype::F64 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    Ok(NpyArray {
        height,
        width,
        dtype,
        values,
    })
}

/// Encodes a version 1.0 NPY file. `F32` narrows the values.
pub fn encode_npy(height: usize, width: usize, values: &[f64], dtype: NpyDtype) -> Vec<u8> {
    assert_eq!(values.len(), height * width, "buffer does not match shape");
    let dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({height}, {width}), }}",
        dtype.descr()
    );
    // Pad so the data starts on a 64-byte boundary; the header ends in '\n'.
    let unpadded = MAGIC.len() + 4 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    let header_len = dict.len() + pad + 1;

    let mut out = Vec::with_capacity(unpadded + pad + values.len() * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    match dtype {
        NpyDtype::F32 => values
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        NpyDtype::F64 => values
            .iter()
            .for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
    out
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_npy(&bytes)
}

pub fn write_npy(path: &Path, height: usize, width: usize, values: &[f64], dtype: NpyDtype) -> Result<()> {
    std::fs::write(path, encode_npy(height, width, values, dtype)).map_err(|e| Error::io(path, e))
}
