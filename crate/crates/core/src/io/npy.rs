//! NPY v1.0 arrays: little-endian `f8` and `u1`, C order.
//!
//! Headers are parsed with `npyz`. Writing is done here so the header is
//! laid out exactly as NumPy lays it out: the dict, room for the first axis
//! to grow to 21 digits, then spaces and a newline up to a multiple of 64.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use npyz::{NpyFile, Order};

use crate::error::{EqwsError, Result};

const MAGIC: &[u8] = b"\x93NUMPY";
const ALIGN: usize = 64;
const GROWTH_AXIS_MAX_DIGITS: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F64(Vec<f64>),
    U8(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn f64(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_len(&shape, data.len())?;
        Ok(NpyArray {
            shape,
            data: NpyData::F64(data),
        })
    }

    pub fn u8(shape: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        check_len(&shape, data.len())?;
        Ok(NpyArray {
            shape,
            data: NpyData::U8(data),
        })
    }

    fn descr(&self) -> &'static str {
        match self.data {
            NpyData::F64(_) => "<f8",
            NpyData::U8(_) => "|u1",
        }
    }

    /// The data as floats; `u1` arrays are widened.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            NpyData::F64(v) => v.clone(),
            NpyData::U8(v) => v.iter().map(|&b| b as f64).collect(),
        }
    }

    pub fn into_f64(self) -> Result<(Vec<usize>, Vec<f64>)> {
        match self.data {
            NpyData::F64(v) => Ok((self.shape, v)),
            NpyData::U8(_) => Err(EqwsError::format("npy", "expected dtype <f8, found |u1")),
        }
    }

    /// Rows of a 2-d float array.
    pub fn into_rows(self) -> Result<Vec<Vec<f64>>> {
        let (shape, v) = self.into_f64()?;
        if shape.len() != 2 {
            return Err(EqwsError::format(
                "npy",
                format!("expected a 2-d array, shape is {shape:?}"),
            ));
        }
        if shape[1] == 0 {
            return Ok(vec![Vec::new(); shape[0]]);
        }
        Ok(v.chunks(shape[1]).map(|c| c.to_vec()).collect())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(EqwsError::InvalidParams("ragged rows".into()));
        }
        NpyArray::f64(vec![rows.len(), cols], rows.concat())
    }
}

fn check_len(shape: &[usize], len: usize) -> Result<()> {
    let expected = shape
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| EqwsError::format("npy", "shape overflows"))?;
    if expected != len {
        return Err(EqwsError::SizeMismatch { expected, got: len });
    }
    Ok(())
}

fn shape_repr(shape: &[usize]) -> String {
    match shape {
        [] => "()".into(),
        [a] => format!("({a},)"),
        _ => format!(
            "({})",
            shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn header(descr: &str, shape: &[usize]) -> Vec<u8> {
    let mut text = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': {}, }}",
        shape_repr(shape)
    );
    if let Some(first) = shape.first() {
        let digits = first.to_string().len();
        text.push_str(&" ".repeat(GROWTH_AXIS_MAX_DIGITS.saturating_sub(digits)));
    }
    let used = MAGIC.len() + 2 + 2 + text.len() + 1;
    text.push_str(&" ".repeat((ALIGN - used % ALIGN) % ALIGN));
    text.push('\n');
    let mut out = Vec::with_capacity(10 + text.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(text.len() as u16).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out
}

pub fn to_bytes(array: &NpyArray) -> Vec<u8> {
    let mut out = header(array.descr(), &array.shape);
    match &array.data {
        NpyData::F64(v) => {
            out.reserve(v.len() * 8);
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        NpyData::U8(v) => out.extend_from_slice(v),
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(EqwsError::format("npy", "missing magic string"));
    }
    let data_offset = match bytes[6] {
        1 => 10 + u16::from_le_bytes([bytes[8], bytes[9]]) as usize,
        2 | 3 if bytes.len() >= 12 => 12 + u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
        v => return Err(EqwsError::format("npy", format!("unsupported version {v}"))),
    };
    let file = NpyFile::new(Cursor::new(bytes)).map_err(|e| EqwsError::format("npy", e.to_string()))?;
    if file.order() == Order::Fortran {
        return Err(EqwsError::Unsupported("NPY arrays in Fortran order".into()));
    }
    let shape: Vec<usize> = file.shape().iter().map(|&d| d as usize).collect();
    let descr = file.dtype().descr();
    let n = usize::try_from(file.len()).map_err(|_| EqwsError::format("npy", "array too large"))?;
    let item = match descr.as_str() {
        "'<f8'" | "<f8" => 8,
        "'|u1'" | "|u1" => 1,
        other => return Err(EqwsError::format("npy", format!("unsupported dtype {other}"))),
    };
    let expected_len = n
        .checked_mul(item)
        .and_then(|b| b.checked_add(data_offset))
        .ok_or_else(|| EqwsError::format("npy", "array too large"))?;
    if bytes.len() != expected_len {
        return Err(EqwsError::format(
            "npy",
            format!(
                "expected {expected_len} bytes for shape {shape:?}, file has {}",
                bytes.len()
            ),
        ));
    }
    let body = &bytes[data_offset..];
    let data = if item == 8 {
        NpyData::F64(
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    } else {
        NpyData::U8(body.to_vec())
    };
    Ok(NpyArray { shape, data })
}

pub fn write_npy(path: impl AsRef<Path>, array: &NpyArray) -> Result<()> {
    fs::write(path, to_bytes(array))?;
    Ok(())
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    from_bytes(&fs::read(path)?)
}
