//! IDX files (MNIST, EMNIST): unsigned-byte payloads only.

use std::fs;
use std::path::Path;

use crate::error::{EqwsError, Result};

const UBYTE: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn err(reason: impl Into<String>) -> EqwsError {
    EqwsError::format("idx", reason)
}

pub fn parse_idx(bytes: &[u8], expected_ndims: Option<usize>) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(err(format!("truncated header: {} bytes", bytes.len())));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(err("bad magic number"));
    }
    if bytes[2] != UBYTE {
        return Err(err(format!("unsupported element type 0x{:02x}", bytes[2])));
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(err("zero dimensions"));
    }
    if let Some(n) = expected_ndims {
        if n != ndims {
            return Err(err(format!("expected {n} dimensions, magic declares {ndims}")));
        }
    }
    let head = 4 + 4 * ndims;
    if bytes.len() < head {
        return Err(err("truncated dimension list"));
    }
    let dims: Vec<usize> = bytes[4..head]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let total = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| err("dimension product overflows"))?;
    let body = bytes.len() - head;
    if body < total {
        return Err(err(format!("truncated payload: {body} of {total} bytes")));
    }
    if body > total {
        return Err(err(format!("{} trailing bytes after payload", body - total)));
    }
    Ok(IdxArray {
        dims,
        data: bytes[head..].to_vec(),
    })
}

pub fn read_idx(path: impl AsRef<Path>, expected_ndims: Option<usize>) -> Result<IdxArray> {
    parse_idx(&fs::read(path)?, expected_ndims)
}

pub fn idx_bytes(array: &IdxArray) -> Result<Vec<u8>> {
    if array.dims.is_empty() || array.dims.len() > 255 {
        return Err(EqwsError::InvalidParams("IDX needs 1 to 255 dimensions".into()));
    }
    let mut out = vec![0, 0, UBYTE, array.dims.len() as u8];
    for &d in &array.dims {
        let d = u32::try_from(d).map_err(|_| EqwsError::InvalidParams("IDX dimension exceeds u32".into()))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(&array.data);
    Ok(out)
}

pub fn write_idx(path: impl AsRef<Path>, array: &IdxArray) -> Result<()> {
    fs::write(path, idx_bytes(array)?)?;
    Ok(())
}
