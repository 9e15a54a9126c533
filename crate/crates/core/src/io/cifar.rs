//! CIFAR-10 binary batches: records of one label byte and 3x32x32 pixels,
//! channel-major (all red, then green, then blue), rows top to bottom.

use std::fs;
use std::path::Path;

use crate::error::{EqwsError, Result};

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PIXELS: usize = 3 * CIFAR_SIDE * CIFAR_SIDE;
pub const CIFAR_RECORD: usize = 1 + CIFAR_PIXELS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CifarRecord {
    pub label: u8,
    pub pixels: Vec<u8>,
}

pub fn parse_cifar(bytes: &[u8]) -> Result<Vec<CifarRecord>> {
    if bytes.is_empty() || bytes.len() % CIFAR_RECORD != 0 {
        return Err(EqwsError::format(
            "cifar",
            format!("length {} is not a positive multiple of {CIFAR_RECORD}", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(CIFAR_RECORD)
        .map(|r| CifarRecord {
            label: r[0],
            pixels: r[1..].to_vec(),
        })
        .collect())
}

pub fn cifar_bytes(records: &[CifarRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(records.len() * CIFAR_RECORD);
    for r in records {
        if r.pixels.len() != CIFAR_PIXELS {
            return Err(EqwsError::SizeMismatch {
                expected: CIFAR_PIXELS,
                got: r.pixels.len(),
            });
        }
        out.push(r.label);
        out.extend_from_slice(&r.pixels);
    }
    Ok(out)
}

pub fn read_cifar_records(path: impl AsRef<Path>) -> Result<Vec<CifarRecord>> {
    parse_cifar(&fs::read(path)?)
}

pub fn write_cifar(path: impl AsRef<Path>, records: &[CifarRecord]) -> Result<()> {
    fs::write(path, cifar_bytes(records)?)?;
    Ok(())
}
