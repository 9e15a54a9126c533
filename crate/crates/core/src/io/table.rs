//! Coefficient tables: an NPY matrix (one row per image) and a JSON
//! manifest naming every column.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::npy::{read_npy, write_npy, NpyArray};
use crate::error::{EqwsError, Result};
use crate::transform::CoefficientLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    Reg,
    Iso,
    Rwst,
    RRwst,
    Log,
    Features,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableManifest {
    pub kind: TableKind,
    pub rows: usize,
    pub columns: Vec<String>,
    pub n_scales: Option<usize>,
    pub n_angles: Option<usize>,
    pub pooling: Option<u8>,
    pub bank_id: Option<String>,
    /// Free-form record of how the rows were produced.
    #[serde(default)]
    pub source: serde_json::Value,
}

impl TableManifest {
    pub fn new(kind: TableKind, rows: usize, columns: Vec<String>) -> Self {
        TableManifest {
            kind,
            rows,
            columns,
            n_scales: None,
            n_angles: None,
            pooling: None,
            bank_id: None,
            source: serde_json::Value::Null,
        }
    }

    pub fn layout(&self) -> Result<CoefficientLayout> {
        match (self.n_scales, self.n_angles) {
            (Some(j), Some(l)) => Ok(CoefficientLayout::new(j, l)),
            _ => Err(EqwsError::format("table manifest", "missing nScales/nAngles")),
        }
    }
}

pub fn write_table(
    npy: impl AsRef<Path>,
    manifest_path: impl AsRef<Path>,
    rows: &[Vec<f64>],
    manifest: &TableManifest,
) -> Result<()> {
    if rows.len() != manifest.rows {
        return Err(EqwsError::SizeMismatch {
            expected: manifest.rows,
            got: rows.len(),
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != manifest.columns.len()) {
        return Err(EqwsError::SizeMismatch {
            expected: manifest.columns.len(),
            got: bad.len(),
        });
    }
    let array = NpyArray::f64(vec![rows.len(), manifest.columns.len()], rows.concat())?;
    write_npy(npy, &array)?;
    fs::write(manifest_path, serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<TableManifest> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Reads a table and checks its shape against the manifest.
pub fn read_table(npy: impl AsRef<Path>, manifest_path: impl AsRef<Path>) -> Result<(Vec<Vec<f64>>, TableManifest)> {
    let manifest = read_manifest(manifest_path)?;
    let array = read_npy(npy)?;
    if array.shape != [manifest.rows, manifest.columns.len()] {
        return Err(EqwsError::format(
            "table manifest",
            format!(
                "array shape {:?} disagrees with manifest ({} x {})",
                array.shape,
                manifest.rows,
                manifest.columns.len()
            ),
        ));
    }
    Ok((array.into_rows()?, manifest))
}
