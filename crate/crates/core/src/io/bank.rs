//! Filter-bank directories: one dense NPY per filter plus `manifest.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::npy::{from_bytes, to_bytes, NpyArray};
use crate::error::{EqwsError, Result};
use crate::filterbank::{FilterBank, FilterBankParams, FilterLabel, SparseFilter};

pub const BANK_MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FilterEntry {
    pub label: FilterLabel,
    pub file: String,
    /// Hex SHA-256 of the NPY file bytes.
    pub sha256: String,
    pub nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BankManifest {
    pub params: FilterBankParams,
    pub j_values: Vec<f64>,
    pub effective_widths: Vec<usize>,
    pub bank_id: String,
    pub filters: Vec<FilterEntry>,
}

fn file_name(label: &FilterLabel) -> String {
    match label {
        FilterLabel::Psi { scale, angle, .. } => format!("psi_s{scale:02}_l{angle:02}.npy"),
        FilterLabel::Phi => "phi.npy".into(),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn save_bank(dir: impl AsRef<Path>, bank: &FilterBank) -> Result<BankManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let side = bank.side();
    let mut filters = Vec::new();
    for f in bank.filters() {
        let bytes = to_bytes(&NpyArray::f64(vec![side, side], f.to_dense(side))?);
        let file = file_name(&f.label);
        fs::write(dir.join(&file), &bytes)?;
        filters.push(FilterEntry {
            label: f.label,
            file,
            sha256: sha256_hex(&bytes),
            nonzero: f.len(),
        });
    }
    let manifest = BankManifest {
        params: bank.params().clone(),
        j_values: bank.scale_values().to_vec(),
        effective_widths: bank.effective_widths().to_vec(),
        bank_id: bank.id().to_string(),
        filters,
    };
    fs::write(dir.join(BANK_MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Reads a bank back, verifying every checksum and the bank id.
pub fn load_bank(dir: impl AsRef<Path>) -> Result<FilterBank> {
    let dir = dir.as_ref();
    let manifest: BankManifest = serde_json::from_slice(&fs::read(dir.join(BANK_MANIFEST))?)?;
    let side = manifest.params.side();
    let mut filters = Vec::with_capacity(manifest.filters.len());
    for entry in &manifest.filters {
        if entry.file.contains('/') || entry.file.contains('\\') {
            return Err(EqwsError::format(
                "bank manifest",
                format!("file {:?} leaves the bank directory", entry.file),
            ));
        }
        let bytes = fs::read(dir.join(&entry.file))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(EqwsError::format(
                "bank manifest",
                format!("checksum mismatch for {}", entry.file),
            ));
        }
        let (shape, dense) = from_bytes(&bytes)?.into_f64()?;
        if shape != [side, side] {
            return Err(EqwsError::format(
                "bank manifest",
                format!("{} has shape {shape:?}", entry.file),
            ));
        }
        filters.push(SparseFilter::from_dense(entry.label, &dense)?);
    }
    let phi = filters
        .pop()
        .ok_or_else(|| EqwsError::InvalidBank("manifest lists no filters".into()))?;
    let bank = FilterBank::from_parts(manifest.params, filters, phi)?;
    if bank.id() != manifest.bank_id {
        return Err(EqwsError::InvalidBank(format!(
            "bank id {} does not match manifest {}",
            bank.id(),
            manifest.bank_id
        )));
    }
    Ok(bank)
}
