//! Per-image timing of the sparse Fourier-pooled scatter against the dense
//! real-domain reference.

use std::time::Instant;

use eqws_core::rng::seeded;
use eqws_core::{coefficient_count, scatter_reference, FilterBank, FilterBankParams, ImageField, ScatterEngine};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Stage};

/// `(REG, ISO)` coefficient counts for `L = 8`, `c = 1`, `jIm = 3..=8`.
pub const REFERENCE_COUNTS: [(u32, usize, usize); 6] = [
    (3, 92, 15),
    (4, 308, 42),
    (5, 652, 85),
    (6, 1124, 144),
    (7, 1724, 219),
    (8, 2452, 310),
];

pub fn reference_count(params: &FilterBankParams) -> Option<(usize, usize)> {
    if params.angles != 8 || params.radial_density != 1 {
        return None;
    }
    REFERENCE_COUNTS
        .iter()
        .find(|r| r.0 == params.log2_size)
        .map(|r| (r.1, r.2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchmarkConfig {
    pub log2_sizes: Vec<u32>,
    pub base: FilterBankParams,
    /// Timed calls per path and size, after one warm-up call.
    pub repeats: usize,
    /// The dense path is skipped above this size; it is very slow.
    pub max_dense_log2_size: u32,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            log2_sizes: (3..=8).collect(),
            base: FilterBankParams::default(),
            repeats: 3,
            max_dense_log2_size: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchmarkRow {
    pub log2_size: u32,
    pub side: usize,
    pub reg_count: usize,
    pub iso_count: usize,
    pub expected: Option<(usize, usize)>,
    pub sparse_seconds: f64,
    pub dense_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("jIm,side,reg,iso,sparse_s,dense_s\n");
        for r in &self.rows {
            let dense = r.dense_seconds.map_or(String::new(), |d| format!("{d:.6e}"));
            s.push_str(&format!(
                "{},{},{},{},{:.6e},{}\n",
                r.log2_size, r.side, r.reg_count, r.iso_count, r.sparse_seconds, dense
            ));
        }
        s
    }
}

fn time_per_call(repeats: usize, mut f: impl FnMut() -> eqws_core::Result<()>) -> eqws_core::Result<f64> {
    f()?;
    let start = Instant::now();
    for _ in 0..repeats {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / repeats as f64)
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> CliResult<BenchmarkReport> {
    if cfg.repeats == 0 {
        return Err(CliError::config("benchmark", "repeats must be at least 1"));
    }
    let mut rows = Vec::new();
    for &jim in &cfg.log2_sizes {
        let params = FilterBankParams {
            log2_size: jim,
            ..cfg.base.clone()
        };
        let (reg_count, iso_count) = coefficient_count(&params).stage("benchmark")?;
        let bank = FilterBank::build(params.clone()).stage("filterbank")?;
        let layout = eqws_core::CoefficientLayout::for_bank(&bank);
        if (layout.reg_len(), layout.iso_len()) != (reg_count, iso_count) {
            return Err(CliError::data("benchmark", "layout disagrees with coefficient_count"));
        }
        let expected = reference_count(&params);
        if let Some(e) = expected {
            if e != (reg_count, iso_count) {
                return Err(CliError::data(
                    "benchmark",
                    format!("jIm={jim}: counts {reg_count}/{iso_count}, expected {}/{}", e.0, e.1),
                ));
            }
        }
        let side = bank.side();
        let mut rng = seeded(cfg.seed ^ jim as u64);
        let img = ImageField::new(side, (0..side * side).map(|_| rng.gen::<f64>()).collect()).stage("benchmark")?;
        let engine = ScatterEngine::new(&bank);
        let sparse_seconds = time_per_call(cfg.repeats, || engine.scatter(&img).map(drop)).stage("scatter")?;
        let dense_seconds = if jim <= cfg.max_dense_log2_size {
            Some(time_per_call(cfg.repeats, || scatter_reference(&img, &bank).map(drop)).stage("scatter")?)
        } else {
            None
        };
        rows.push(BenchmarkRow {
            log2_size: jim,
            side,
            reg_count,
            iso_count,
            expected,
            sparse_seconds,
            dense_seconds,
        });
    }
    Ok(BenchmarkReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_counts() {
        let cfg = BenchmarkConfig {
            log2_sizes: vec![3, 4],
            repeats: 1,
            ..Default::default()
        };
        let r = run_benchmark(&cfg).unwrap();
        assert_eq!((r.rows[0].reg_count, r.rows[0].iso_count), (92, 15));
        assert_eq!((r.rows[1].reg_count, r.rows[1].iso_count), (308, 42));
        assert!(r.to_csv().starts_with("jIm,side,reg,iso"));
        assert!(reference_count(&FilterBankParams {
            angles: 4,
            ..Default::default()
        })
        .is_none());
    }
}
