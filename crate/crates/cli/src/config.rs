//! Pipeline configuration, read from and written back to a single JSON
//! document.

use std::path::{Path, PathBuf};

use eqws_core::io::PreprocessOptions;
use eqws_core::{FilterBankParams, Interpolation};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Idx,
    Emnist,
    Cifar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SplitFiles {
    pub images: PathBuf,
    /// Unused for CIFAR, whose labels live in the record files.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Keep the first `count` rows; all rows when absent.
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetConfig {
    pub format: DatasetFormat,
    pub train: SplitFiles,
    pub test: SplitFiles,
    #[serde(default)]
    pub preprocess: PreprocessOptions,
}

/// Rotation angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleGrid {
    List(Vec<f64>),
    /// `k * 180 / n` for `k in 0..n`.
    Uniform(usize),
    /// `n` angles drawn uniformly from `[0, 180)` with the config seed.
    Random(usize),
}

impl AngleGrid {
    /// `stream` separates the train and test draws of a random grid.
    pub fn resolve(&self, seed: u64, stream: u64) -> Vec<f64> {
        match self {
            AngleGrid::List(v) => v.clone(),
            AngleGrid::Uniform(n) => (0..*n).map(|k| k as f64 * 180.0 / *n as f64).collect(),
            AngleGrid::Random(n) => {
                let mut rng = eqws_core::rng::stream(seed, stream);
                (0..*n).map(|_| rng.gen_range(0.0..180.0)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AngleConfig {
    pub train: AngleGrid,
    pub test: AngleGrid,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl Default for AngleConfig {
    fn default() -> Self {
        AngleConfig {
            train: AngleGrid::List(vec![0.0]),
            test: AngleGrid::List(vec![0.0]),
            interpolation: Interpolation::Bicubic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Reg,
    Iso,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Reg => "reg",
            FeatureSet::Iso => "iso",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Lda,
    /// Least squares on one-hot class targets.
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub ridge: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::Lda,
            ridge: eqws_core::learn::DEFAULT_RIDGE,
        }
    }
}

/// Settings for the rotation-stability metric on ISO coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltaConfig {
    /// First `images` test images, at every test angle.
    pub images: usize,
    /// Leave out `mu0` and `sigma0sq`, which are raw image statistics
    /// rather than fractions of image power.
    pub exclude_s0: bool,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig {
            images: 500,
            exclude_s0: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineConfig {
    pub bank: FilterBankParams,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub angles: AngleConfig,
    #[serde(default = "default_features")]
    pub features: Vec<FeatureSet>,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub delta: Option<DeltaConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker cap; `None` defers to `--threads` / `EQWS_THREADS`.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_features() -> Vec<FeatureSet> {
    vec![FeatureSet::Iso, FeatureSet::Reg]
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form. The output directory and the
    /// thread cap do not change results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.threads = None;
        let compact = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&compact))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::config("config", msg));
        self.bank
            .validate()
            .map_err(|e| CliError::config("config", e.to_string()))?;
        if self.features.is_empty() {
            return bad("at least one feature set is required".into());
        }
        if !(self.learner.ridge >= 0.0 && self.learner.ridge.is_finite()) {
            return bad(format!("ridge must be >= 0, got {}", self.learner.ridge));
        }
        for (name, grid) in [("train", &self.angles.train), ("test", &self.angles.test)] {
            let v = grid.resolve(self.seed, 0);
            if v.is_empty() {
                return bad(format!("{name} angle grid is empty"));
            }
            if v.iter().any(|a| !a.is_finite()) {
                return bad(format!("{name} angles must be finite"));
            }
        }
        if self.dataset.format != DatasetFormat::Cifar
            && (self.dataset.train.labels.is_none() || self.dataset.test.labels.is_none())
        {
            return bad("IDX datasets need label files for both splits".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn train_angles(&self) -> Vec<f64> {
        self.angles.train.resolve(self.seed, 1)
    }

    pub fn test_angles(&self) -> Vec<f64> {
        self.angles.test.resolve(self.seed, 2)
    }

    /// The same run with every angle grid written out as a list.
    pub fn resolved(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.angles.train = AngleGrid::List(self.train_angles());
        c.angles.test = AngleGrid::List(self.test_angles());
        c
    }
}
