//! ingest -> preprocess -> rotate -> scatter -> reduce -> learn.

use std::path::Path;

use eqws_core::io::{load_cifar, load_emnist, load_idx, preprocess, DatasetBatch};
use eqws_core::learn::color::rgb_to_grey;
use eqws_core::learn::{
    confusion_csv, confusion_matrix, lda_fit, metrics, one_hot_classifier, stability_delta, LdaAccumulator,
};
use eqws_core::{iso_reduce, FilterBank, LinearModel, ScatterEngine, ScatteringCoefficients};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetFormat, FeatureSet, LearnerKind, PipelineConfig, SplitFiles};
use crate::error::{CliError, CliResult, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AngleAccuracy {
    pub angle: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureReport {
    pub feature: FeatureSet,
    pub n_features: usize,
    pub per_angle: Vec<AngleAccuracy>,
    pub mean_accuracy: f64,
    /// Population standard deviation over test angles.
    pub std_accuracy: f64,
    /// Summed over every test angle, rows = truth.
    pub confusion: Vec<Vec<u64>>,
}

/// `NR` for a single unrotated angle, `R` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeCell {
    pub feature: FeatureSet,
    pub train: String,
    pub test: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltaReport {
    pub images: usize,
    pub angles: usize,
    pub exclude_s0: bool,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub config_hash: String,
    pub bank_id: String,
    pub side: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_classes: usize,
    pub train_angles: Vec<f64>,
    pub test_angles: Vec<f64>,
    pub features: Vec<FeatureReport>,
    pub regimes: Vec<RegimeCell>,
    pub delta: Option<DeltaReport>,
}

impl ExperimentReport {
    pub fn feature(&self, f: FeatureSet) -> Option<&FeatureReport> {
        self.features.iter().find(|r| r.feature == f)
    }
}

fn regime(angles: &[f64]) -> &'static str {
    if angles.len() == 1 && angles[0].rem_euclid(180.0) == 0.0 {
        "NR"
    } else {
        "R"
    }
}

fn load_split(format: DatasetFormat, split: &SplitFiles) -> CliResult<DatasetBatch> {
    let labels = || {
        split
            .labels
            .as_ref()
            .ok_or_else(|| CliError::config("ingest", "missing label file"))
    };
    let batch = match format {
        DatasetFormat::Idx => load_idx(&split.images, labels()?, false).stage("ingest")?,
        DatasetFormat::Emnist => load_emnist(&split.images, labels()?).stage("ingest")?,
        DatasetFormat::Cifar => load_cifar(&split.images).stage("ingest")?,
    };
    Ok(match split.count {
        Some(n) if n > batch.count => {
            return Err(CliError::data(
                "ingest",
                format!("{} holds {} images, {n} requested", split.images.display(), batch.count),
            ))
        }
        Some(n) => batch.subset(0, n),
        None => batch,
    })
}

fn features_of(c: &ScatteringCoefficients, f: FeatureSet) -> Vec<f64> {
    match f {
        FeatureSet::Reg => c.to_vec(),
        FeatureSet::Iso => iso_reduce(c).to_vec(),
    }
}

/// Scatters every image of `batch` rotated by `angle`. Colour images are
/// reduced to grey first.
fn scatter_rotated(
    engine: &ScatterEngine,
    batch: &DatasetBatch,
    angle: f64,
    cfg: &PipelineConfig,
) -> CliResult<Vec<ScatteringCoefficients>> {
    use rayon::prelude::*;
    let method = cfg.angles.interpolation;
    let images = batch.images().stage("rotate")?;
    let rotated = images
        .par_iter()
        .map(|img| {
            let grey = if img.channels() == 3 {
                rgb_to_grey(img)?
            } else {
                img.clone()
            };
            eqws_core::synth::rotate(&grey, angle, method)
        })
        .collect::<eqws_core::Result<Vec<_>>>()
        .stage("rotate")?;
    engine.scatter_batch(&rotated).stage("scatter")
}

enum Trainer {
    Lda(LdaAccumulator),
    Rows(Vec<Vec<f64>>, Vec<usize>),
}

impl Trainer {
    fn push(&mut self, row: Vec<f64>, label: usize) -> CliResult<()> {
        match self {
            Trainer::Lda(acc) => acc.push(&row, label).stage("learn"),
            Trainer::Rows(x, y) => {
                x.push(row);
                y.push(label);
                Ok(())
            }
        }
    }

    fn fit(self, cfg: &PipelineConfig) -> CliResult<LinearModel> {
        let ridge = cfg.learner.ridge;
        match self {
            Trainer::Lda(acc) => acc.fit(ridge).stage("learn"),
            Trainer::Rows(x, y) => match cfg.learner.kind {
                LearnerKind::Lda => lda_fit(&x, &y, ridge).stage("learn"),
                LearnerKind::Regression => one_hot_classifier(&x, &y, ridge).stage("learn"),
            },
        }
    }
}

fn run_inner(cfg: &PipelineConfig) -> CliResult<ExperimentReport> {
    cfg.validate()?;
    let resolved = cfg.resolved();
    let train_angles = resolved.train_angles();
    let test_angles = resolved.test_angles();
    let ds = &cfg.dataset;

    let train = load_split(ds.format, &ds.train)?;
    let test = load_split(ds.format, &ds.test)?;
    let train = preprocess(&train, &ds.preprocess).stage("preprocess")?;
    let test = preprocess(&test, &ds.preprocess).stage("preprocess")?;
    if train.width != cfg.bank.side() || test.width != cfg.bank.side() {
        return Err(CliError::config(
            "preprocess",
            format!(
                "preprocessed images are {}², the bank expects {}²",
                train.width,
                cfg.bank.side()
            ),
        ));
    }
    let n_classes = train.labels.iter().chain(&test.labels).max().map_or(0, |m| m + 1);

    let bank = FilterBank::build(cfg.bank.clone()).stage("filterbank")?;
    let engine = ScatterEngine::new(&bank);
    let layout = eqws_core::CoefficientLayout::for_bank(&bank);
    let width = |f: FeatureSet| match f {
        FeatureSet::Reg => layout.reg_len(),
        FeatureSet::Iso => layout.iso_len(),
    };

    let mut trainers: Vec<Trainer> = cfg
        .features
        .iter()
        .map(|&f| match cfg.learner.kind {
            LearnerKind::Lda => Trainer::Lda(LdaAccumulator::new(width(f), n_classes)),
            LearnerKind::Regression => Trainer::Rows(Vec::new(), Vec::new()),
        })
        .collect();
    for &angle in &train_angles {
        let coeffs = scatter_rotated(&engine, &train, angle, cfg)?;
        for (c, &label) in coeffs.iter().zip(&train.labels) {
            for (t, &f) in trainers.iter_mut().zip(&cfg.features) {
                t.push(features_of(c, f), label)?;
            }
        }
    }
    let models = trainers
        .into_iter()
        .map(|t| t.fit(cfg))
        .collect::<CliResult<Vec<_>>>()?;

    let delta_images = cfg.delta.map_or(0, |d| d.images.min(test.count));
    let skip = if cfg.delta.is_some_and(|d| d.exclude_s0) { 2 } else { 0 };
    let mut delta_rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(test_angles.len()); delta_images];
    let mut per_angle: Vec<Vec<AngleAccuracy>> = vec![Vec::new(); cfg.features.len()];
    let mut confusion = vec![vec![vec![0u64; n_classes]; n_classes]; cfg.features.len()];
    for &angle in &test_angles {
        let coeffs = scatter_rotated(&engine, &test, angle, cfg)?;
        for (k, (&f, model)) in cfg.features.iter().zip(&models).enumerate() {
            let predicted = coeffs
                .iter()
                .map(|c| model.predict_class(&features_of(c, f)))
                .collect::<eqws_core::Result<Vec<_>>>()
                .stage("predict")?;
            per_angle[k].push(AngleAccuracy {
                angle,
                accuracy: metrics::accuracy(&predicted, &test.labels),
            });
            let m = confusion_matrix(&predicted, &test.labels, n_classes);
            for (acc, row) in confusion[k].iter_mut().zip(m) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
        }
        for (rows, c) in delta_rows.iter_mut().zip(&coeffs) {
            rows.push(iso_reduce(c).to_vec()[skip..].to_vec());
        }
    }

    let delta = match cfg.delta {
        Some(d) if test_angles.len() >= 2 && delta_images > 0 => Some(DeltaReport {
            images: delta_images,
            angles: test_angles.len(),
            exclude_s0: d.exclude_s0,
            delta: stability_delta(&delta_rows).stage("delta")?,
        }),
        _ => None,
    };

    let (tr, te) = (regime(&train_angles), regime(&test_angles));
    let mut features = Vec::new();
    let mut regimes = Vec::new();
    for ((f, acc), conf) in cfg.features.iter().zip(per_angle).zip(confusion) {
        let values: Vec<f64> = acc.iter().map(|a| a.accuracy).collect();
        let mean = metrics::mean(&values);
        regimes.push(RegimeCell {
            feature: *f,
            train: tr.into(),
            test: te.into(),
            accuracy: mean,
        });
        features.push(FeatureReport {
            feature: *f,
            n_features: width(*f),
            mean_accuracy: mean,
            std_accuracy: metrics::population_std(&values),
            per_angle: acc,
            confusion: conf,
        });
    }

    Ok(ExperimentReport {
        config_hash: resolved.hash(),
        bank_id: bank.id().to_string(),
        side: bank.side(),
        n_train: train.count,
        n_test: test.count,
        n_classes,
        train_angles,
        test_angles,
        features,
        regimes,
        delta,
    })
}

/// Runs the pipeline; any failure carries the stage and config hash.
pub fn run_experiment(cfg: &PipelineConfig) -> CliResult<ExperimentReport> {
    let hash = cfg.resolved().hash();
    let pool = crate::thread_pool(crate::resolve_threads(cfg.threads, None)?)?;
    pool.install(|| run_inner(cfg)).map_err(|e| e.with_hash(&hash))
}

/// Writes `config.resolved.json`, `report.json`, `accuracy_vs_angle.csv`,
/// `regimes.csv` and one `confusion_<feature>.csv` per feature set.
pub fn write_outputs(dir: &Path, cfg: &PipelineConfig, report: &ExperimentReport) -> CliResult<()> {
    std::fs::create_dir_all(dir).stage("output")?;
    let mut resolved = cfg.resolved();
    resolved.output = Some(dir.to_path_buf());
    std::fs::write(dir.join("config.resolved.json"), resolved.to_json()).stage("output")?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(dir.join("report.json"), json).stage("output")?;

    let mut csv = String::from("angle");
    for f in &report.features {
        csv.push(',');
        csv.push_str(f.feature.name());
    }
    csv.push('\n');
    for (i, angle) in report.test_angles.iter().enumerate() {
        csv.push_str(&angle.to_string());
        for f in &report.features {
            csv.push_str(&format!(",{}", f.per_angle[i].accuracy));
        }
        csv.push('\n');
    }
    std::fs::write(dir.join("accuracy_vs_angle.csv"), csv).stage("output")?;

    let mut cells = String::from("feature,train,test,accuracy\n");
    for c in &report.regimes {
        cells.push_str(&format!("{},{},{},{}\n", c.feature.name(), c.train, c.test, c.accuracy));
    }
    std::fs::write(dir.join("regimes.csv"), cells).stage("output")?;
    for f in &report.features {
        let name = format!("confusion_{}.csv", f.feature.name());
        std::fs::write(dir.join(name), confusion_csv(&f.confusion)).stage("output")?;
    }
    Ok(())
}
