//! Argument parsing and the subcommand bodies behind the `eqws` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use eqws_core::io::{
    load_bank, read_npy, read_table, save_bank, write_npy, write_table, NpyArray, NpyData, TableKind, TableManifest,
};
use eqws_core::learn::{
    angle, confusion_csv, confusion_matrix, greedy_throwout, lda_fit, linreg_fit, metrics, one_hot_classifier,
    stability_delta, ThrowoutOptions, DEFAULT_RIDGE,
};
use eqws_core::reduction::{iso_reduce_vec, log_normalize_rwst, r_rwst_select, rwst_fit, LogScaler};
use eqws_core::synth::{make_arc, make_disc, make_rod};
use eqws_core::{
    ArcSpec, CoefficientLayout, DiscSpec, FilterBank, FilterBankParams, ImageField, LinearModel, RodSpec,
    ScatterEngine, ScatteringCoefficients,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::benchmark::{run_benchmark, BenchmarkConfig};
use crate::config::PipelineConfig;
use crate::criteria::{canned_config, run_criterion, CRITERIA};
use crate::error::{CliError, CliResult, Stage};
use crate::experiment::{run_experiment, write_outputs};

#[derive(Debug, Parser)]
#[command(name = "eqws", version, about = "Equivariant wavelet scattering pipelines")]
pub struct Cli {
    /// Worker thread cap; defaults to EQWS_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or verify a triglet filter bank.
    #[command(subcommand)]
    Filterbank(FilterbankCmd),
    /// Write a synthetic test image or a sweep batch.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Scatter a batch of images into a coefficient table.
    Scatter(ScatterArgs),
    /// Reduce a coefficient table.
    Reduce(ReduceArgs),
    /// Fit or evaluate a linear model on a feature table.
    Learn(LearnArgs),
    /// Run a full pipeline from a JSON config.
    Experiment(ExperimentArgs),
    /// Time the sparse and dense scattering paths.
    Benchmark(BenchmarkArgs),
    /// Re-run acceptance checks from their canned setups.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
pub struct BankArgs {
    #[arg(long = "L", default_value_t = 8)]
    pub angles: usize,
    #[arg(long = "c", default_value_t = 1)]
    pub radial_density: usize,
    #[arg(long = "t", default_value_t = 1)]
    pub plane: u8,
    #[arg(long = "p", default_value_t = 2)]
    pub pooling: u8,
    #[arg(long = "jim", default_value_t = 8)]
    pub log2_size: u32,
    #[arg(long = "w-base", default_value_t = 2)]
    pub base_width: usize,
    #[arg(long, default_value_t = 1.0)]
    pub width_slack: f64,
}

impl BankArgs {
    fn params(&self) -> FilterBankParams {
        FilterBankParams {
            angles: self.angles,
            radial_density: self.radial_density,
            plane: self.plane,
            base_width: self.base_width,
            pooling: self.pooling,
            log2_size: self.log2_size,
            width_slack: self.width_slack,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum FilterbankCmd {
    Build {
        #[command(flatten)]
        bank: BankArgs,
        /// JSON file of bank parameters; overrides the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reload a saved bank, verify checksums and re-check flatness.
    Check { dir: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum SynthCmd {
    Rod {
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 180.0)]
        delta: f64,
        #[arg(long, default_value_t = 40.0)]
        arm: f64,
        #[arg(long, default_value_t = 6.0)]
        fwhm: f64,
        #[arg(long, default_value_t = 256)]
        side: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Arc {
        #[arg(long, default_value_t = 1.0)]
        fbend: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 20.0)]
        length: f64,
        #[arg(long, default_value_t = 6.0)]
        fwhm: f64,
        #[arg(long, default_value_t = 256)]
        side: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Disc {
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 2.0)]
        fwhm: f64,
        #[arg(long, default_value_t = 256)]
        side: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep batch: `images.npy` (count x side x side) plus `params.json`.
    Grid {
        #[arg(long, value_enum)]
        kind: GridKind,
        /// Samples per axis.
        #[arg(long, default_value_t = 16)]
        steps: usize,
        #[arg(long, default_value_t = 256)]
        side: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GridKind {
    /// Σ and Δ over [0, 360).
    Rod,
    /// Σ over [0, 360), fBend over (0, 1].
    Arc,
    /// Radius and FWHM log-spaced over [0.5, 64].
    Disc,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long)]
    pub bank: PathBuf,
    /// `(n, side, side)` or, with `--color`, `(n, channels, side, side)`.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Emit the cross-channel second-order tables.
    #[arg(long)]
    pub color: bool,
    /// Override the bank's pooling power.
    #[arg(long)]
    pub p: Option<u8>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum ReduceMode {
    Iso,
    Rwst,
    RRwst,
    Log,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long, value_enum)]
    pub mode: ReduceMode,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Log floor for `rwst` / `log`; picked from the data when absent.
    #[arg(long)]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum LearnMode {
    Lda,
    Regress,
    Throwout,
    Angle,
    Delta,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(value_enum)]
    pub mode: LearnMode,
    #[arg(long)]
    pub features: PathBuf,
    /// Class ids (NPY or IDX), or angles in degrees for `angle`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; the config's `output` wins when both are set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sizes as log2 of the side.
    #[arg(long, value_delimiter = ',')]
    pub jim: Option<Vec<u32>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Criterion number 1-13, or `all`.
    pub criterion: String,
    /// Print the canned setup instead of running it.
    #[arg(long)]
    pub show_config: bool,
    /// Write `criterion_NN.json` outcome files here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options for `learn`, read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LearnOptions {
    pub ridge: f64,
    pub min_dims: usize,
    pub trials: usize,
    pub seed: u64,
    pub test_fraction: f64,
    /// Rows per image for `delta`: consecutive rows are one image at
    /// successive angles.
    pub angles_per_image: usize,
    /// Leading columns dropped before `delta`.
    pub skip_columns: usize,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions {
            ridge: DEFAULT_RIDGE,
            min_dims: 9,
            trials: 5,
            seed: 0,
            test_fraction: 0.25,
            angles_per_image: 10,
            skip_columns: 0,
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Filterbank(cmd) => filterbank(cmd),
        Command::Synth(cmd) => synth(cmd),
        Command::Scatter(a) => with_pool(cli.threads, || scatter(&a)),
        Command::Reduce(a) => reduce(&a),
        Command::Learn(a) => learn(&a),
        Command::Experiment(a) => experiment(&a, cli.threads),
        Command::Benchmark(a) => benchmark(&a),
        Command::Repro(a) => with_pool(cli.threads, || repro(&a)),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = crate::thread_pool(crate::resolve_threads(None, threads)?)?;
    pool.install(f)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).stage("output")?;
    }
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text).stage("output")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
}

fn filterbank(cmd: FilterbankCmd) -> CliResult<()> {
    match cmd {
        FilterbankCmd::Build { bank, config, out } => {
            let params = match config {
                Some(p) => read_json(&p)?,
                None => bank.params(),
            };
            let b = FilterBank::build(params).stage("filterbank")?;
            let manifest = save_bank(&out, &b).stage("filterbank")?;
            let f = b.flatness();
            println!(
                "bank {} ({} filters, {}²) written to {}; flatness {:.2e}",
                manifest.bank_id,
                manifest.filters.len(),
                b.side(),
                out.display(),
                f.max_deviation
            );
            Ok(())
        }
        FilterbankCmd::Check { dir } => {
            let b = load_bank(&dir).stage("filterbank")?;
            let f = b.flatness();
            println!(
                "bank {}: checksums ok, max |sum psi^2 + phi^2 - 1| = {:.2e}",
                b.id(),
                f.max_deviation
            );
            if f.max_deviation > 1e-10 {
                return Err(CliError {
                    stage: "filterbank".into(),
                    class: eqws_core::ErrorClass::Numerical,
                    message: format!("flatness deviation {:.2e} exceeds 1e-10", f.max_deviation),
                    config_hash: None,
                });
            }
            Ok(())
        }
    }
}

fn image_npy(images: &[ImageField]) -> CliResult<NpyArray> {
    let side = images.first().map_or(0, |i| i.side());
    let data: Vec<f64> = images.iter().flat_map(|i| i.data().iter().copied()).collect();
    let shape = if images.len() == 1 {
        vec![side, side]
    } else {
        vec![images.len(), side, side]
    };
    NpyArray::f64(shape, data).stage("output")
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn synth(cmd: SynthCmd) -> CliResult<()> {
    let (images, out) = match cmd {
        SynthCmd::Rod {
            sigma,
            delta,
            arm,
            fwhm,
            side,
            out,
        } => {
            let spec = RodSpec {
                sigma_angle: sigma,
                opening_angle: delta,
                arm_length: arm,
                fwhm,
                side,
            };
            (vec![make_rod(&spec).stage("synth")?], out)
        }
        SynthCmd::Arc {
            fbend,
            sigma,
            length,
            fwhm,
            side,
            out,
        } => {
            let spec = ArcSpec {
                f_bend: fbend,
                sigma_angle: sigma,
                rod_length: length,
                fwhm,
                side,
            };
            (vec![make_arc(&spec).stage("synth")?], out)
        }
        SynthCmd::Disc {
            radius,
            fwhm,
            side,
            out,
        } => (vec![make_disc(&DiscSpec { radius, fwhm, side }).stage("synth")?], out),
        SynthCmd::Grid { kind, steps, side, out } => return synth_grid(kind, steps, side, &out),
    };
    write_npy(&out, &image_npy(&images)?).stage("output")?;
    println!("wrote {}", out.display());
    Ok(())
}

fn synth_grid(kind: GridKind, steps: usize, side: usize, out: &Path) -> CliResult<()> {
    if steps == 0 {
        return Err(CliError::config("synth", "steps must be at least 1"));
    }
    let angles: Vec<f64> = (0..steps).map(|k| k as f64 * 360.0 / steps as f64).collect();
    // Default geometry is for 256 x 256; other sides scale it.
    let scale = side as f64 / 256.0;
    let fwhm = (6.0 * scale).max(1.0);
    let mut images = Vec::new();
    let mut params = Vec::new();
    match kind {
        GridKind::Rod => {
            for &delta in &angles {
                for &sigma in &angles {
                    let spec = RodSpec {
                        sigma_angle: sigma,
                        opening_angle: delta,
                        arm_length: 40.0 * scale,
                        fwhm,
                        side,
                    };
                    images.push(make_rod(&spec).stage("synth")?);
                    params.push(serde_json::to_value(spec).expect("spec serializes"));
                }
            }
        }
        GridKind::Arc => {
            let bends: Vec<f64> = (1..=steps).map(|k| k as f64 / steps as f64).collect();
            for &f_bend in &bends {
                for &sigma in &angles {
                    let spec = ArcSpec {
                        f_bend,
                        sigma_angle: sigma,
                        rod_length: 20.0 * scale,
                        fwhm,
                        side,
                    };
                    images.push(make_arc(&spec).stage("synth")?);
                    params.push(serde_json::to_value(spec).expect("spec serializes"));
                }
            }
        }
        GridKind::Disc => {
            let axis = log_space(0.5, side as f64 / 4.0, steps);
            for &fwhm in &axis {
                for &radius in &axis {
                    let spec = DiscSpec { radius, fwhm, side };
                    images.push(make_disc(&spec).stage("synth")?);
                    params.push(serde_json::to_value(spec).expect("spec serializes"));
                }
            }
        }
    }
    std::fs::create_dir_all(out).stage("output")?;
    let mut batch = image_npy(&images)?;
    if images.len() == 1 {
        batch.shape.insert(0, 1);
    }
    write_npy(out.join("images.npy"), &batch).stage("output")?;
    write_json(
        &out.join("params.json"),
        &json!({ "kind": format!("{kind:?}").to_lowercase(), "side": side, "images": params }),
    )?;
    println!("wrote {} images to {}", images.len(), out.display());
    Ok(())
}

/// Splits an image array into fields; `color` keeps a channel axis.
fn npy_images(array: NpyArray, color: bool) -> CliResult<Vec<ImageField>> {
    let shape = array.shape.clone();
    let data = array.to_f64();
    let bad = || CliError::data("scatter", format!("unexpected image array shape {shape:?}"));
    let (n, channels, side) = match (color, shape.as_slice()) {
        (false, [h, w]) if h == w => (1, 1, *h),
        (false, [n, h, w]) if h == w => (*n, 1, *h),
        (true, [c, h, w]) if h == w => (1, *c, *h),
        (true, [n, c, h, w]) if h == w => (*n, *c, *h),
        _ => return Err(bad()),
    };
    let len = channels * side * side;
    (0..n)
        .map(|i| ImageField::with_channels(side, channels, data[i * len..(i + 1) * len].to_vec()).stage("scatter"))
        .collect()
}

fn manifest_path(npy: &Path) -> PathBuf {
    npy.with_extension("json")
}

fn scatter(a: &ScatterArgs) -> CliResult<()> {
    use rayon::prelude::*;
    let mut bank = load_bank(&a.bank).stage("filterbank")?;
    if let Some(p) = a.p {
        bank = bank.with_pooling(p).stage("filterbank")?;
    }
    let images = npy_images(read_npy(&a.images).stage("ingest")?, a.color)?;
    let engine = ScatterEngine::new(&bank);
    let layout = CoefficientLayout::for_bank(&bank);
    let (rows, columns) = if a.color {
        let out = images
            .par_iter()
            .map(|img| engine.scatter_color(img))
            .collect::<eqws_core::Result<Vec<_>>>()
            .stage("scatter")?;
        let names = out.first().map_or_else(Vec::new, |c| color_names(layout, &c.pairs));
        let rows = out
            .iter()
            .map(|c| {
                let mut row: Vec<f64> = c.s0.iter().flat_map(|&(m, s)| [m, s]).collect();
                row.extend(c.to_vec());
                row
            })
            .collect::<Vec<_>>();
        (rows, names)
    } else {
        let out = engine.scatter_batch(&images).stage("scatter")?;
        (
            out.iter().map(ScatteringCoefficients::to_vec).collect(),
            layout.reg_names(),
        )
    };
    let mut manifest = TableManifest::new(
        if a.color { TableKind::Features } else { TableKind::Reg },
        rows.len(),
        columns,
    );
    manifest.n_scales = Some(layout.n_scales);
    manifest.n_angles = Some(layout.n_angles);
    manifest.pooling = Some(bank.params().pooling);
    manifest.bank_id = Some(bank.id().to_string());
    manifest.source = json!({ "images": a.images, "bank": a.bank, "color": a.color });
    write_table(&a.out, manifest_path(&a.out), &rows, &manifest).stage("output")?;
    println!("scattered {} images into {}", rows.len(), a.out.display());
    Ok(())
}

fn color_names(layout: CoefficientLayout, pairs: &[(usize, usize)]) -> Vec<String> {
    let channels = pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    let mut out = Vec::new();
    for c in 0..channels {
        out.push(format!("mu0[c={c}]"));
        out.push(format!("sigma0sq[c={c}]"));
    }
    let (nj, nl) = (layout.n_scales, layout.n_angles);
    for &(c1, c2) in pairs {
        for m1 in 0..nj * nl {
            for m2 in 0..nj * nl {
                out.push(format!(
                    "s2x[c1={c1},c2={c2},j1={},l1={},j2={},l2={}]",
                    m1 / nl,
                    m1 % nl,
                    m2 / nl,
                    m2 % nl
                ));
            }
        }
    }
    out
}

fn rwst_names(nj: usize) -> Vec<String> {
    let mut out = vec!["s0".to_string()];
    for what in ["iso", "aniso", "lref"] {
        out.extend((0..nj).map(|j| format!("{what}[j={j}]")));
    }
    let pairs: Vec<(usize, usize)> = (0..nj).flat_map(|a| (a + 1..nj).map(move |b| (a, b))).collect();
    for what in ["iso1", "iso2", "aniso1", "aniso2", "lref"] {
        out.extend(pairs.iter().map(|(a, b)| format!("{what}[j1={a},j2={b}]")));
    }
    out
}

fn r_rwst_names(nj: usize) -> Vec<String> {
    let mut out = vec!["s0".to_string()];
    out.extend((0..nj).map(|j| format!("iso[j={j}]")));
    for a in 0..nj {
        for b in a + 1..nj {
            out.push(format!("iso1[j1={a},j2={b}]"));
        }
    }
    out
}

fn reduce(a: &ReduceArgs) -> CliResult<()> {
    let (rows, input) = read_table(&a.input, &a.manifest).stage("ingest")?;
    let layout = input.layout().stage("ingest")?;
    let needs_reg = a.mode != ReduceMode::Log;
    if needs_reg && input.kind != TableKind::Reg {
        return Err(CliError::data(
            "reduce",
            format!("{:?} needs a REG table, got {:?}", a.mode, input.kind),
        ));
    }
    let (kind, rows, columns) = match a.mode {
        ReduceMode::Iso => {
            let out = rows
                .iter()
                .map(|r| iso_reduce_vec(layout, r))
                .collect::<eqws_core::Result<Vec<_>>>()
                .stage("reduce")?;
            (TableKind::Iso, out, layout.iso_names())
        }
        ReduceMode::Rwst | ReduceMode::RRwst => {
            let mut out = Vec::with_capacity(rows.len());
            for r in &rows {
                let c = ScatteringCoefficients::from_vec(layout, r).stage("reduce")?;
                let fit = rwst_fit(&log_normalize_rwst(&c, a.floor).stage("reduce")?).stage("reduce")?;
                out.push(if a.mode == ReduceMode::Rwst {
                    fit.to_vec()
                } else {
                    r_rwst_select(&fit)
                });
            }
            if a.mode == ReduceMode::Rwst {
                (TableKind::Rwst, out, rwst_names(layout.n_scales))
            } else {
                (TableKind::RRwst, out, r_rwst_names(layout.n_scales))
            }
        }
        ReduceMode::Log => {
            let floor = a
                .floor
                .unwrap_or_else(|| eqws_core::reduction::default_floor(rows.iter().flatten().copied()));
            let scaler = LogScaler::fit(rows.iter().map(|r| r.as_slice()), floor).stage("reduce")?;
            let out = rows
                .iter()
                .map(|r| scaler.transform(r))
                .collect::<eqws_core::Result<Vec<_>>>()
                .stage("reduce")?;
            write_json(&a.out.with_extension("scaler.json"), &scaler)?;
            (TableKind::Log, out, input.columns.clone())
        }
    };
    let mut manifest = TableManifest::new(kind, rows.len(), columns);
    manifest.n_scales = input.n_scales;
    manifest.n_angles = input.n_angles;
    manifest.pooling = input.pooling;
    manifest.bank_id = input.bank_id.clone();
    manifest.source = json!({ "from": a.input, "mode": format!("{:?}", a.mode).to_lowercase() });
    write_table(&a.out, manifest_path(&a.out), &rows, &manifest).stage("output")?;
    println!("reduced {} rows to {} columns", rows.len(), manifest.columns.len());
    Ok(())
}

/// Feature rows from an NPY matrix (`n x d`) or vector (`n`, one column).
fn read_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let array = read_npy(path).stage("ingest")?;
    match array.shape.len() {
        1 => Ok(array.to_f64().into_iter().map(|v| vec![v]).collect()),
        2 => Ok(NpyArray::f64(array.shape.clone(), array.to_f64())
            .and_then(NpyArray::into_rows)
            .stage("ingest")?),
        _ => Err(CliError::data(
            "ingest",
            format!("expected a 2-D feature array, got {:?}", array.shape),
        )),
    }
}

fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    if path.extension().is_some_and(|e| e == "npy") {
        let array = read_npy(path).stage("ingest")?;
        return Ok(match array.data {
            NpyData::U8(v) => v.into_iter().map(f64::from).collect(),
            NpyData::F64(v) => v,
        });
    }
    let idx = eqws_core::io::idx::read_idx(path, Some(1)).stage("ingest")?;
    Ok(idx.data.into_iter().map(f64::from).collect())
}

fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    read_values(path)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::data("ingest", format!("label {v} is not a class id")))
            }
        })
        .collect()
}

fn classification_report(model: &LinearModel, x: &[Vec<f64>], y: &[usize], out: &Path) -> CliResult<serde_json::Value> {
    let predicted = x
        .iter()
        .map(|r| model.predict_class(r))
        .collect::<eqws_core::Result<Vec<_>>>()
        .stage("predict")?;
    let k = y.iter().chain(&predicted).max().map_or(0, |m| m + 1);
    let confusion = confusion_matrix(&predicted, y, k);
    std::fs::write(out.with_extension("confusion.csv"), confusion_csv(&confusion)).stage("output")?;
    Ok(json!({
        "accuracy": metrics::accuracy(&predicted, y),
        "confusion": confusion,
        "model": model,
    }))
}

fn learn(a: &LearnArgs) -> CliResult<()> {
    let opts: LearnOptions = match &a.config {
        Some(p) => read_json(p)?,
        None => LearnOptions::default(),
    };
    let x = read_rows(&a.features)?;
    let need_labels = || {
        a.labels
            .as_deref()
            .ok_or_else(|| CliError::config("learn", "--labels is required for this mode"))
    };
    let report = match a.mode {
        LearnMode::Lda => {
            let y = read_labels(need_labels()?)?;
            let m = lda_fit(&x, &y, opts.ridge).stage("learn")?;
            classification_report(&m, &x, &y, &a.out)?
        }
        LearnMode::Regress => {
            let y = read_labels(need_labels()?)?;
            let m = one_hot_classifier(&x, &y, opts.ridge).stage("learn")?;
            classification_report(&m, &x, &y, &a.out)?
        }
        LearnMode::Throwout => {
            let y = read_labels(need_labels()?)?;
            let options = ThrowoutOptions {
                test_fraction: opts.test_fraction,
                ridge: opts.ridge,
            };
            let r = greedy_throwout(&x, &y, opts.min_dims, opts.trials, opts.seed, options).stage("learn")?;
            serde_json::to_value(r).expect("report serializes")
        }
        LearnMode::Angle => {
            let angles = read_values(need_labels()?)?;
            let targets: Vec<Vec<f64>> = angles.iter().map(|&t| angle::angle_targets(t).to_vec()).collect();
            let m = linreg_fit(&x, &targets, opts.ridge).stage("learn")?;
            let est = x
                .iter()
                .map(|r| angle::estimate_angle(&m, r).map(|e| e.theta))
                .collect::<eqws_core::Result<Vec<_>>>()
                .stage("predict")?;
            json!({
                "circularStd": angle::circular_std(&angles, &est),
                "rms": angle::angle_rms(&angles, &est),
                "estimates": est,
                "model": m,
            })
        }
        LearnMode::Delta => {
            let k = opts.angles_per_image;
            if k < 2 || x.len() % k != 0 {
                return Err(CliError::config(
                    "learn",
                    format!("{} rows do not split into images of {k} angles", x.len()),
                ));
            }
            let samples: Vec<Vec<Vec<f64>>> = x
                .chunks(k)
                .map(|c| c.iter().map(|r| r[opts.skip_columns.min(r.len())..].to_vec()).collect())
                .collect();
            json!({ "delta": stability_delta(&samples).stage("learn")?, "images": samples.len(), "angles": k })
        }
    };
    write_json(&a.out, &report)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn experiment(a: &ExperimentArgs, threads: Option<usize>) -> CliResult<()> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if cfg.threads.is_none() {
        cfg.threads = threads;
    }
    let dir = cfg
        .output
        .clone()
        .or_else(|| a.out.clone())
        .ok_or_else(|| CliError::config("config", "no output directory: set `output` or pass --out"))?;
    let report = run_experiment(&cfg)?;
    write_outputs(&dir, &cfg, &report).map_err(|e| e.with_hash(&report.config_hash))?;
    for f in &report.features {
        println!(
            "{}: mean accuracy {:.2}%, std over angles {:.2}%",
            f.feature.name(),
            100.0 * f.mean_accuracy,
            100.0 * f.std_accuracy
        );
    }
    if let Some(d) = &report.delta {
        println!("delta {:.3e}", d.delta);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> CliResult<()> {
    let mut cfg: BenchmarkConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => BenchmarkConfig::default(),
    };
    if a.config.is_none() {
        if let Some(j) = &a.jim {
            cfg.log2_sizes = j.clone();
        }
        if let Some(r) = a.repeats {
            cfg.repeats = r;
        }
    }
    let report = run_benchmark(&cfg)?;
    print!("{}", report.to_csv());
    if let Some(out) = &a.out {
        write_json(out, &report)?;
        std::fs::write(out.with_extension("csv"), report.to_csv()).stage("output")?;
    }
    Ok(())
}

fn repro(a: &ReproArgs) -> CliResult<()> {
    let ids: Vec<u8> = if a.criterion == "all" {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        let id: u8 = a
            .criterion
            .parse()
            .ok()
            .filter(|i| (1..=13).contains(i))
            .ok_or_else(|| CliError::config("repro", format!("unknown criterion {:?}", a.criterion)))?;
        vec![id]
    };
    if a.show_config {
        for id in ids {
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({ "criterion": id, "setup": canned_config(id) })).expect("json")
            );
        }
        return Ok(());
    }
    let mut cache = None;
    let mut all_passed = true;
    for id in ids {
        let outcome = run_criterion(id, &mut cache);
        println!("{outcome}");
        all_passed &= outcome.passed();
        if let Some(dir) = &a.out {
            write_json(&dir.join(format!("criterion_{id:02}.json")), &outcome)?;
        }
    }
    if !all_passed {
        return Err(CliError {
            stage: "repro".into(),
            class: eqws_core::ErrorClass::Numerical,
            message: "one or more criteria failed".into(),
            config_hash: None,
        });
    }
    Ok(())
}
