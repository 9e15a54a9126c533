//! The acceptance checks, shared by `eqws repro` and the acceptance test.

use std::fmt;
use std::path::PathBuf;

use eqws_core::filterbank::flatness;
use eqws_core::io::PreprocessOptions;
use eqws_core::learn::spline::{predict_coefficient_curve, CoefficientId};
use eqws_core::reduction::{
    first_order_model, iso_reduce_vec, log_normalize_rwst, rwst_fit, second_order_model, FirstOrderFit, SecondOrderFit,
};
use eqws_core::rng::seeded;
use eqws_core::synth::{make_arc, make_disc, make_rod, rotate, shift_periodic};
use eqws_core::transform::{apply_dense, apply_sparse};
use eqws_core::{
    coefficient_count, iso_reduce, permute, scatter_reference, ArcSpec, CoefficientLayout, DiscSpec, FilterBank,
    FilterBankParams, ImageField, Interpolation, RodSpec, ScatterEngine, ScatteringCoefficients,
};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::benchmark::REFERENCE_COUNTS;
use crate::config::{
    AngleConfig, AngleGrid, DatasetConfig, DatasetFormat, DeltaConfig, FeatureSet, LearnerConfig, PipelineConfig,
    SplitFiles,
};
use crate::experiment::{run_experiment, ExperimentReport};

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "translation invariance"),
    (2, "flatness"),
    (3, "coefficient counts"),
    (4, "discrete equivariance"),
    (5, "ring flatness"),
    (6, "rod equivariance"),
    (7, "disc scale response"),
    (8, "MNIST desk-scale accuracy"),
    (9, "ISO vs REG robustness"),
    (10, "rotation stability"),
    (11, "spline equivariance prediction"),
    (12, "RWST round trip"),
    (13, "oracle equivalences"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Input data was not found, so nothing was measured.
    Unavailable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub summary: String,
    pub details: Value,
}

impl Outcome {
    fn new(id: u8, pass: bool, summary: String, details: Value) -> Self {
        Outcome {
            id,
            name: name_of(id),
            status: if pass { Status::Pass } else { Status::Fail },
            summary,
            details,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail | Status::Unavailable => "FAIL",
        };
        write!(f, "criterion {:>2} {}: {tag} {}", self.id, self.name, self.summary)
    }
}

fn name_of(id: u8) -> &'static str {
    CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1)
}

fn failed(id: u8, err: impl fmt::Display) -> Outcome {
    Outcome::new(id, false, format!("error: {err}"), Value::Null)
}

fn random_image(side: usize, seed: u64) -> eqws_core::Result<ImageField> {
    let mut rng = seeded(seed);
    ImageField::new(side, (0..side * side).map(|_| rng.gen::<f64>()).collect())
}

fn bank(log2_size: u32) -> eqws_core::Result<FilterBank> {
    FilterBank::build(FilterBankParams::for_size(log2_size))
}

/// Largest `|a - b| / max(|b|, 1)` over the flattened coefficients; an
/// absolute change for the power-normalized entries.
fn max_change(a: &ScatteringCoefficients, b: &ScatteringCoefficients) -> f64 {
    a.to_vec()
        .iter()
        .zip(b.to_vec())
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Largest element-wise relative difference over entries of `b` above
/// `1e-12` of the largest; smaller entries are compared absolutely
/// against that scale.
fn max_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-12 * scale))
        .fold(0.0, f64::max)
}

pub fn translation_invariance() -> eqws_core::Result<Outcome> {
    let bank = bank(7)?;
    let engine = ScatterEngine::new(&bank);
    let img = random_image(128, 1)?;
    let base = engine.scatter(&img)?;
    let mut rng = seeded(2);
    let mut worst: f64 = 0.0;
    for _ in 0..64 {
        let (dx, dy) = (rng.gen_range(0..128), rng.gen_range(0..128));
        let c = engine.scatter(&shift_periodic(&img, dx, dy))?;
        worst = worst.max(max_change(&c, &base));
    }
    Ok(Outcome::new(
        1,
        worst <= 1e-12,
        format!("max coefficient change {worst:.2e} over 64 shifts (limit 1e-12)"),
        json!({ "maxChange": worst, "shifts": 64, "side": 128 }),
    ))
}

pub fn flatness_check() -> eqws_core::Result<Outcome> {
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (l, c, t) in [(8, 1, 1), (8, 2, 1), (4, 1, 1), (16, 1, 1)] {
        for jim in [6, 8] {
            let params = FilterBankParams {
                angles: l,
                radial_density: c,
                plane: t,
                log2_size: jim,
                ..Default::default()
            };
            let b = FilterBank::build(params)?;
            let dev = flatness(b.side(), b.psi_filters(), b.phi()).max_deviation;
            worst = worst.max(dev);
            rows.push(json!({ "L": l, "c": c, "t": t, "jIm": jim, "maxDeviation": dev }));
        }
    }
    Ok(Outcome::new(
        2,
        worst <= 1e-10,
        format!("max |sum psi^2 + phi^2 - 1| = {worst:.2e} over 8 banks (limit 1e-10)"),
        Value::Array(rows),
    ))
}

pub fn counts() -> eqws_core::Result<Outcome> {
    let mut ok = true;
    let mut rows = Vec::new();
    for &(jim, reg, iso) in &REFERENCE_COUNTS {
        let got = coefficient_count(&FilterBankParams::for_size(jim))?;
        ok &= got == (reg, iso);
        rows.push(json!({ "jIm": jim, "reg": got.0, "iso": got.1, "expectedReg": reg, "expectedIso": iso }));
    }
    let line: Vec<String> = rows.iter().map(|r| format!("{}({})", r["reg"], r["iso"])).collect();
    Ok(Outcome::new(
        3,
        ok,
        format!("jIm 3..8 -> {}", line.join(" ")),
        Value::Array(rows),
    ))
}

pub fn discrete_equivariance() -> eqws_core::Result<Outcome> {
    let bank = bank(6)?;
    let engine = ScatterEngine::new(&bank);
    let img = random_image(64, 3)?;
    let base = engine.scatter(&img)?;
    let quarter = engine.scatter(&rotate(&img, 90.0, Interpolation::Bicubic)?)?;
    let half = engine.scatter(&rotate(&img, 180.0, Interpolation::Bicubic)?)?;
    let dev90 = max_relative(&quarter.to_vec(), &permute(&base, 4).to_vec());
    let dev180 = max_relative(&half.to_vec(), &base.to_vec());
    let layout = base.layout;
    let iso = iso_reduce(&base).to_vec();
    let mut bitwise = true;
    for s in 0..layout.n_angles as i64 {
        let p = iso_reduce(&permute(&base, s)).to_vec();
        bitwise &= p.iter().zip(&iso).all(|(a, b)| a.to_bits() == b.to_bits());
        let via_vec = iso_reduce_vec(layout, &permute(&base, s).to_vec())?;
        bitwise &= via_vec.iter().zip(&iso).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    Ok(Outcome::new(
        4,
        dev90 <= 1e-10 && dev180 <= 1e-10 && bitwise,
        format!(
            "90° vs permute(4) {dev90:.2e}, 180° {dev180:.2e} (limit 1e-10); ISO under permutation bit-identical: {bitwise}"
        ),
        json!({ "rotation90": dev90, "rotation180": dev180, "isoBitIdentical": bitwise }),
    ))
}

/// Scale index of the scale value `j` (`1 + i / c`).
fn scale_index(bank: &FilterBank, j: f64) -> usize {
    bank.scale_values()
        .iter()
        .position(|&v| (v - j).abs() < 1e-12)
        .expect("scale value present in bank")
}

pub fn ring_flatness() -> eqws_core::Result<Outcome> {
    let bank = bank(8)?;
    let j = scale_index(&bank, 4.0);
    let ring = make_arc(&ArcSpec::default())?;
    let f = ScatterEngine::new(&bank).scatter_first_order(&ring)?;
    let v: Vec<f64> = (0..bank.n_angles()).map(|l| f.s1_at(j, l)).collect();
    let ratio = eqws_core::learn::metrics::population_std(&v) / eqws_core::learn::metrics::mean(&v);
    Ok(Outcome::new(
        5,
        ratio <= 5e-3,
        format!("std/mean of S1(j=4, l) = {ratio:.2e} (limit 5e-3)"),
        json!({ "ratio": ratio, "s1": v }),
    ))
}

pub fn rod_equivariance() -> eqws_core::Result<Outcome> {
    let bank = bank(8)?;
    let engine = ScatterEngine::new(&bank);
    let j = scale_index(&bank, 4.0);
    let nl = bank.n_angles();
    let bin = 180.0 / nl as f64;
    let mut mismatches = Vec::new();
    let mut sweep = Vec::new();
    let mut at_zero = f64::NAN;
    for k in 0..144 {
        let sigma = k as f64 * 2.5;
        let rod = make_rod(&RodSpec {
            sigma_angle: sigma,
            ..Default::default()
        })?;
        let f = engine.scatter_first_order(&rod)?;
        let v: Vec<f64> = (0..nl).map(|l| f.s1_at(j, l)).collect();
        let arg = eqws_core::learn::model::argmax_lowest(&v);
        let expected = ((sigma / bin).round() as usize) % nl;
        if arg != expected {
            mismatches.push(sigma);
        }
        if k == 0 {
            at_zero = v[2] / v[0];
        }
        sweep.push(json!({ "sigma": sigma, "argmax": arg, "s1": v }));
    }
    Ok(Outcome::new(
        6,
        mismatches.is_empty() && at_zero <= 0.05,
        format!(
            "argmax off its expected bin at {} of 144 angles; l=2 / l=0 at the l=0 peak = {:.2}% (limit 5%)",
            mismatches.len(),
            100.0 * at_zero
        ),
        json!({ "mismatches": mismatches, "l2OverPeak": at_zero, "sweep": sweep }),
    ))
}

pub fn disc_scale_response() -> eqws_core::Result<Outcome> {
    let bank = bank(8)?;
    let engine = ScatterEngine::new(&bank);
    let radii: Vec<f64> = (1..=128).map(|r| r as f64 * 0.5).collect();
    let mut curves = vec![Vec::with_capacity(radii.len()); bank.n_scales()];
    for &radius in &radii {
        let disc = make_disc(&DiscSpec {
            radius,
            fwhm: 2.0,
            side: 256,
        })?;
        let f = engine.scatter_first_order(&disc)?;
        for (j, c) in curves.iter_mut().enumerate() {
            c.push(f.s1_at(j, 0));
        }
    }
    let mut ok = true;
    let mut peaks = Vec::new();
    for jv in [4.0, 5.0, 6.0] {
        let j = scale_index(&bank, jv);
        let peak = radii[eqws_core::learn::model::argmax_lowest(&curves[j])];
        let target = 2f64.powf(jv - 1.0);
        ok &= peak >= target / 2.0 && peak <= target * 2.0;
        peaks.push(json!({ "j": jv, "peakRadius": peak, "expected": target }));
    }
    let text: Vec<String> = peaks
        .iter()
        .map(|p| format!("j={} r={} (2^(j-1)={})", p["j"], p["peakRadius"], p["expected"]))
        .collect();
    Ok(Outcome::new(
        7,
        ok,
        format!("peaks {} (within a factor of 2 required)", text.join(", ")),
        json!({ "peaks": peaks, "radii": radii }),
    ))
}

/// Directory holding the four raw MNIST IDX files: `EQWS_MNIST_DIR`, else
/// `data/mnist` at the workspace root.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("EQWS_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

fn mnist_present() -> bool {
    let d = mnist_dir();
    MNIST_FILES.iter().all(|f| d.join(f).is_file())
}

fn unavailable(id: u8) -> Outcome {
    Outcome {
        id,
        name: name_of(id),
        status: Status::Unavailable,
        summary: format!("MNIST not found in {} (set EQWS_MNIST_DIR)", mnist_dir().display()),
        details: Value::Null,
    }
}

/// 32² digits, 10k train at three angles, 2k test at ten, ISO and REG
/// with LDA, Δ on the first 500 test images.
pub fn mnist_config() -> PipelineConfig {
    let d = mnist_dir();
    PipelineConfig {
        bank: FilterBankParams::for_size(5),
        dataset: DatasetConfig {
            format: DatasetFormat::Idx,
            train: SplitFiles {
                images: d.join(MNIST_FILES[0]),
                labels: Some(d.join(MNIST_FILES[1])),
                count: Some(10_000),
            },
            test: SplitFiles {
                images: d.join(MNIST_FILES[2]),
                labels: Some(d.join(MNIST_FILES[3])),
                count: Some(2_000),
            },
            preprocess: PreprocessOptions::default(),
        },
        angles: AngleConfig {
            train: AngleGrid::Uniform(3),
            test: AngleGrid::Uniform(10),
            interpolation: Interpolation::Bicubic,
        },
        features: vec![FeatureSet::Iso, FeatureSet::Reg],
        learner: LearnerConfig::default(),
        delta: Some(DeltaConfig::default()),
        seed: 0,
        output: None,
        threads: None,
    }
}

/// The shared MNIST run behind criteria 8 to 10.
pub fn mnist_run() -> Option<Result<ExperimentReport, String>> {
    if !mnist_present() {
        return None;
    }
    Some(run_experiment(&mnist_config()).map_err(|e| e.to_string()))
}

pub fn mnist_accuracy(report: &ExperimentReport) -> Outcome {
    let iso = report.feature(FeatureSet::Iso).expect("ISO run");
    let (mean, std) = (iso.mean_accuracy, iso.std_accuracy);
    Outcome::new(
        8,
        (0.79..=0.88).contains(&mean) && std <= 0.015,
        format!(
            "ISO+LDA mean {:.2}% (range 79-88%), std over angles {:.2}% (limit 1.5%)",
            100.0 * mean,
            100.0 * std
        ),
        json!({ "mean": mean, "std": std, "perAngle": iso.per_angle }),
    )
}

pub fn robustness_ordering(report: &ExperimentReport) -> Outcome {
    let iso = report.feature(FeatureSet::Iso).expect("ISO run");
    let reg = report.feature(FeatureSet::Reg).expect("REG run");
    let ratio = reg.std_accuracy / iso.std_accuracy;
    let range = |f: &crate::experiment::FeatureReport| {
        let v = f.per_angle.iter().map(|a| a.accuracy);
        v.clone().fold(f64::MIN, f64::max) - v.fold(f64::MAX, f64::min)
    };
    Outcome::new(
        9,
        ratio >= 10.0,
        format!(
            "REG std {:.2}% / ISO std {:.2}% = {ratio:.1}x (required 10x)",
            100.0 * reg.std_accuracy,
            100.0 * iso.std_accuracy
        ),
        json!({
            "ratio": ratio,
            "isoStd": iso.std_accuracy,
            "regStd": reg.std_accuracy,
            "isoRange": range(iso),
            "regRange": range(reg),
            "regMean": reg.mean_accuracy,
            "regPerAngle": reg.per_angle,
        }),
    )
}

pub fn rotation_stability(report: &ExperimentReport) -> Outcome {
    let Some(d) = &report.delta else {
        return failed(10, "experiment produced no stability metric");
    };
    let target = 2.7e-4;
    Outcome::new(
        10,
        d.delta >= target / 3.0 && d.delta <= target * 3.0,
        format!(
            "Δ = {:.2e} on {} images x {} angles (target 2.7e-4 within 3x)",
            d.delta, d.images, d.angles
        ),
        serde_json::to_value(d).expect("delta serializes"),
    )
}

pub fn spline_prediction() -> eqws_core::Result<Option<Outcome>> {
    if !mnist_present() {
        return Ok(None);
    }
    let d = mnist_dir();
    let raw = eqws_core::io::load_idx(d.join(MNIST_FILES[2]), d.join(MNIST_FILES[3]), false)?.subset(0, 20);
    let opts = PreprocessOptions {
        pad: 1,
        upsample: 1,
        ..Default::default()
    };
    let batch = eqws_core::io::preprocess(&raw, &opts)?;
    let bank = bank(7)?;
    let engine = ScatterEngine::new(&bank);
    let layout = CoefficientLayout::for_bank(&bank);
    let (nj, nl) = (layout.n_scales, layout.n_angles);
    let jl = nj * nl;
    let split = |m: usize| (m / nl, m % nl);
    let (mut e1, mut e2) = (0.0, 0.0);
    let angles: Vec<f64> = (0..48).map(|k| k as f64 * 3.75).collect();
    for img in batch.images()? {
        let c0 = engine.scatter(&img)?;
        let s1 = (0..jl)
            .map(|m| {
                let (j, l) = split(m);
                predict_coefficient_curve(&c0, CoefficientId::S1 { j, l })
            })
            .collect::<eqws_core::Result<Vec<_>>>()?;
        let s2 = (0..jl * jl)
            .map(|i| {
                let ((j1, l1), (j2, l2)) = (split(i / jl), split(i % jl));
                predict_coefficient_curve(&c0, CoefficientId::S2 { j1, l1, j2, l2 })
            })
            .collect::<eqws_core::Result<Vec<_>>>()?;
        for &a in &angles {
            let c = engine.scatter(&rotate(&img, a, Interpolation::Bicubic)?)?;
            e1 += s1.iter().zip(&c.s1).map(|(p, v)| (p.eval(a) - v).abs()).sum::<f64>();
            e2 += s2.iter().zip(&c.s2).map(|(p, v)| (p.eval(a) - v).abs()).sum::<f64>();
        }
    }
    let n = (batch.count * angles.len()) as f64;
    let (m1, m2) = (e1 / (n * jl as f64), e2 / (n * (jl * jl) as f64));
    Ok(Some(Outcome::new(
        11,
        m1 <= 1e-3 && m2 <= 1e-4,
        format!(
            "mean |predicted - computed| S1 {m1:.2e} (limit 1e-3), S2 {m2:.2e} (limit 1e-4) over 20 digits x 48 angles"
        ),
        json!({ "s1": m1, "s2": m2, "log10S1": m1.log10(), "log10S2": m2.log10() }),
    )))
}

pub fn rwst_round_trip() -> eqws_core::Result<Outcome> {
    let (nj, nl) = (6usize, 8usize);
    let layout = CoefficientLayout::new(nj, nl);
    let jl = nj * nl;
    let mut rng = seeded(12);
    let s0 = -3.0;
    let first: Vec<FirstOrderFit> = (0..nj)
        .map(|_| FirstOrderFit {
            iso: rng.gen_range(-6.0..-1.0),
            aniso: rng.gen_range(0.2..1.5),
            l_ref: rng.gen_range(0.0..nl as f64),
            residual_rms: 0.0,
        })
        .collect();
    let mut pairs = Vec::new();
    for j1 in 0..nj {
        for j2 in j1 + 1..nj {
            let fit = SecondOrderFit {
                iso1: rng.gen_range(-5.0..-1.0),
                iso2: rng.gen_range(-0.8..0.8),
                aniso1: rng.gen_range(0.2..1.0),
                aniso2: rng.gen_range(-1.0..1.0),
                l_ref: rng.gen_range(0.0..nl as f64),
                residual_rms: 0.0,
            };
            pairs.push(((j1, j2), fit));
        }
    }
    let mut c = ScatteringCoefficients::from_vec(layout, &vec![1e-3; layout.reg_len()])?;
    c.sigma0sq = 2f64.powf(s0);
    for (j, f) in first.iter().enumerate() {
        for (l, v) in first_order_model(nl, f.iso, f.aniso, f.l_ref).into_iter().enumerate() {
            c.s1[j * nl + l] = 2f64.powf(s0 + v);
        }
    }
    for &((j1, j2), ref f) in &pairs {
        let table = second_order_model(nl, f);
        for l1 in 0..nl {
            let denom = c.s1[j1 * nl + l1];
            for l2 in 0..nl {
                c.s2[(j1 * nl + l1) * jl + j2 * nl + l2] = denom * 2f64.powf(table[l1 * nl + l2]);
            }
        }
    }
    let fit = rwst_fit(&log_normalize_rwst(&c, Some(1e-300))?)?;
    let mut worst: f64 = (fit.s0 - s0).abs();
    for (got, want) in fit.first.iter().zip(&first) {
        for (a, b) in [(got.iso, want.iso), (got.aniso, want.aniso), (got.l_ref, want.l_ref)] {
            worst = worst.max((a - b).abs());
        }
    }
    for (got, (_, want)) in fit.second.iter().zip(&pairs) {
        for (a, b) in [
            (got.iso1, want.iso1),
            (got.iso2, want.iso2),
            (got.aniso1, want.aniso1),
            (got.aniso2, want.aniso2),
            (got.l_ref, want.l_ref),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    let counts_ok = fit.first_order_count() == 3 * nj && fit.second_order_count() == 5 * nj * (nj - 1) / 2;
    Ok(Outcome::new(
        12,
        worst <= 1e-6 && counts_ok,
        format!(
            "max parameter error {worst:.2e} (limit 1e-6); counts {}/{} for J={nj} (expected {}/{})",
            fit.first_order_count(),
            fit.second_order_count(),
            3 * nj,
            5 * nj * (nj - 1) / 2
        ),
        json!({ "maxError": worst, "countsMatch": counts_ok }),
    ))
}

pub fn oracle_equivalences() -> eqws_core::Result<Outcome> {
    let bank = bank(6)?;
    let side = bank.side();
    let img = random_image(side, 13)?;
    let fft = eqws_core::fft::Fft2d::new(side);
    let mut scratch = fft.make_scratch();
    let spectrum = fft.forward_real(img.data(), &mut scratch);
    let mut bit_equal = true;
    for f in bank.filters() {
        let sparse = apply_sparse(f, &spectrum);
        let dense = apply_dense(&f.to_dense(side), &spectrum);
        bit_equal &= f.indices().iter().all(|&i| {
            let (a, b) = (sparse[i as usize], dense[i as usize]);
            a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
        });
    }
    let fast = ScatterEngine::new(&bank).scatter(&img)?;
    let reference = scatter_reference(&img, &bank)?;
    let mut s1_fast = fast.s1.clone();
    s1_fast.push(fast.s1_phi);
    let mut s1_ref = reference.s1.clone();
    s1_ref.push(reference.s1_phi);
    let pooled = max_relative(&s1_fast, &s1_ref);
    let nl = bank.n_angles();
    let conservation = (0..bank.n_scales() * nl)
        .map(|m| {
            let total = fast.second_layer_total(m / nl, m % nl);
            (total - fast.s1[m]).abs() / fast.s1[m]
        })
        .fold(0.0, f64::max);
    Ok(Outcome::new(
        13,
        bit_equal && pooled <= 1e-10 && conservation <= 1e-9,
        format!(
            "sparse/dense bit-equal: {bit_equal}; Fourier vs real-domain S1 {pooled:.2e} (limit 1e-10); layer-2 conservation {conservation:.2e} (limit 1e-9)"
        ),
        json!({ "bitEqual": bit_equal, "pooling": pooled, "conservation": conservation }),
    ))
}

fn lift(id: u8, r: eqws_core::Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| failed(id, e))
}

/// Runs one criterion. `mnist` caches the shared run behind 8 to 10.
pub fn run_criterion(id: u8, mnist: &mut Option<Option<Result<ExperimentReport, String>>>) -> Outcome {
    let mut from_mnist = |f: fn(&ExperimentReport) -> Outcome| match mnist.get_or_insert_with(mnist_run) {
        None => unavailable(id),
        Some(Err(e)) => failed(id, e),
        Some(Ok(r)) => f(r),
    };
    match id {
        1 => lift(1, translation_invariance()),
        2 => lift(2, flatness_check()),
        3 => lift(3, counts()),
        4 => lift(4, discrete_equivariance()),
        5 => lift(5, ring_flatness()),
        6 => lift(6, rod_equivariance()),
        7 => lift(7, disc_scale_response()),
        8 => from_mnist(mnist_accuracy),
        9 => from_mnist(robustness_ordering),
        10 => from_mnist(rotation_stability),
        11 => match spline_prediction() {
            Ok(Some(o)) => o,
            Ok(None) => unavailable(11),
            Err(e) => failed(11, e),
        },
        12 => lift(12, rwst_round_trip()),
        13 => lift(13, oracle_equivalences()),
        other => failed(other, "no such criterion"),
    }
}

/// The canned setup of each criterion, as printed by `repro --show-config`.
pub fn canned_config(id: u8) -> Value {
    match id {
        1 => {
            json!({ "bank": FilterBankParams::for_size(7), "image": "uniform [0,1) 128², seed 1", "shifts": 64, "shiftSeed": 2 })
        }
        2 => json!({ "banks": [[8,1,1],[8,2,1],[4,1,1],[16,1,1]], "jIm": [6, 8] }),
        3 => json!({ "jIm": [3,4,5,6,7,8], "L": 8, "c": 1 }),
        4 => {
            json!({ "bank": FilterBankParams::for_size(6), "image": "uniform [0,1) 64², seed 3", "rotations": [90, 180] })
        }
        5 => json!({ "bank": FilterBankParams::for_size(8), "arc": ArcSpec::default(), "j": 4 }),
        6 => json!({ "bank": FilterBankParams::for_size(8), "rod": RodSpec::default(), "sigmaStep": 2.5, "j": 4 }),
        7 => json!({ "bank": FilterBankParams::for_size(8), "fwhm": 2.0, "radii": "0.5..64 step 0.5", "j": [4,5,6] }),
        8..=10 => serde_json::to_value(mnist_config()).expect("config serializes"),
        11 => {
            json!({ "bank": FilterBankParams::for_size(7), "digits": 20, "preprocess": { "pad": 1, "upsample": 1 }, "angles": 48, "interpolation": "bicubic" })
        }
        12 => json!({ "J": 6, "L": 8, "seed": 12 }),
        13 => json!({ "bank": FilterBankParams::for_size(6), "image": "uniform [0,1) 64², seed 13" }),
        _ => Value::Null,
    }
}
