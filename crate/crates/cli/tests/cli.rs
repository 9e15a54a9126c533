use std::path::Path;
use std::process::{Command, Output};

use eqws_core::io::idx::{write_idx, IdxArray};
use eqws_core::io::{read_npy, read_table, write_npy, NpyArray, TableKind};
use eqws_core::rng::seeded;
use rand::Rng;
use serde_json::{json, Value};

fn eqws(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqws"))
        .args(args)
        .env_remove("EQWS_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = eqws(args);
    assert!(
        out.status.success(),
        "eqws {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Bars and blobs on a 16 x 16 grid: class 0 horizontal, 1 vertical,
/// 2 a square blob, each at a random offset.
fn toy_digits(n: usize, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut rng = seeded(seed);
    let mut pixels = Vec::with_capacity(n * 256);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = (i % 3) as u8;
        let (a, b) = (rng.gen_range(3..13), rng.gen_range(3..13));
        for y in 0..16 {
            for x in 0usize..16 {
                let on = match class {
                    0 => y == a && (3..13).contains(&x),
                    1 => x == a && (3..13).contains(&y),
                    _ => x.abs_diff(a) <= 1 && y.abs_diff(b) <= 1,
                };
                let noise: u8 = rng.gen_range(0..20);
                pixels.push(if on { 230 } else { noise });
            }
        }
        labels.push(class);
    }
    (pixels, labels)
}

fn write_toy_dataset(dir: &Path) {
    for (name, n, seed) in [("train", 60, 1), ("test", 30, 2)] {
        let (pixels, labels) = toy_digits(n, seed);
        write_idx(
            dir.join(format!("{name}-images")),
            &IdxArray {
                dims: vec![n, 16, 16],
                data: pixels,
            },
        )
        .unwrap();
        write_idx(
            dir.join(format!("{name}-labels")),
            &IdxArray {
                dims: vec![n],
                data: labels,
            },
        )
        .unwrap();
    }
}

fn toy_config(dir: &Path, train: Value, test: Value) -> Value {
    json!({
        "bank": { "L": 8, "c": 1, "t": 1, "wBase": 2, "p": 2, "jIm": 4, "widthSlack": 1.0 },
        "dataset": {
            "format": "idx",
            "train": { "images": dir.join("train-images"), "labels": dir.join("train-labels") },
            "test": { "images": dir.join("test-images"), "labels": dir.join("test-labels"), "count": 24 }
        },
        "angles": { "train": train, "test": test, "interpolation": "bicubic" },
        "features": ["iso", "reg"],
        "learner": { "kind": "lda", "ridge": 1e-2 },
        "delta": { "images": 10, "excludeS0": true },
        "seed": 5
    })
}

#[test]
fn bank_scatter_reduce_learn() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bank = d.join("bank");
    let out = ok(&["filterbank", "build", "--jim", "4", "--out", p(&bank)]);
    assert!(out.contains("flatness"));
    assert!(ok(&["filterbank", "check", p(&bank)]).contains("checksums ok"));

    let rod = d.join("rod.npy");
    ok(&[
        "synth",
        "rod",
        "--side",
        "16",
        "--arm",
        "5",
        "--fwhm",
        "2",
        "--out",
        p(&rod),
    ]);
    assert_eq!(read_npy(&rod).unwrap().shape, vec![16, 16]);

    let (pixels, labels) = toy_digits(30, 3);
    let images = NpyArray::f64(vec![30, 16, 16], pixels.iter().map(|&v| v as f64 / 255.0).collect()).unwrap();
    write_npy(d.join("images.npy"), &images).unwrap();
    write_npy(d.join("labels.npy"), &NpyArray::u8(vec![30], labels).unwrap()).unwrap();

    let reg = d.join("reg.npy");
    ok(&[
        "scatter",
        "--bank",
        p(&bank),
        "--images",
        p(&d.join("images.npy")),
        "--out",
        p(&reg),
    ]);
    let (rows, manifest) = read_table(&reg, reg.with_extension("json")).unwrap();
    assert_eq!((rows.len(), rows[0].len()), (30, 308));
    assert_eq!(manifest.kind, TableKind::Reg);

    for (mode, width) in [
        ("iso", 42),
        ("rwst", 1 + 3 * 2 + 5),
        ("r-rwst", 1 + 2 + 1),
        ("log", 308),
    ] {
        let out = d.join(format!("{mode}.npy"));
        ok(&[
            "reduce",
            "--mode",
            mode,
            "--in",
            p(&reg),
            "--manifest",
            p(&reg.with_extension("json")),
            "--out",
            p(&out),
        ]);
        let (rows, _) = read_table(&out, out.with_extension("json")).unwrap();
        assert_eq!(rows[0].len(), width, "{mode}");
    }

    let iso = d.join("iso.npy");
    let report = d.join("lda.json");
    ok(&[
        "learn",
        "lda",
        "--features",
        p(&iso),
        "--labels",
        p(&d.join("labels.npy")),
        "--out",
        p(&report),
    ]);
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert!(r["accuracy"].as_f64().unwrap() > 0.9);
    assert!(report.with_extension("confusion.csv").exists());
}

#[test]
fn experiment_replays_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_toy_dataset(d);
    let out = d.join("run");
    let cfg = toy_config(d, json!({ "uniform": 2 }), json!({ "random": 3 }));
    std::fs::write(d.join("cfg.json"), cfg.to_string()).unwrap();
    ok(&[
        "--threads",
        "1",
        "experiment",
        "--config",
        p(&d.join("cfg.json")),
        "--out",
        p(&out),
    ]);
    for f in [
        "report.json",
        "config.resolved.json",
        "accuracy_vs_angle.csv",
        "regimes.csv",
        "confusion_iso.csv",
        "confusion_reg.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let first = std::fs::read(out.join("report.json")).unwrap();
    ok(&[
        "--threads",
        "2",
        "experiment",
        "--config",
        p(&out.join("config.resolved.json")),
    ]);
    assert_eq!(first, std::fs::read(out.join("report.json")).unwrap());

    let report: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["testAngles"].as_array().unwrap().len(), 3);
    assert_eq!(report["regimes"][0]["train"], "R");
    assert!(report["delta"]["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn unrotated_run_has_a_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_toy_dataset(d);
    let mut cfg = toy_config(d, json!({ "list": [0.0] }), json!({ "list": [0.0] }));
    cfg["output"] = json!(d.join("nr"));
    std::fs::write(d.join("cfg.json"), cfg.to_string()).unwrap();
    ok(&["experiment", "--config", p(&d.join("cfg.json"))]);
    let cells = std::fs::read_to_string(d.join("nr/regimes.csv")).unwrap();
    let lines: Vec<&str> = cells.lines().skip(1).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.contains(",NR,NR,")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        eqws(&["filterbank", "build", "--jim", "2", "--out", p(&d.join("b"))])
            .status
            .code(),
        Some(2)
    );
    std::fs::write(d.join("bad.json"), "{\"bank\": 3}").unwrap();
    assert_eq!(
        eqws(&["experiment", "--config", p(&d.join("bad.json")), "--out", p(d)])
            .status
            .code(),
        Some(2)
    );

    let cfg = toy_config(d, json!({ "list": [0.0] }), json!({ "list": [0.0] }));
    std::fs::write(d.join("missing.json"), cfg.to_string()).unwrap();
    let out = eqws(&["experiment", "--config", p(&d.join("missing.json")), "--out", p(d)]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("ingest failed") && msg.contains("(config "), "{msg}");

    let out = Command::new(env!("CARGO_BIN_EXE_eqws"))
        .args(["repro", "3"])
        .env("EQWS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn benchmark_and_grids() {
    let out = ok(&["benchmark", "--jim", "3,4", "--repeats", "1"]);
    assert!(out.contains("3,8,92,15"));
    assert!(out.contains("4,16,308,42"));

    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("discs");
    ok(&[
        "synth",
        "grid",
        "--kind",
        "disc",
        "--steps",
        "3",
        "--side",
        "32",
        "--out",
        p(&g),
    ]);
    assert_eq!(read_npy(g.join("images.npy")).unwrap().shape, vec![9, 32, 32]);
    let params: Value = serde_json::from_slice(&std::fs::read(g.join("params.json")).unwrap()).unwrap();
    assert_eq!(params["images"].as_array().unwrap().len(), 9);

    let bank = dir.path().join("bank");
    ok(&["filterbank", "build", "--jim", "5", "--out", p(&bank)]);
    for kind in ["rod", "arc", "disc"] {
        let g = dir.path().join(kind);
        ok(&[
            "synth",
            "grid",
            "--kind",
            kind,
            "--steps",
            "2",
            "--side",
            "32",
            "--out",
            p(&g),
        ]);
        let out = g.join("reg.npy");
        ok(&[
            "scatter",
            "--bank",
            p(&bank),
            "--images",
            p(&g.join("images.npy")),
            "--out",
            p(&out),
        ]);
        assert_eq!(read_npy(&out).unwrap().shape, vec![4, 652], "{kind}");
    }

    assert!(ok(&["repro", "3", "--show-config"]).contains("\"criterion\": 3"));
    assert!(ok(&["repro", "12"]).contains("PASS"));
}
