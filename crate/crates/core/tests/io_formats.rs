use std::fs;
use std::path::PathBuf;

use eqws_core::io::cifar::{parse_cifar, read_cifar_records, write_cifar, CifarRecord};
use eqws_core::io::idx::{parse_idx, read_idx};
use eqws_core::io::npy::{from_bytes, to_bytes};
use eqws_core::io::{
    load_bank, load_cifar, load_emnist, load_idx, preprocess, read_npy, read_table, replay, save_bank, write_npy,
    write_table, NpyArray, NpyData, PreprocessOptions, TableKind, TableManifest,
};
use eqws_core::{scatter, CoefficientLayout, EqwsError, ErrorClass, FilterBank, FilterBankParams, ImageField};
use proptest::prelude::*;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn expected(key: &str) -> Vec<f64> {
    let v: Value = serde_json::from_str(&fs::read_to_string(fixture("expected.json")).unwrap()).unwrap();
    v[key].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn numpy_fixture_matrix() -> Vec<f64> {
    let mut a: Vec<f64> = (0..91).map(|i| (i as f64 - 45.0) / 7.0).collect();
    a[0] = std::f64::consts::PI;
    a[90] = -0.0;
    a
}

#[test]
fn reads_numpy_files() {
    let a = read_npy(fixture("f8_7x13.npy")).unwrap();
    assert_eq!(a.shape, vec![7, 13]);
    let (_, v) = a.into_f64().unwrap();
    for (x, y) in v.iter().zip(numpy_fixture_matrix()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    for (x, y) in v.iter().zip(expected("f8_7x13")) {
        assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
    }
    let u = read_npy(fixture("u1_5.npy")).unwrap();
    assert_eq!(u.data, NpyData::U8(vec![0, 1, 127, 128, 255]));
    assert_eq!(read_npy(fixture("f8_vector.npy")).unwrap().shape, vec![4]);
}

#[test]
fn writes_bytes_identical_to_numpy() {
    for (name, array) in [
        (
            "f8_7x13.npy",
            NpyArray::f64(vec![7, 13], numpy_fixture_matrix()).unwrap(),
        ),
        ("u1_5.npy", NpyArray::u8(vec![5], vec![0, 1, 127, 128, 255]).unwrap()),
        (
            "f8_vector.npy",
            NpyArray::f64(vec![4], vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap(),
        ),
    ] {
        let theirs = fs::read(fixture(name)).unwrap();
        let ours = to_bytes(&array);
        let header_len = 10 + u16::from_le_bytes([theirs[8], theirs[9]]) as usize;
        assert_eq!(header_len % 64, 0, "{name}");
        assert_eq!(&ours[..header_len], &theirs[..header_len], "{name}");
        if name != "f8_vector.npy" {
            assert_eq!(ours, theirs, "{name}");
        }
    }
}

#[test]
fn rejects_unsupported_npy() {
    let e = read_npy(fixture("f8_fortran.npy")).unwrap_err();
    assert!(matches!(e, EqwsError::Unsupported(_)), "{e}");
    let e = read_npy(fixture("i4_3.npy")).unwrap_err();
    assert_eq!(e.class(), ErrorClass::Data);
    let mut bytes = fs::read(fixture("f8_7x13.npy")).unwrap();
    bytes[20] = b'#';
    assert!(from_bytes(&bytes).is_err());
}

#[test]
fn idx_fixture() {
    let b = load_idx(
        fixture("two-images-idx3-ubyte"),
        fixture("two-labels-idx1-ubyte"),
        false,
    )
    .unwrap();
    assert_eq!((b.count, b.height, b.width), (2, 4, 4));
    assert_eq!(b.labels, vec![7, 2]);
    for (x, y) in b.pixels.iter().zip(expected("idx_images")) {
        assert!((x - y).abs() <= 1e-15);
    }
    assert_eq!(b.pixels[1], 1.0);
    assert_eq!(b.pixels[4 + 1], 128.0 / 255.0);

    let t = load_emnist(fixture("two-images-idx3-ubyte"), fixture("two-labels-idx1-ubyte")).unwrap();
    assert!(t.provenance.transposed);
    assert_eq!(t.pixels[4], 1.0);
    assert_eq!(t.pixels[1], 0.0);

    let e = load_idx(
        fixture("two-images-idx3-ubyte"),
        fixture("three-labels-idx1-ubyte"),
        false,
    )
    .unwrap_err();
    assert!(e.to_string().contains("pairing"), "{e}");
    let empty = tempfile::NamedTempFile::new().unwrap();
    assert!(read_idx(empty.path(), None)
        .unwrap_err()
        .to_string()
        .contains("truncated"));
    assert!(load_idx(
        fixture("two-labels-idx1-ubyte"),
        fixture("two-labels-idx1-ubyte"),
        false
    )
    .is_err());
}

#[test]
fn cifar_fixture() {
    let recs = read_cifar_records(fixture("cifar-one.bin")).unwrap();
    assert_eq!(recs.len(), 1);
    let b = load_cifar(fixture("cifar-one.bin")).unwrap();
    assert_eq!(b.labels, vec![3]);
    assert_eq!(b.channels, 3);
    for (x, y) in b.pixels.iter().zip(expected("cifar_pixels")) {
        assert!((x - y).abs() <= 1e-15);
    }
    let img = b.image(0).unwrap();
    assert_eq!(img.channel(0)[500], 1.0);
    assert_eq!(img.channel(1)[31 * 32 + 15], 128.0 / 255.0);
    assert_eq!(img.channel(1)[31 * 32 + 16], 0.0);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("again.bin");
    write_cifar(&p, &recs).unwrap();
    assert_eq!(fs::read(&p).unwrap(), fs::read(fixture("cifar-one.bin")).unwrap());
    assert!(parse_cifar(&vec![0u8; 3072]).is_err());
}

#[test]
fn preprocessing_is_replayable() {
    let src = load_idx(
        fixture("two-images-idx3-ubyte"),
        fixture("two-labels-idx1-ubyte"),
        false,
    )
    .unwrap();
    let opts = PreprocessOptions {
        pad: 1,
        upsample: 1,
        apodize_alpha: 0.25,
        ..Default::default()
    };
    let once = preprocess(&src.subset(1, 1), &opts).unwrap();
    assert_eq!(once.width, 16);
    let rotated = once.rotated(30.0, Default::default()).unwrap();
    let again = replay(&rotated.provenance).unwrap();
    assert_eq!(again.pixels.len(), rotated.pixels.len());
    assert!(again
        .pixels
        .iter()
        .zip(&rotated.pixels)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(again.labels, vec![2]);
}

#[test]
fn bank_directory_round_trip() {
    let bank = FilterBank::build(FilterBankParams::for_size(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = save_bank(dir.path(), &bank).unwrap();
    assert_eq!(manifest.filters.len(), bank.filters().count());
    let back = load_bank(dir.path()).unwrap();
    assert_eq!(back.id(), bank.id());
    for (a, b) in bank.filters().zip(back.filters()) {
        assert_eq!(a, b);
    }
    let one = read_npy(dir.path().join(&manifest.filters[3].file)).unwrap();
    assert_eq!(one.shape, vec![32, 32]);

    let victim = dir.path().join(&manifest.filters[0].file);
    let mut bytes = fs::read(&victim).unwrap();
    let n = bytes.len();
    bytes[n - 1] ^= 1;
    fs::write(&victim, bytes).unwrap();
    assert!(load_bank(dir.path()).unwrap_err().to_string().contains("checksum"));
}

#[test]
fn coefficient_table_round_trip() {
    let bank = FilterBank::build(FilterBankParams::for_size(4)).unwrap();
    let layout = CoefficientLayout::for_bank(&bank);
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|s| {
            let img = ImageField::from_fn(16, |x, y| ((x * 7 + y * 3 + s) % 5) as f64).unwrap();
            scatter(&img, &bank).unwrap().to_vec()
        })
        .collect();
    let mut m = TableManifest::new(TableKind::Reg, 3, layout.reg_names());
    m.n_scales = Some(layout.n_scales);
    m.n_angles = Some(layout.n_angles);
    m.bank_id = Some(bank.id().to_string());
    let dir = tempfile::tempdir().unwrap();
    let (npy, json) = (dir.path().join("c.npy"), dir.path().join("c.json"));
    write_table(&npy, &json, &rows, &m).unwrap();
    let (back, m2) = read_table(&npy, &json).unwrap();
    assert_eq!(back, rows);
    assert_eq!(m2, m);
    assert_eq!(m2.layout().unwrap(), layout);

    let short = NpyArray::f64(vec![2, layout.reg_len()], rows[..2].concat()).unwrap();
    write_npy(&npy, &short).unwrap();
    assert!(read_table(&npy, &json).is_err());
}

proptest! {
    #[test]
    fn npy_round_trip_is_bit_exact(rows in 0usize..9, cols in 0usize..9, seed in any::<u64>()) {
        let mut state = seed;
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits(state >> 2)
            })
            .collect();
        let a = NpyArray::f64(vec![rows, cols], data.clone()).unwrap();
        let bytes = to_bytes(&a);
        prop_assert_eq!(bytes.len() % 64, (rows * cols * 8) % 64);
        let (shape, back) = from_bytes(&bytes).unwrap().into_f64().unwrap();
        prop_assert_eq!(shape, vec![rows, cols]);
        prop_assert!(back.iter().zip(&data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn truncated_inputs_are_rejected(cut in 1usize..48) {
        let idx = fs::read(fixture("two-images-idx3-ubyte")).unwrap();
        prop_assert!(parse_idx(&idx[..48 - cut], None).is_err());
        let npy = fs::read(fixture("f8_7x13.npy")).unwrap();
        prop_assert!(from_bytes(&npy[..npy.len() - cut]).is_err());
        let rec = CifarRecord { label: 1, pixels: vec![9; 3072] };
        let b = eqws_core::io::cifar::cifar_bytes(&[rec]).unwrap();
        prop_assert!(parse_cifar(&b[..b.len() - cut]).is_err());
    }
}
