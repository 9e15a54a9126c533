use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eqws_bench::{default_bank, noise_image};
use eqws_core::{iso_reduce, scatter_reference, synth, Interpolation, ScatterEngine};

fn sparse_vs_dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("scatter");
    g.sample_size(10);
    for jim in [5u32, 6, 7] {
        let bank = default_bank(jim);
        let img = noise_image(bank.side(), jim as u64);
        let engine = ScatterEngine::new(&bank);
        g.bench_with_input(BenchmarkId::new("sparse", jim), &img, |b, img| {
            b.iter(|| engine.scatter(img).unwrap())
        });
        if jim <= 6 {
            g.bench_with_input(BenchmarkId::new("dense", jim), &img, |b, img| {
                b.iter(|| scatter_reference(img, &bank).unwrap())
            });
        }
    }
    g.finish();
}

fn reduce_and_rotate(c: &mut Criterion) {
    let bank = default_bank(6);
    let img = noise_image(64, 9);
    let coeffs = ScatterEngine::new(&bank).scatter(&img).unwrap();
    c.bench_function("iso_reduce/6", |b| b.iter(|| iso_reduce(&coeffs)));
    c.bench_function("rotate_bicubic/64", |b| {
        b.iter(|| synth::rotate(&img, 37.5, Interpolation::Bicubic).unwrap())
    });
}

criterion_group!(benches, sparse_vs_dense, reduce_and_rotate);
criterion_main!(benches);
