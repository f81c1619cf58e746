//! Scan throughput on the rayon pool vs a single worker.
//!
//! With `--no-default-features` only the sequential fallback is measured.

use criterion::{criterion_group, criterion_main, Criterion};
use levelcurv::app::{scan, ScanConfig};
use levelcurv::levelset::CellRule;
use levelcurv::parse;

fn cases() -> Vec<(&'static str, levelcurv::ScalarField, ScanConfig)> {
    vec![
        ("circle", parse("x^2 + y^2", 2).unwrap(), ScanConfig::new(0.5, 2.0, 8, 3.0, CellRule::Fixed(0.01))),
        ("torus", parse("(sqrt(x^2 + y^2) - 2)^2 + z^2", 3).unwrap(), ScanConfig::new(0.5, 1.5, 3, 5.0, CellRule::Fixed(0.1))),
    ]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    for (name, f, cfg) in cases() {
        g.bench_function(format!("{name}/pool-{}", rayon::current_num_threads()), |b| b.iter(|| scan(&f, &cfg).unwrap()));
        g.bench_function(format!("{name}/single"), |b| b.iter(|| single.install(|| scan(&f, &cfg).unwrap())));
    }
    g.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    for (name, f, cfg) in cases() {
        g.bench_function(format!("{name}/sequential"), |b| b.iter(|| scan(&f, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
