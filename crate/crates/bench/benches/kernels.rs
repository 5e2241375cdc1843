use std::hint::black_box;

use contact_forge::forms::reeb_field;
use contact_forge::spray::{build_spray, solve_periods, SprayConfig};
use contact_forge::C64;
use contact_forge_bench::{contact_form, curve_space, jet_pair};
use criterion::{criterion_group, criterion_main, Criterion};

fn jet_mul(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet_mul");
    for (n, d) in [(1, 4), (2, 3), (2, 4)] {
        let s = curve_space(n, d).unwrap();
        let (a, b) = jet_pair(&s).unwrap();
        g.bench_function(format!("n{n}_d{d}"), |bench| bench.iter(|| black_box(&a) * black_box(&b)));
    }
    g.finish();
}

fn reeb_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("reeb_solve");
    for n in [1, 2] {
        let alpha = contact_form(&curve_space(n, 3).unwrap()).unwrap();
        g.bench_function(format!("n{n}_d3"), |bench| bench.iter(|| reeb_field(black_box(&alpha)).unwrap()));
    }
    g.finish();
}

fn period_solve(c: &mut Criterion) {
    let spray = build_spray(&SprayConfig::default_scene(0.01).unwrap()).unwrap();
    let xi = [C64::new(4e-4, 0.0), C64::new(0.0, 4e-4), C64::new(-4e-4, 2e-4)];
    c.bench_function("period_solve", |bench| bench.iter(|| solve_periods(&spray, black_box(xi)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = jet_mul, reeb_solve, period_solve
}
criterion_main!(benches);
