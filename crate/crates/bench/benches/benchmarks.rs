use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qutrit_rb::compiler::compile_clifford_table;
use qutrit_rb::estimator::fit_exponential;
use qutrit_rb::groups::generate_clifford_table;
use qutrit_rb::noise::{preset, Simulator};
use qutrit_rb_bench::{decay_fixture, rb_fixture, simultaneous_fixture};
use std::hint::black_box;

fn groups(c: &mut Criterion) {
    c.bench_function("generate_clifford_table", |b| b.iter(|| generate_clifford_table().unwrap()));
    let table = generate_clifford_table().unwrap();
    c.bench_function("compile_clifford_table", |b| b.iter(|| compile_clifford_table(black_box(&table)).unwrap()));
}

fn simulate(c: &mut Criterion) {
    let sim = Simulator::new(preset("amplitude_damping").unwrap()).unwrap();
    let mut g = c.benchmark_group("simulate_rb");
    for depth in [16usize, 128, 1024] {
        let circ = rb_fixture(depth, 1);
        g.bench_with_input(BenchmarkId::from_parameter(depth), &circ, |b, circ| {
            b.iter(|| sim.simulate(circ, 2000, 7).unwrap())
        });
    }
    g.finish();
    let sim2 = Simulator::new(preset("crosstalk").unwrap()).unwrap();
    let circ = simultaneous_fixture(64, 2);
    c.bench_function("simulate_simultaneous_64", |b| b.iter(|| sim2.simulate(&circ, 2000, 7).unwrap()));
}

fn fit(c: &mut Criterion) {
    let pts = decay_fixture();
    c.bench_function("fit_exponential", |b| b.iter(|| fit_exponential(black_box(&pts)).unwrap()));
}

criterion_group!(benches, groups, simulate, fit);
criterion_main!(benches);
