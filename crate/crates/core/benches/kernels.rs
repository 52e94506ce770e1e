//! Sequential against rayon execution for the hot kernels.
//!
//! `cargo bench -p fewboson` compares both strategies; building with
//! `--no-default-features` leaves only the sequential path, and the
//! `parallel` rows then measure the fallback.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use fewboson::dynamics::KrylovPropagator;
use fewboson::{ground_state, solve_lowest, Exec, GridSpec, ManyBodySystem};

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn system(wells: usize, n_orb: usize, particles: usize) -> ManyBodySystem {
    let grid = GridSpec::new(wells, 30 * wells, 10.0).unwrap();
    ManyBodySystem::new(&solve_lowest(&grid, n_orb).unwrap(), particles).unwrap()
}

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    for (label, sys) in [("N4_M12", system(3, 12, 4)), ("N5_M16", system(8, 16, 5))] {
        let v: Vec<Complex64> = (0..sys.dim())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); sys.dim()];
        let op = sys.operator(1.0);
        for (name, exec) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, label), &exec, |b, &exec| {
                b.iter(|| op.apply(black_box(&v), &mut out, exec))
            });
        }
    }
    group.finish();
}

fn dense_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_assembly");
    group.sample_size(20);
    let sys = system(3, 9, 4);
    let op = sys.operator(1.0);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new(name, "N4_M9"), &exec, |b, &exec| {
            b.iter(|| black_box(op.to_dense(exec)))
        });
    }
    group.finish();
}

fn propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagation");
    group.sample_size(10);
    let sys = system(8, 16, 3);
    let (_, psi) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
    for (name, exec) in STRATEGIES {
        let kry = KrylovPropagator::new(sys.operator(3.0), exec);
        group.bench_with_input(BenchmarkId::new(format!("krylov_{name}"), "N3_M16"), &exec, |b, _| {
            b.iter(|| kry.propagate(black_box(psi.coeffs()), 1.0).unwrap())
        });
    }
    let small = system(3, 9, 4);
    let (_, psi) = ground_state(&small, 0.1, Exec::Sequential).unwrap();
    let spec = small.operator(3.0).factorize(Exec::Sequential);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new(format!("spectral_{name}"), "N4_M9"), &exec, |b, &exec| {
            b.iter(|| spec.propagate(black_box(psi.coeffs()), 1.0, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, apply, dense_assembly, propagation);
criterion_main!(benches);
