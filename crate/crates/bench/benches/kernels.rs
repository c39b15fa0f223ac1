use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lakesim_bench::radial_setup;
use lakesim_core::elliptic::stream::StreamSolver;
use lakesim_core::initial::Bump;
use lakesim_core::transport::picard::{picard_window, velocity_of, PicardConfig};
use lakesim_core::transport::VorticityState;
use lakesim_core::viscous::{viscous_step, ViscousConfig, ViscousOps, ViscousState};

fn solve_stream(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_stream");
    for n in [64, 128] {
        let (g, w) = radial_setup(1.0, n);
        let solver = StreamSolver::new(&g).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solver.solve(&w, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn picard(c: &mut Criterion) {
    let (g, _) = radial_setup(0.0, 64);
    let solver = StreamSolver::new(&g).unwrap();
    let w = Bump::offset().sample(&g).unwrap();
    let cfg = PicardConfig::default();
    let state = VorticityState::new(w.clone(), 0.0, 1e-10);
    let start = velocity_of(&solver, &w, cfg.tol_solve, None).unwrap();
    let mut group = c.benchmark_group("picard_window");
    group.sample_size(10);
    group.bench_function("n64_len0.125", |b| {
        b.iter(|| picard_window(&solver, &state, &start, 0.125, &cfg).unwrap())
    });
    group.finish();
}

fn viscous(c: &mut Criterion) {
    let (g, w) = radial_setup(0.0, 64);
    let ops = ViscousOps::new(&g).unwrap();
    let (psi, _) = velocity_of(ops.solver(), &w, 1e-12, None).unwrap();
    let state = ViscousState::from_stream(&ops, &psi, 0.0).unwrap();
    let cfg = ViscousConfig::default();
    let mut group = c.benchmark_group("viscous_step");
    group.sample_size(20);
    group.bench_function("n64_dt0.02", |b| b.iter(|| viscous_step(&ops, &state, &cfg, 0.02).unwrap()));
    group.finish();
}

criterion_group!(benches, solve_stream, picard, viscous);
criterion_main!(benches);
