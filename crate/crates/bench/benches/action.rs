use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use sitnikov::{DiscreteAction, KeplerDrive, PeriodicOptions};
use sitnikov_bench::{smooth_free, smooth_periodic, symbols};

fn kepler(c: &mut Criterion) {
    let drive = KeplerDrive::new();
    c.bench_function("kepler_x_1000", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for k in 0..1000 {
                s += drive.x(black_box(k as f64 * 1e-3 + 1e-4));
            }
            s
        })
    });
}

fn action(c: &mut Criterion) {
    let drive = KeplerDrive::new();
    let mut group = c.benchmark_group("action");
    for m in [64, 256, 1024] {
        let traj = smooth_free(m);
        let action = DiscreteAction::new(&drive, traj.grid);
        group.bench_with_input(BenchmarkId::new("value", m), &traj, |b, t| {
            b.iter(|| action.value(black_box(&t.values)).unwrap())
        });
        let periodic = smooth_periodic(m);
        group.bench_with_input(BenchmarkId::new("gradient", m), &periodic, |b, t| {
            b.iter(|| action.gradient(black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn periodic_solve(c: &mut Criterion) {
    let drive = KeplerDrive::new();
    let b = symbols();
    let opts = PeriodicOptions {
        nodes_per_unit: 32,
        ..Default::default()
    };
    let mut group = c.benchmark_group("periodic");
    group.sample_size(10);
    group.bench_function("minimize_m32", |bench| {
        bench.iter(|| sitnikov::periodic::minimize_periodic_from(&drive, &b, 1.0, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kepler, action, periodic_solve);
criterion_main!(benches);
