use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levy_omt::estimators::center_exit_angles;
use levy_omt::omt::{run_experiment, DomainSpec, OmtConfig};
use levy_omt::{CircleSpec, Complex, Exec, SamplerConfig};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn exit_angles(c: &mut Criterion) {
    let circle = CircleSpec::new(Complex::new(0.0, 0.0), 1.0).unwrap();
    let sampler = SamplerConfig::with_step(1e-3, 1.0);
    let mut group = c.benchmark_group("center_exit_angles");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 2000), &exec, |b, &exec| {
            b.iter(|| center_exit_angles(circle, 2000, &sampler, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn omt(c: &mut Criterion) {
    let zero = Complex::new(0.0, 0.0);
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = OmtConfig::new("z^2+z".parse().unwrap(), zero, DomainSpec::new(zero, 2.0).unwrap(), 200, 8, 1);
        cfg.exec = exec;
        group.bench_with_input(BenchmarkId::new(name, 200), &cfg, |b, cfg| b.iter(|| run_experiment(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, exit_angles, omt);
criterion_main!(benches);
