use std::f64::consts::PI;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rfiqkd::channel::FrameParams;
use rfiqkd::par::Execution;
use rfiqkd::sim::{run_session_with, DetectorConfig, FrameModel, SourceConfig};
use rfiqkd::sweep::{run_sweep, SweepSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn session(c: &mut Criterion) {
    let mut group = c.benchmark_group("session_1M_pulses");
    group.sample_size(10);
    let source = SourceConfig::with_pulses(1_000_000);
    let detector = DetectorConfig::default();
    let frame = FrameModel::Uniform(FrameParams::new(0.06, 0.1 * PI, 0.3 * PI).unwrap());
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_session_with(&source, &detector, &frame, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn analytic_grid(c: &mut Criterion) {
    let text = "[sweep]\nmode = analytic\nvariable = grid2d\ntheta_range = 0, 0.5pi, 128\n\
                delta_range = 0.01pi, pi, 128\n[channel]\np = 0.06\n[output]\npath = unused.csv\n";
    let spec = SweepSpec::parse(text, Path::new(".")).unwrap();
    let mut group = c.benchmark_group("analytic_grid_128x128");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_sweep(&spec, exec).unwrap()));
    }
    group.finish();
}

fn montecarlo_grid(c: &mut Criterion) {
    let text = "[sweep]\nmode = montecarlo\nvariable = grid2d\ntheta_range = 0, 0.45pi, 4\n\
                delta_range = 0.05pi, 0.8pi, 4\n[channel]\np = 0.06\n[montecarlo]\npulses = 100000\n\
                [output]\npath = unused.csv\n";
    let spec = SweepSpec::parse(text, Path::new(".")).unwrap();
    let mut group = c.benchmark_group("montecarlo_grid_16x100k");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_sweep(&spec, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, session, analytic_grid, montecarlo_grid);
criterion_main!(benches);
