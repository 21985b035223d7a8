// Sequential vs parallel execution of the two data-parallel hot paths:
// resource assembly and parameter sweeps over the bundled two-node scenario.

use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hss_core::exec::Execution;
use hss_core::run::family_eigenvalues;
use hss_core::scenario::{load_scenario, Scenario};
use hss_core::stability::{sweep_parameter, SweepOptions};

fn scenario(hmax: usize) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/two_node.json");
    load_scenario(path).unwrap().with_hmax(hmax).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn bench_sweep(c: &mut Criterion) {
    let s = scenario(4);
    let values: Vec<f64> = (0..8).map(|k| 0.05 + 0.05 * k as f64).collect();
    let family = |v: f64| family_eigenvalues(&s, "grid.branches.0.r", v);
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, exec) in modes() {
        let opts = SweepOptions {
            exec,
            ..SweepOptions::default()
        };
        g.bench_with_input(BenchmarkId::new(name, values.len()), &opts, |b, o| {
            b.iter(|| sweep_parameter(&family, "grid.branches.0.r", black_box(&values), o).unwrap())
        });
    }
    g.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let s = scenario(10);
    let mut g = c.benchmark_group("assemble");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(name, |b| b.iter(|| s.assemble(black_box(exec)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_sweep, bench_assembly);
criterion_main!(benches);
