use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use oscillax::eigen::first_eigenpair;
use oscillax::mesh::{build_mesh, DomainSpec};
use oscillax::model::{make_example_nonlinearity, make_p_laplacian};
use oscillax::par::Execution;
use oscillax::solver::{run_branches, SolverConfig};

fn branch_suite(c: &mut Criterion) {
    let mesh = build_mesh(DomainSpec::Interval { a: 0.0, b: 1.0 }, 128).unwrap();
    let eig = first_eigenpair(&mesh, 1e-12).unwrap();
    let op = make_p_laplacian(2.0).unwrap();
    let nl = make_example_nonlinearity(eig.lambda1).unwrap();
    let cfg = SolverConfig::default();

    let mut group = c.benchmark_group("branches_2_to_8");
    group.sample_size(10);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(label, |b| {
            b.iter(|| black_box(run_branches(&mesh, &op, &nl, &eig, 2..=8, &cfg, exec).unwrap()))
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mesh = build_mesh(DomainSpec::UnitSquare, 32).unwrap();
    c.bench_function("eigen_square_32", |b| b.iter(|| black_box(first_eigenpair(&mesh, 1e-10).unwrap())));
}

criterion_group!(benches, branch_suite, eigen);
criterion_main!(benches);
