use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cdg_core::assembly::{assemble, load_vector, solve, HMode};
use cdg_core::femspace::P2Space;
use cdg_core::mesh::generate_mesh;
use cdg_core::problems::{sphere_problem, torus_problem, LoadSource};
use cdg_core::verify::{energy_error, l2_quotient_error};
use cdg_core::{Execution, Vec3};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sphere_space(level: u32) -> P2Space {
    P2Space::new(generate_mesh(sphere_problem(LoadSource::Oracle).surface, level).unwrap()).unwrap()
}

fn bench_assemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for level in [3, 4] {
        let space = sphere_space(level);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, space.ndof()), &space, |b, s| {
                b.iter(|| assemble(s, 10.0, HMode::GlobalH, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_load(c: &mut Criterion) {
    // the FD torus load is the most expensive integrand in the crate
    let problem = torus_problem(LoadSource::Oracle);
    let space = P2Space::new(generate_mesh(problem.surface, 3).unwrap()).unwrap();
    let mut group = c.benchmark_group("torus_oracle_load");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, space.ndof()), |b| {
            b.iter(|| load_vector(&space, &|x| problem.load(x), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_errors(c: &mut Criterion) {
    let problem = sphere_problem(LoadSource::Oracle);
    let space = sphere_space(4);
    let sys = assemble(&space, 10.0, HMode::GlobalH, Execution::Parallel).unwrap();
    let load = load_vector(&space, &|x| problem.load(x), Execution::Parallel).unwrap();
    let u = solve(&sys, &load.b).unwrap().u;
    let exact = |x: &Vec3| problem.exact(x);
    let lap = |x: &Vec3| problem.laplace_beltrami(x);
    let mut group = c.benchmark_group("errors");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(format!("l2/{name}"), space.ndof()), |b| {
            b.iter(|| l2_quotient_error(&space, &u, &exact, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new(format!("energy/{name}"), space.ndof()), |b| {
            b.iter(|| energy_error(&space, &u, &lap, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let problem = sphere_problem(LoadSource::Oracle);
    let space = sphere_space(4);
    let sys = assemble(&space, 10.0, HMode::GlobalH, Execution::Parallel).unwrap();
    let load = load_vector(&space, &|x| problem.load(x), Execution::Parallel).unwrap();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function(BenchmarkId::from_parameter(space.ndof()), |b| b.iter(|| solve(&sys, &load.b).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_assemble, bench_load, bench_errors, bench_solve);
criterion_main!(benches);
