use criterion::{black_box, criterion_group, criterion_main, Criterion};
use starlab_core::expansion::{classify_expansion, integrate_alpha, DtSpec};
use starlab_core::homogeneous::{integrate_phase, PhaseSpec, PhaseState};
use starlab_core::lagrangian::{
    evolve_linear_isentropic, evolve_self_similar, Family, IsentropicInitial, SolverSpec,
};
use starlab_core::profile::{solve_isentropic_profile, solve_thermo_profile, GridSpec};

fn profiles(c: &mut Criterion) {
    let grid = GridSpec::with_intervals(200);
    c.bench_function("isentropic profile, 200 intervals", |b| {
        b.iter(|| solve_isentropic_profile(black_box(0.0), &grid).unwrap())
    });
    c.bench_function("thermo profile, 200 intervals", |b| {
        b.iter(|| solve_thermo_profile(black_box(1.0), 0.25, 1.0, &grid).unwrap())
    });
}

fn ode_paths(c: &mut Criterion) {
    let params = classify_expansion(-0.5, 1.0, 1.5).unwrap();
    c.bench_function("expansion to t = 10", |b| {
        b.iter(|| integrate_alpha(&params, black_box(10.0), &DtSpec::default()).unwrap())
    });
    let init = PhaseState::new(0.05, 0.0, -0.5);
    c.bench_function("phase trajectory to s = 40", |b| {
        b.iter(|| integrate_phase(&init, black_box(40.0), &PhaseSpec::default()).unwrap())
    });
}

fn lagrangian(c: &mut Criterion) {
    let mut group = c.benchmark_group("lagrangian");
    group.sample_size(10);
    for (delta, name) in [(-0.001, "self-similar"), (0.0, "linear")] {
        let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(100)).unwrap();
        let a1 = if delta < 0.0 {
            (2.0 * delta.abs()).sqrt()
        } else {
            1.0
        };
        let params = classify_expansion(delta, 1.0, a1).unwrap();
        let x = p.y_nodes.clone();
        let g0 = Family::RandomSmooth { modes: 6, seed: 1 }.sample(&x);
        let g1 = Family::RandomInterior { modes: 6, seed: 2 }.sample(&x);
        let init = IsentropicInitial::scaled(&x, &g0, &g1, 1e-3);
        let spec = SolverSpec::default();
        group.bench_function(format!("{name}, 100 intervals, clock 1"), |b| {
            b.iter(|| {
                let mut obs = |_: &_, _: &_| {};
                if delta < 0.0 {
                    evolve_self_similar(&p, &params, &init, black_box(1.0), &spec, &mut obs)
                        .unwrap()
                } else {
                    evolve_linear_isentropic(&p, &params, &init, black_box(1.0), &spec, &mut obs)
                        .unwrap()
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, profiles, ode_paths, lagrangian);
criterion_main!(benches);
