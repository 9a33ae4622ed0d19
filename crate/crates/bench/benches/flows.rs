use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use geoflow_core::csf::{self, FlowState, StepPolicy};
use geoflow_core::heat::{self, HeatState};
use geoflow_core::mse::{self, GraphProblem, RectGrid};
use geoflow_core::ricci::{self, ConformalMetric};
use geoflow_core::{curve, mcf, ClosedCurve, Point, ScalarField};

fn csf_step(c: &mut Criterion) {
    let policy = StepPolicy::default();
    for n in [256, 1024] {
        let curve = curve::resample_arclength(&ClosedCurve::ellipse(n, 2.0, 1.0).unwrap(), n).unwrap();
        let state = FlowState::initial(curve);
        let dt = policy.dt_for(&state.curve);
        c.bench_function(&format!("csf euler step n={n}"), |b| {
            b.iter(|| csf::euler_step(black_box(&state), dt, policy.cfl_factor).unwrap())
        });
    }
    let circle = ClosedCurve::circle(256, 1.0, Point::new(0.0, 0.0)).unwrap();
    c.bench_function("isoperimetric sup n=256", |b| {
        b.iter(|| csf::isoperimetric_sup(black_box(&circle)).unwrap())
    });
}

fn grid_steps(c: &mut Criterion) {
    let field = ScalarField::from_fn_2d(128, 1.0, |x, y| 1.5 + (6.3 * x).sin() * (6.3 * y).cos()).unwrap();
    let state = HeatState::new(field.clone(), 0.0).unwrap();
    let dt = heat::heat_dt_limit(&field);
    c.bench_function("heat step 128^2", |b| b.iter(|| heat::step_heat(black_box(&state), dt).unwrap()));
    c.bench_function("heat functionals 128^2", |b| {
        b.iter(|| heat::functionals(black_box(&state), true).unwrap())
    });
    let dt = mcf::MCF_CFL * field.h() * field.h();
    c.bench_function("graph mcf step 128^2", |b| {
        b.iter(|| mcf::step_graph_mcf(black_box(&field), dt).unwrap())
    });
    let metric = ConformalMetric::from_fn(64, |x, y| 0.3 * (6.3 * x).sin() * (6.3 * y).cos()).unwrap();
    let dt = metric.dt_limit();
    c.bench_function("ricci step 64^2", |b| b.iter(|| ricci::step_ricci(black_box(&metric), dt).unwrap()));
}

fn mse_solve(c: &mut Criterion) {
    let grid = RectGrid::new(-1.2, 1.2, -1.2, 1.2, 32, 32).unwrap();
    let problem = GraphProblem::from_fn(grid, |x, y| (x.cos() / y.cos()).ln()).unwrap();
    let mut group = c.benchmark_group("mse");
    group.sample_size(10);
    group.bench_function("scherk 32x32", |b| b.iter(|| mse::solve_mse(black_box(&problem)).unwrap()));
    group.finish();
}

criterion_group!(benches, csf_step, grid_steps, mse_solve);
criterion_main!(benches);
