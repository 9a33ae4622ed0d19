use geoflow_core::mse::{self, GraphProblem, RectField, RectGrid};
use geoflow_core::GeoflowError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCHERK_HALF_WIDTH: f64 = 1.2;

fn scherk(x: f64, y: f64) -> f64 {
    (x.cos() / y.cos()).ln()
}

fn scherk_grid(n: usize) -> RectGrid {
    RectGrid::new(-SCHERK_HALF_WIDTH, SCHERK_HALF_WIDTH, -SCHERK_HALF_WIDTH, SCHERK_HALF_WIDTH, n, n).unwrap()
}

fn solve(grid: RectGrid, g: impl Fn(f64, f64) -> f64) -> mse::MseSolution {
    mse::solve_mse(&GraphProblem::from_fn(grid, g).unwrap()).unwrap()
}

/// Area of the Scherk graph, `int sqrt(1 + tan^2 x + tan^2 y)`, by tensor Simpson.
fn scherk_area() -> f64 {
    let m = 2000;
    let h = 2.0 * SCHERK_HALF_WIDTH / m as f64;
    let w = |i: usize| match i {
        0 => 1.0,
        i if i == m => 1.0,
        i if i % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let tan2: Vec<f64> = (0..=m).map(|i| (-SCHERK_HALF_WIDTH + i as f64 * h).tan().powi(2)).collect();
    let mut s = 0.0;
    for i in 0..=m {
        for j in 0..=m {
            s += w(i) * w(j) * (1.0 + tan2[i] + tan2[j]).sqrt();
        }
    }
    s * h * h / 9.0
}

fn max_error(field: &RectField, f: impl Fn(f64, f64) -> f64) -> f64 {
    (0..field.grid.nodes())
        .map(|k| {
            let (x, y) = field.grid.position(k);
            (field.values[k] - f(x, y)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn affine_data_gives_the_plane() {
    let grid = RectGrid::new(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
    let plane = |x: f64, y: f64| 0.3 * x + 0.1 * y;
    let sol = solve(grid, plane);
    assert!(max_error(&sol.field, plane) <= 1e-12);
    let res = mse::mse_residual(&sol.field);
    assert!(res.iter().all(|r| r.abs() <= 1e-12));
}

#[test]
fn zero_data_gives_zero() {
    let grid = RectGrid::new(0.0, 2.0, -1.0, 1.0, 20, 16).unwrap();
    let sol = solve(grid, |_, _| 0.0);
    assert!(sol.field.values.iter().all(|v| *v == 0.0));
    assert!((mse::area(&sol.field) - 4.0).abs() < 1e-12);
}

#[test]
fn area_of_flat_and_tilted_graphs() {
    let grid = RectGrid::new(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
    assert!((mse::area(&RectField::from_fn(grid, |_, _| 0.0).unwrap()) - 1.0).abs() < 1e-12);
    assert!((mse::area(&RectField::from_fn(grid, |x, _| 0.3 * x).unwrap()) - 1.09f64.sqrt()).abs() < 1e-10);
}

#[test]
fn scherk_error_is_second_order() {
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|n| max_error(&solve(scherk_grid(*n), scherk).field, scherk))
        .collect();
    assert!(errs[1] <= 5e-3);
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "observed order {order}");
    }
}

#[test]
fn extrapolated_scherk_area_matches_quadrature() {
    let a64 = mse::area(&solve(scherk_grid(64), scherk).field);
    let a128 = mse::area(&solve(scherk_grid(128), scherk).field);
    let extrapolated = a128 + (a128 - a64) / 3.0;
    assert!((extrapolated - scherk_area()).abs() < 1e-4);
}

#[test]
fn solution_beats_random_competitors() {
    let grid = scherk_grid(32);
    let sol = solve(grid, scherk);
    let a = mse::area(&sol.field);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let amp = rng.gen_range(1e-4..1e-1);
        let mut competitor = sol.field.clone();
        for k in 0..grid.nodes() {
            if !grid.is_boundary(k) {
                competitor.values[k] += amp * rng.gen_range(-1.0..1.0);
            }
        }
        assert!(a <= mse::area(&competitor) + 1e-9);
    }
}

#[test]
fn newton_residual_decreases_after_the_first_full_step() {
    let grid = RectGrid::new(-1.4, 1.4, -1.4, 1.4, 48, 48).unwrap();
    let sol = solve(grid, scherk);
    let first_full = sol.step_lengths.iter().position(|s| *s == 1.0).unwrap();
    for w in sol.residual_history[first_full..].windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(*sol.residual_history.last().unwrap() <= 1e-8);
}

#[test]
fn first_variation_examples() {
    let grid = RectGrid::new(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
    let bump = RectField::from_fn(grid, |x, y| x * (1.0 - x) * y * (1.0 - y))
        .unwrap()
        .with_zero_boundary();
    let flat = RectField::from_fn(grid, |_, _| 0.0).unwrap();
    assert_eq!(mse::first_variation(&flat, &bump).unwrap(), 0.0);
    assert!(mse::first_variation(&bump, &bump).unwrap() > 0.0);
    let leaky = RectField::from_fn(grid, |x, _| x).unwrap();
    assert!(matches!(mse::first_variation(&bump, &leaky), Err(GeoflowError::Contract(_))));
}

#[test]
fn stationary_in_random_directions() {
    let sol = solve(scherk_grid(32), scherk);
    let grid = sol.field.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let eta = RectField::new(grid, (0..grid.nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
            .with_zero_boundary();
        let norm = (eta.values.iter().map(|v| v * v).sum::<f64>() * grid.hx * grid.hy).sqrt();
        assert!(mse::first_variation(&sol.field, &eta).unwrap().abs() <= 1e-7 * norm);
    }
}

#[test]
fn steep_data_reports_non_convergence() {
    let grid = RectGrid::new(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
    let problem = GraphProblem::from_fn(grid, |x, y| if x == 0.0 && y > 0.0 && y < 1.0 { 1e6 } else { 0.0 }).unwrap();
    match mse::solve_mse(&problem) {
        Err(GeoflowError::NonConvergence { history }) => assert_eq!(history.len(), mse::NEWTON_BUDGET + 1),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn field_and_boundary_csv_round_trip(nx in 16usize..24, ny in 16usize..24, seed in 0u64..1000) {
        let grid = RectGrid::new(-0.5, 1.5, 0.25, 2.0, nx, ny).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = RectField::new(grid, (0..grid.nodes()).map(|_| rng.gen_range(-10.0..10.0)).collect()).unwrap();
        prop_assert_eq!(RectField::from_csv(&field.to_csv()).unwrap(), field.clone());
        let problem = GraphProblem::from_fn(grid, |x, y| x * y - 0.3).unwrap();
        let back = GraphProblem::from_boundary_csv(grid, &problem.boundary_csv()).unwrap();
        prop_assert_eq!(back.boundary(), problem.boundary());
    }
}
