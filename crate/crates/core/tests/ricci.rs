use std::f64::consts::TAU;

use geoflow_core::ricci::{self, ConformalMetric, CurvaturePair};
use geoflow_core::{GeoflowError, ScalarField};
use proptest::prelude::*;

fn mode_amplitude(u: &ScalarField) -> f64 {
    let n = u.len();
    2.0 / n as f64
        * (0..n)
            .map(|k| u.values()[k] * (TAU * u.coords(k).0).sin())
            .sum::<f64>()
}

fn evolve(m: &ConformalMetric, t_end: f64) -> ConformalMetric {
    ricci::run_ricci(m, t_end, usize::MAX, None).unwrap().final_metric
}

#[test]
fn small_conformal_factor_decays_like_heat() {
    let eps = 1e-3;
    let t = 0.05;
    let m = ConformalMetric::from_fn(64, |x, _| eps * (TAU * x).sin()).unwrap();
    let end = evolve(&m, t);
    let ratio = mode_amplitude(end.u()) / mode_amplitude(m.u());
    assert!((ratio / (-TAU * TAU * t).exp() - 1.0).abs() < 1e-3);
}

#[test]
fn area_drift_is_first_order_in_dt() {
    let m = ConformalMetric::from_fn(32, |x, y| 0.3 * (TAU * x).sin() * (TAU * y).cos()).unwrap();
    let t = 0.01;
    let drift = |steps: usize| {
        let dt = t / steps as f64;
        let mut g = m.clone();
        for _ in 0..steps {
            g = ricci::step_ricci(&g, dt).unwrap();
        }
        (ricci::area(&g) / ricci::area(&m) - 1.0).abs()
    };
    let steps = (t / m.dt_limit()).ceil() as usize * 2;
    let (coarse, fine) = (drift(steps), drift(2 * steps));
    assert!(coarse < 1e-4);
    assert!((fine / coarse - 0.5).abs() < 0.05, "ratio {}", fine / coarse);
}

#[test]
fn perelman_f_on_the_flat_torus_is_fisher_information() {
    // with w = e^{-f}, int |Df|^2 e^{-f} = int |Dw|^2 / w
    let f = |x: f64, y: f64| 0.3 * (TAU * x).sin() * (TAU * y).cos();
    let grad2 = |x: f64, y: f64| {
        let fx = 0.3 * TAU * (TAU * x).cos() * (TAU * y).cos();
        let fy = -0.3 * TAU * (TAU * x).sin() * (TAU * y).sin();
        fx * fx + fy * fy
    };
    let m = 512;
    let mut oracle = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (i as f64 / m as f64, j as f64 / m as f64);
            oracle += grad2(x, y) * (-f(x, y)).exp();
        }
    }
    oracle /= (m * m) as f64;
    let flat = ConformalMetric::from_fn(128, |_, _| 0.0).unwrap();
    let field = ScalarField::from_fn_2d(128, 1.0, f).unwrap();
    assert!((ricci::perelman_f(&flat, &field).unwrap() - oracle).abs() < 1e-6);
}

#[test]
fn perelman_f_with_zero_potential_is_total_curvature() {
    let m = ConformalMetric::from_fn(32, |x, y| 0.2 * (TAU * x).cos() + 0.1 * (TAU * y).sin()).unwrap();
    let zero = ScalarField::from_fn_2d(32, 1.0, |_, _| 0.0).unwrap();
    let f = ricci::perelman_f(&m, &zero).unwrap();
    assert!((f - ricci::total_curvature_measure(&m).unwrap()).abs() < 1e-12);
}

/// Largest `|R_pair - R(u)|` relative to `sup |R(u)|` after flowing to `t_end`.
fn pair_mismatch(n: usize, t_end: f64) -> f64 {
    let m = ConformalMetric::from_fn(n, |x, y| 0.2 * (TAU * x).sin() * (TAU * y).cos()).unwrap();
    let mut pair = CurvaturePair {
        r: ricci::scalar_curvature(&m).unwrap(),
        metric: m,
    };
    let mut t = 0.0;
    while t < t_end {
        let dt = pair.metric.dt_limit().min(t_end - t);
        pair = ricci::step_curvature_pair(&pair, dt).unwrap();
        t += dt;
    }
    let r = ricci::scalar_curvature(&pair.metric).unwrap();
    let diff = pair.r.values().iter().zip(r.values()).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    diff / r.max_abs()
}

#[test]
fn coupled_pair_converges_to_the_metric_curvature() {
    let (coarse, fine) = (pair_mismatch(16, 0.005), pair_mismatch(32, 0.005));
    assert!(fine < 2e-2);
    assert!(coarse / fine >= 3.0, "{coarse} -> {fine}");
}

#[test]
fn curvature_blows_up_only_for_positive_r0() {
    assert!(matches!(ricci::curvature_ode_oracle(2.0, 0.5), Err(GeoflowError::Domain(_))));
    assert!((ricci::curvature_ode_oracle(-2.0, 0.5).unwrap() + 1.0).abs() < 1e-15);
    assert!(ricci::harnack_ode_quantity(0.5, 0.0).is_err());
}

#[test]
fn rejects_steps_beyond_cfl() {
    let m = ConformalMetric::from_fn(16, |x, _| 0.1 * (TAU * x).sin()).unwrap();
    assert!(matches!(
        ricci::step_ricci(&m, 1.5 * m.dt_limit()),
        Err(GeoflowError::StepSize { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauss_bonnet_on_the_torus(a in proptest::collection::vec(-0.3f64..0.3, 4), c in -1.0f64..1.0) {
        let m = ConformalMetric::from_fn(32, |x, y| {
            c + a[0] * (TAU * x).sin() + a[1] * (TAU * y).cos()
                + a[2] * (TAU * (x - y)).sin() + a[3] * (2.0 * TAU * x).cos() * (TAU * y).sin()
        }).unwrap();
        prop_assert!(ricci::total_curvature_measure(&m).unwrap().abs() <= 1e-10);
        let next = ricci::step_ricci(&m, m.dt_limit()).unwrap();
        prop_assert!(ricci::total_curvature_measure(&next).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn constant_factors_are_flat_and_fixed(c in -3.0f64..3.0) {
        let m = ConformalMetric::from_fn(16, |_, _| c).unwrap();
        prop_assert_eq!(ricci::scalar_curvature(&m).unwrap().max_abs(), 0.0);
        prop_assert_eq!(ricci::step_ricci(&m, m.dt_limit()).unwrap(), m);
    }
}
