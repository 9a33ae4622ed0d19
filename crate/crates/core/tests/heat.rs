use std::f64::consts::{PI, TAU};

use geoflow_core::heat::{self, HeatState};
use geoflow_core::{GeoflowError, ScalarField};
use proptest::prelude::*;

fn state_1d(n: usize, f: impl Fn(f64) -> f64) -> HeatState {
    HeatState::new(ScalarField::from_fn_1d(n, 1.0, f).unwrap(), 0.0).unwrap()
}

fn evolve(s: &HeatState, t_end: f64) -> HeatState {
    heat::heat_trajectory(s, t_end, usize::MAX).unwrap().pop().unwrap()
}

/// `(2/n) sum u_k g(2 pi m x_k)`
fn projection(f: &ScalarField, m: f64, g: fn(f64) -> f64) -> f64 {
    let n = f.n();
    2.0 / n as f64 * (0..n).map(|k| f.values()[k] * g(TAU * m * f.coords(k).0)).sum::<f64>()
}

/// Periodic trapezoid rule on [0, 1).
fn trapezoid(f: impl Fn(f64) -> f64) -> f64 {
    let m = 8192;
    (0..m).map(|k| f(k as f64 / m as f64)).sum::<f64>() / m as f64
}

#[test]
fn single_mode_decays_at_its_fourier_rate() {
    let s = state_1d(128, |x| 1.0 + 0.5 * (TAU * x).sin());
    let t = 0.02;
    let end = evolve(&s, t);
    let want = 0.5 * (-TAU * TAU * t).exp();
    assert!((projection(&end.field, 1.0, f64::sin) / want - 1.0).abs() < 1e-3);
}

#[test]
fn two_modes_decay_independently() {
    let s = state_1d(128, |x| 1.0 + 0.5 * (TAU * x).sin() + 0.25 * (2.0 * TAU * x).sin());
    let t = 0.01;
    let end = evolve(&s, t);
    for (m, a) in [(1.0, 0.5), (2.0, 0.25)] {
        let want = a * (-(TAU * m).powi(2) * t).exp();
        assert!((projection(&end.field, m, f64::sin) / want - 1.0).abs() < 1e-3, "mode {m}");
    }
}

#[test]
fn functionals_match_quadrature() {
    let u = |x: f64| 1.0 + 0.5 * (TAU * x).sin();
    let du = |x: f64| 0.5 * TAU * (TAU * x).cos();
    let f = heat::functionals(&state_1d(512, u), true).unwrap();
    assert!((f.l2 - trapezoid(|x| u(x).powi(2))).abs() < 1e-6);
    assert!((f.energy - trapezoid(|x| du(x).powi(2))).abs() < 1e-6);
    assert!((f.entropy.unwrap() - trapezoid(|x| u(x) * u(x).ln())).abs() < 1e-6);
    assert!((f.fisher.unwrap() - trapezoid(|x| du(x).powi(2) / u(x))).abs() < 1e-6);
}

#[test]
fn constant_functionals() {
    let one = heat::functionals(&state_1d(32, |_| 1.0), true).unwrap();
    assert_eq!((one.l2, one.energy, one.entropy, one.fisher), (1.0, 0.0, Some(0.0), Some(0.0)));
    let two = heat::functionals(&state_1d(32, |_| 2.0), true).unwrap();
    assert!((two.entropy.unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
}

#[test]
fn hessian_form_matches_fisher_dissipation() {
    for u0 in [
        (|x: f64| 1.0 + 0.5 * (TAU * x).sin()) as fn(f64) -> f64,
        |x| 1.0 + 0.3 * (TAU * x).sin() + 0.2 * (2.0 * TAU * x).cos(),
    ] {
        let s = state_1d(512, u0);
        let next = heat::step_heat(&s, heat::heat_dt_limit(&s.field)).unwrap();
        assert!(heat::fisher_hessian_dissipation_residual(&s, &next).unwrap() < 1e-4);
    }
}

#[test]
fn li_yau_rejects_bad_inputs() {
    let s = state_1d(32, |x| 1.0 + 0.5 * (TAU * x).sin());
    assert!(matches!(heat::li_yau_min(&s, 0.0), Err(GeoflowError::Domain(_))));
    let neg = state_1d(32, |x| (TAU * x).sin());
    assert!(matches!(heat::li_yau_min(&neg, 1.0), Err(GeoflowError::Positivity(_))));
    // constants sit at n / (2t)
    assert!((heat::li_yau_min(&state_1d(32, |_| 1.0), 0.25).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn li_yau_along_a_gaussian_bump() {
    let s = state_1d(512, |x| {
        1e-3 + (-3..=3).map(|m| (-((x - 0.5 + m as f64) / 0.05).powi(2)).exp()).sum::<f64>()
    });
    for st in heat::heat_trajectory(&s, 0.05, 20).unwrap().iter().skip(1) {
        assert!(heat::li_yau_min(st, st.time).unwrap() >= -1e-6, "t = {}", st.time);
    }
}

#[test]
fn series_round_trips_through_csv() {
    let s = state_1d(64, |x| 1.0 + 0.5 * (TAU * x).cos());
    let states = heat::heat_trajectory(&s, 0.01, 5).unwrap();
    let series = heat::heat_series(&states, true).unwrap();
    assert_eq!(geoflow_core::DiagnosticSeries::from_csv(&series.to_csv()).unwrap(), series);
}

#[test]
fn smoothing_bound_of_a_single_mode() {
    // u = e^{-4 pi^2 t} sin(2 pi x): t |u_x|^2 peaks at t = 1 / (8 pi^2)
    let s = state_1d(256, |x| (TAU * x).sin());
    let states = heat::heat_trajectory(&s, 0.05, 1).unwrap();
    let want = TAU * TAU / (8.0 * PI * PI) * (-1.0f64).exp();
    assert!((heat::smoothing_bound(&states, 1).unwrap() / want - 1.0).abs() < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn comparison_principle(
        a in proptest::collection::vec(-0.3f64..0.3, 3),
        gap in proptest::collection::vec(0.0f64..0.2, 3),
    ) {
        let mode = |c: &[f64], x: f64| -> f64 {
            c.iter().enumerate().map(|(m, v)| v * (TAU * (m + 1) as f64 * x).cos()).sum()
        };
        let lower = state_1d(64, |x| 2.0 + mode(&a, x));
        // upper = lower + a non-negative bump
        let upper = state_1d(64, |x| 2.0 + mode(&a, x) + gap.iter().sum::<f64>() * (1.0 + (TAU * x).cos()));
        let lo = heat::heat_trajectory(&lower, 0.01, 10).unwrap();
        let hi = heat::heat_trajectory(&upper, 0.01, 10).unwrap();
        for (l, h) in lo.iter().zip(&hi) {
            prop_assert_eq!(l.time, h.time);
            for (p, q) in l.field.values().iter().zip(h.field.values()) {
                prop_assert!(q >= p);
            }
        }
    }

    #[test]
    fn mass_is_conserved_per_step(
        a in proptest::collection::vec(-0.4f64..0.4, 4),
    ) {
        let s = HeatState::new(
            ScalarField::from_fn_2d(32, 1.0, |x, y| 1.0 + a[0] * (TAU * x).sin() + a[1] * (TAU * y).cos()
                + a[2] * (TAU * (x + y)).sin() + a[3] * (2.0 * TAU * x).cos()).unwrap(),
            0.0,
        ).unwrap();
        let next = heat::step_heat(&s, heat::heat_dt_limit(&s.field)).unwrap();
        prop_assert!((next.field.integral() - s.field.integral()).abs() <= 1e-12);
        prop_assert!(next.field.max() <= s.field.max());
        prop_assert!(next.field.min() >= s.field.min());
    }
}
