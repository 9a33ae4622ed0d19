//! Ricci flow of a conformal metric `g = e^{2u} g0` on the flat unit torus.
//!
//! With a flat background the flow is `u_t = e^{-2u} Lap u` and the scalar
//! curvature is `R = -2 e^{-2u} Lap u`, so `u_t = -R / 2`.

use crate::error::{GeoflowError, Result};
use crate::grid::{Dim, ScalarField};
use crate::series::{DiagnosticSeries, RICCI_COLUMNS};

pub const RICCI_CFL: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric {
    u: ScalarField,
}

impl ConformalMetric {
    /// `u` must be a periodic 2D field.
    pub fn new(u: ScalarField) -> Result<Self> {
        if u.dim() != Dim::Two || u.slope() != [0.0, 0.0] {
            return Err(GeoflowError::InvalidInput(
                "conformal factor must be a periodic 2D field".into(),
            ));
        }
        Ok(ConformalMetric { u })
    }

    /// `u(x, y)` sampled on the `n x n` grid of the unit torus.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(ScalarField::from_fn_2d(n, 1.0, f)?)
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    fn weights(&self) -> Vec<f64> {
        self.u.values().iter().map(|v| (2.0 * v).exp()).collect()
    }

    pub fn dt_limit(&self) -> f64 {
        let h = self.u.h();
        RICCI_CFL * h * h * (2.0 * self.u.min()).exp()
    }
}

pub fn scalar_curvature(metric: &ConformalMetric) -> Result<ScalarField> {
    let lap = metric.u.laplacian();
    metric.u.with_values(
        metric
            .u
            .values()
            .iter()
            .zip(&lap)
            .map(|(u, l)| -2.0 * (-2.0 * u).exp() * l)
            .collect(),
    )
}

pub fn step_ricci(metric: &ConformalMetric, dt: f64) -> Result<ConformalMetric> {
    let limit = metric.dt_limit();
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(GeoflowError::StepSize { dt, limit });
    }
    let lap = metric.u.laplacian();
    let values: Vec<f64> = metric
        .u
        .values()
        .iter()
        .zip(&lap)
        .map(|(u, l)| u + dt * (-2.0 * u).exp() * l)
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(GeoflowError::BlowUp(format!("conformal factor overflowed at dt={dt}")));
    }
    Ok(ConformalMetric {
        u: metric.u.with_values(values)?,
    })
}

/// `int e^{2u} dA0`.
pub fn area(metric: &ConformalMetric) -> f64 {
    metric.u.integrate(|_, v| (2.0 * v).exp())
}

/// `int R dmu`; zero on the torus.
pub fn total_curvature_measure(metric: &ConformalMetric) -> Result<f64> {
    let r = scalar_curvature(metric)?;
    let w = metric.weights();
    Ok(r.integrate(|k, v| v * w[k]))
}

/// Constant-curvature solution `R0 / (1 - R0 t)` of `R' = R^2`.
pub fn curvature_ode_oracle(r0: f64, t: f64) -> Result<f64> {
    let denom = 1.0 - r0 * t;
    if !(denom > 0.0) {
        return Err(GeoflowError::Domain(format!(
            "R0={r0} blows up at t={} (asked for t={t})",
            1.0 / r0
        )));
    }
    Ok(r0 / denom)
}

/// Harnack quantity `R_t - |DR|^2 / R + R / t` of the spatially constant
/// solution, which equals `R^2 + R / t`.
pub fn harnack_ode_quantity(r0: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(GeoflowError::Domain(format!("Harnack quantity needs t > 0, got {t}")));
    }
    let r = curvature_ode_oracle(r0, t)?;
    let r_t = r0 * r0 / (1.0 - r0 * t).powi(2);
    Ok(r_t + r / t)
}

/// `int R log R dmu`, defined only for positive curvature.
pub fn hamilton_entropy(metric: &ConformalMetric) -> Result<f64> {
    curvature_entropy(metric, &scalar_curvature(metric)?)
}

/// `int R log R dmu` for a curvature field `r` carried separately from the
/// metric (as in [`CurvaturePair`]).
pub fn curvature_entropy(metric: &ConformalMetric, r: &ScalarField) -> Result<f64> {
    if r.n() != metric.u.n() || r.dim() != Dim::Two {
        return Err(GeoflowError::InvalidInput("R must live on the metric's grid".into()));
    }
    if r.min() <= 0.0 {
        return Err(GeoflowError::Positivity(format!(
            "entropy needs R > 0, minimum is {}",
            r.min()
        )));
    }
    let w = metric.weights();
    Ok(r.integrate(|k, v| v * v.ln() * w[k]))
}

/// `int (R + |grad f|_g^2) e^{-f} dmu` with `|grad f|_g^2 = e^{-2u} |D f|^2`.
pub fn perelman_f(metric: &ConformalMetric, f: &ScalarField) -> Result<f64> {
    if f.n() != metric.u.n() || f.dim() != Dim::Two {
        return Err(GeoflowError::InvalidInput("f must live on the metric's grid".into()));
    }
    let r = scalar_curvature(metric)?;
    let grad = f.gradient4();
    let u = metric.u.values();
    let rv = r.values();
    Ok(f.integrate(|k, fv| {
        let g2 = grad[k][0] * grad[k][0] + grad[k][1] * grad[k][1];
        let w = (2.0 * u[k]).exp();
        (rv[k] * w + g2) * (-fv).exp()
    }))
}

/// State of the coupled system `u_t = -R/2`, `R_t = e^{-2u} Lap R + R^2`,
/// which is the curvature evolution with `R` carried as its own field.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub metric: ConformalMetric,
    pub r: ScalarField,
}

pub fn step_curvature_pair(pair: &CurvaturePair, dt: f64) -> Result<CurvaturePair> {
    let limit = pair.metric.dt_limit();
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(GeoflowError::StepSize { dt, limit });
    }
    let lap = pair.r.laplacian();
    let u = pair.metric.u.values();
    let r = pair.r.values();
    let new_r: Vec<f64> = (0..r.len())
        .map(|k| r[k] + dt * ((-2.0 * u[k]).exp() * lap[k] + r[k] * r[k]))
        .collect();
    let new_u: Vec<f64> = (0..u.len()).map(|k| u[k] - 0.5 * dt * r[k]).collect();
    if new_r.iter().chain(&new_u).any(|v| !v.is_finite()) {
        return Err(GeoflowError::BlowUp("curvature overflowed".into()));
    }
    Ok(CurvaturePair {
        metric: ConformalMetric {
            u: pair.metric.u.with_values(new_u)?,
        },
        r: pair.r.with_values(new_r)?,
    })
}

/// Result of [`run_ricci`].
#[derive(Debug, Clone)]
pub struct RicciRun {
    pub series: DiagnosticSeries,
    pub final_metric: ConformalMetric,
    /// Sampled `(t, metric)` pairs, including the first and last.
    pub samples: Vec<(f64, ConformalMetric)>,
}

/// Steps at the conformal CFL limit to `t_end`; `f` (default zero) enters the
/// Perelman column.
pub fn run_ricci(
    initial: &ConformalMetric,
    t_end: f64,
    sample_every: usize,
    f: Option<&ScalarField>,
) -> Result<RicciRun> {
    if !(t_end > 0.0) {
        return Err(GeoflowError::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let zero = initial.u.with_values(vec![0.0; initial.u.len()])?;
    let f = f.unwrap_or(&zero);
    let mut series = DiagnosticSeries::new(&RICCI_COLUMNS);
    let record = |series: &mut DiagnosticSeries, t: f64, m: &ConformalMetric| -> Result<()> {
        let r = scalar_curvature(m)?;
        series.push(
            t,
            vec![
                Some(r.max_abs()),
                Some(r.min()),
                Some(total_curvature_measure(m)?),
                Some(area(m)),
                Some(perelman_f(m, f)?),
            ],
        )
    };
    record(&mut series, 0.0, initial)?;
    let mut samples = vec![(0.0, initial.clone())];
    let mut metric = initial.clone();
    let mut t = 0.0;
    let mut k = 0usize;
    let eps = 1e-14 * t_end.max(1.0);
    while t_end - t > eps {
        let dt = metric.dt_limit().min(t_end - t);
        metric = step_ricci(&metric, dt)?;
        t += dt;
        k += 1;
        if k.is_multiple_of(sample_every.max(1)) || t_end - t <= eps {
            record(&mut series, t, &metric)?;
            samples.push((t, metric.clone()));
        }
    }
    Ok(RicciRun {
        series,
        final_metric: metric,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metrics_have_zero_curvature() {
        for c in [0.0, 0.4] {
            let m = ConformalMetric::from_fn(16, |_, _| c).unwrap();
            assert_eq!(scalar_curvature(&m).unwrap().max_abs(), 0.0);
            assert_eq!(step_ricci(&m, m.dt_limit()).unwrap(), m);
            assert_eq!(perelman_f(&m, &m.u().map(|_| 0.0).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn ode_oracle_values() {
        assert_eq!(curvature_ode_oracle(-1.0, 1.0).unwrap(), -0.5);
        assert_eq!(curvature_ode_oracle(0.0, 7.0).unwrap(), 0.0);
        assert!((curvature_ode_oracle(-2.0, 3.0).unwrap() + 2.0 / 7.0).abs() < 1e-15);
        assert!(matches!(curvature_ode_oracle(1.0, 1.0), Err(GeoflowError::Domain(_))));
    }

    #[test]
    fn entropy_rejects_mixed_sign() {
        let m = ConformalMetric::from_fn(32, |x, _| 0.1 * (std::f64::consts::TAU * x).sin()).unwrap();
        assert!(matches!(hamilton_entropy(&m), Err(GeoflowError::Positivity(_))));
    }

    #[test]
    fn entropy_of_constant_curvature() {
        let m = ConformalMetric::from_fn(16, |_, _| 0.0).unwrap();
        let e = m.u().map(|_| std::f64::consts::E).unwrap();
        assert!((curvature_entropy(&m, &e).unwrap() - std::f64::consts::E).abs() < 1e-12);
        let one = m.u().map(|_| 1.0).unwrap();
        assert_eq!(curvature_entropy(&m, &one).unwrap(), 0.0);
    }

    #[test]
    fn rejects_one_dimensional_factor() {
        let f = ScalarField::from_fn_1d(32, 1.0, |_| 0.0).unwrap();
        assert!(ConformalMetric::new(f).is_err());
    }
}
