//! Mean curvature flow of periodic graphs and the round-sphere oracle.

use crate::error::{GeoflowError, Result};
use crate::grid::{Dim, ScalarField};
use crate::series::{DiagnosticSeries, MCF_COLUMNS};

pub const MCF_CFL: f64 = 0.2;

/// One explicit step of `u_t = (delta_ij - u_i u_j / (1 + |Du|^2)) u_ij`.
pub fn step_graph_mcf(field: &ScalarField, dt: f64) -> Result<ScalarField> {
    let h = field.h();
    let limit = MCF_CFL * h * h;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(GeoflowError::StepSize { dt, limit });
    }
    let grad = field.gradient();
    let hess = field.hessian();
    let values: Vec<f64> = field
        .values()
        .iter()
        .zip(grad.iter().zip(&hess))
        .map(|(&v, (&[ux, uy], &[uxx, uxy, uyy]))| {
            let speed = match field.dim() {
                Dim::One => uxx / (1.0 + ux * ux),
                Dim::Two => {
                    ((1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy)
                        / (1.0 + ux * ux + uy * uy)
                }
            };
            v + dt * speed
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(GeoflowError::BlowUp(format!("graph MCF produced a non-finite value at dt={dt}")));
    }
    field.with_values(values)
}

/// `int sqrt(1 + |Du|^2)` over one period cell, with fourth-order slopes.
pub fn graph_area(field: &ScalarField) -> f64 {
    let grad = field.gradient4();
    field.integrate(|k, _| {
        let [gx, gy] = grad[k];
        (1.0 + gx * gx + gy * gy).sqrt()
    })
}

/// Radius `sqrt(r0^2 - 2 n t)` of a round `n`-sphere under MCF.
pub fn sphere_radius_oracle(r0: f64, n: u32, t: f64) -> Result<f64> {
    let sq = r0 * r0 - 2.0 * n as f64 * t;
    if !(sq > 0.0) {
        return Err(GeoflowError::Domain(format!(
            "t={t} is at or past the extinction time {} of a radius-{r0} {n}-sphere",
            r0 * r0 / (2.0 * n as f64)
        )));
    }
    Ok(sq.sqrt())
}

/// Steps at the CFL limit up to `t_end`, sampling area and extrema of the
/// periodic part every `sample_every` steps.
pub fn run_graph_mcf(initial: &ScalarField, t_end: f64, sample_every: usize) -> Result<(DiagnosticSeries, ScalarField)> {
    if !(t_end > 0.0) {
        return Err(GeoflowError::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let mut series = DiagnosticSeries::new(&MCF_COLUMNS);
    let row = |f: &ScalarField| vec![Some(graph_area(f)), Some(f.max()), Some(f.min())];
    series.push(0.0, row(initial))?;
    let dt_max = MCF_CFL * initial.h() * initial.h();
    let mut field = initial.clone();
    let mut t = 0.0;
    let mut k = 0usize;
    while t_end - t > 1e-14 * t_end.max(1.0) {
        let dt = dt_max.min(t_end - t);
        field = step_graph_mcf(&field, dt)?;
        t += dt;
        k += 1;
        if k.is_multiple_of(sample_every.max(1)) || t_end - t <= 1e-14 * t_end.max(1.0) {
            series.push(t, row(&field))?;
        }
    }
    Ok((series, field))
}
