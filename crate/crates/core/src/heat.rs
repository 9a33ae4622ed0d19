//! Periodic heat flow and its monotone functionals.

use crate::error::{GeoflowError, Result};
use crate::grid::{Dim, ScalarField};
use crate::series::{DiagnosticSeries, HEAT_COLUMNS};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub field: ScalarField,
    pub time: f64,
}

impl HeatState {
    /// The field must be periodic (zero slope).
    pub fn new(field: ScalarField, time: f64) -> Result<Self> {
        if field.slope() != [0.0, 0.0] {
            return Err(GeoflowError::InvalidInput(
                "heat flow needs a periodic field (zero slope)".into(),
            ));
        }
        if !(time >= 0.0) {
            return Err(GeoflowError::InvalidInput(format!("time must be non-negative, got {time}")));
        }
        Ok(HeatState { field, time })
    }

    pub fn is_positive(&self) -> bool {
        self.field.min() > 0.0
    }

    fn require_positive(&self) -> Result<()> {
        if self.is_positive() {
            Ok(())
        } else {
            Err(GeoflowError::Positivity(format!(
                "field minimum {} at t={} is not positive",
                self.field.min(),
                self.time
            )))
        }
    }
}

/// Explicit stability limit `h^2 / (2 d)`.
pub fn heat_dt_limit(field: &ScalarField) -> f64 {
    let h = field.h();
    match field.dim() {
        Dim::One => 0.25 * h * h,
        Dim::Two => 0.125 * h * h,
    }
}

pub fn step_heat(state: &HeatState, dt: f64) -> Result<HeatState> {
    let limit = heat_dt_limit(&state.field);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(GeoflowError::StepSize { dt, limit });
    }
    let lap = state.field.laplacian();
    let values = state
        .field
        .values()
        .iter()
        .zip(&lap)
        .map(|(v, l)| v + dt * l)
        .collect();
    Ok(HeatState {
        field: state.field.with_values(values)?,
        time: state.time + dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub l2: f64,
    pub energy: f64,
    /// `None` unless requested.
    pub entropy: Option<f64>,
    pub fisher: Option<f64>,
}

/// `int u^2`, `int |Du|^2` and, when `with_density`, `int u log u` and
/// `int |Du|^2 / u`. Gradients are fourth order.
pub fn functionals(state: &HeatState, with_density: bool) -> Result<Functionals> {
    let f = &state.field;
    let grad = f.gradient4();
    let g2 = |k: usize| grad[k][0] * grad[k][0] + grad[k][1] * grad[k][1];
    let l2 = f.integrate(|_, v| v * v);
    let energy = f.integrate(|k, _| g2(k));
    let (entropy, fisher) = if with_density {
        state.require_positive()?;
        (
            Some(f.integrate(|_, v| v * v.ln())),
            Some(f.integrate(|k, v| g2(k) / v)),
        )
    } else {
        (None, None)
    };
    Ok(Functionals {
        l2,
        energy,
        entropy,
        fisher,
    })
}

fn fisher_information(state: &HeatState) -> Result<f64> {
    Ok(functionals(state, true)?.fisher.expect("requested"))
}

fn midpoint(prev: &HeatState, next: &HeatState) -> Result<(f64, HeatState)> {
    let dt = next.time - prev.time;
    if !(dt > 0.0) || prev.field.n() != next.field.n() || prev.field.dim() != next.field.dim() {
        return Err(GeoflowError::Contract("states are not consecutive on one grid".into()));
    }
    let values = prev
        .field
        .values()
        .iter()
        .zip(next.field.values())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    Ok((
        dt,
        HeatState {
            field: prev.field.with_values(values)?,
            time: 0.5 * (prev.time + next.time),
        },
    ))
}

fn relative_defect(rate: f64, dissipation: f64) -> f64 {
    if dissipation == 0.0 {
        if rate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (rate + dissipation).abs() / dissipation
    }
}

/// `|dI/dt + 2 int (Lap u)^2 / u| / (2 int (Lap u)^2 / u)` with the
/// dissipation taken at the midpoint state.
pub fn fisher_dissipation_residual(prev: &HeatState, next: &HeatState) -> Result<f64> {
    let (dt, mid) = midpoint(prev, next)?;
    mid.require_positive()?;
    let lap = mid.field.laplacian4();
    let dissipation = 2.0 * mid.field.integrate(|k, v| lap[k] * lap[k] / v);
    let rate = (fisher_information(next)? - fisher_information(prev)?) / dt;
    Ok(relative_defect(rate, dissipation))
}

/// Same comparison against `2 int u |Hess log u|^2`, the dissipation of the
/// Fisher information on a flat torus.
pub fn fisher_hessian_dissipation_residual(prev: &HeatState, next: &HeatState) -> Result<f64> {
    let (dt, mid) = midpoint(prev, next)?;
    mid.require_positive()?;
    let log = mid.field.map(f64::ln)?;
    let grad = log.gradient4();
    let wx = log.with_values(grad.iter().map(|g| g[0]).collect())?.gradient4();
    let wy = log.with_values(grad.iter().map(|g| g[1]).collect())?.gradient4();
    let dissipation = 2.0
        * mid.field.integrate(|k, v| {
            let (xx, xy, yx, yy) = (wx[k][0], wx[k][1], wy[k][0], wy[k][1]);
            v * (xx * xx + xy * xy + yx * yx + yy * yy)
        });
    let rate = (fisher_information(next)? - fisher_information(prev)?) / dt;
    Ok(relative_defect(rate, dissipation))
}

/// Grid minimum of `Lap u - |Du|^2 / u + d u / (2t)`.
pub fn li_yau_min(state: &HeatState, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(GeoflowError::Domain(format!("Harnack quantity needs t > 0, got {t}")));
    }
    state.require_positive()?;
    let f = &state.field;
    let lap = f.laplacian4();
    let grad = f.gradient4();
    let d = f.dim().as_usize() as f64;
    Ok(f.values()
        .iter()
        .enumerate()
        .map(|(k, &u)| lap[k] - (grad[k][0].powi(2) + grad[k][1].powi(2)) / u + d * u / (2.0 * t))
        .fold(f64::INFINITY, f64::min))
}

/// `sup_t t^k ||D^k u(t)||_inf^2` over the sampled states with `t > 0`;
/// `D^2` is measured in the Frobenius norm.
pub fn smoothing_bound(states: &[HeatState], k: u32) -> Result<f64> {
    if !(k == 1 || k == 2) {
        return Err(GeoflowError::InvalidInput(format!("derivative order must be 1 or 2, got {k}")));
    }
    let mut sup: f64 = 0.0;
    for s in states.iter().filter(|s| s.time > 0.0) {
        let norm2 = if k == 1 {
            s.field.gradient().iter().map(|g| g[0] * g[0] + g[1] * g[1]).fold(0.0, f64::max)
        } else {
            s.field
                .hessian()
                .iter()
                .map(|[xx, xy, yy]| xx * xx + 2.0 * xy * xy + yy * yy)
                .fold(0.0, f64::max)
        };
        sup = sup.max(s.time.powi(k as i32) * norm2);
    }
    Ok(sup)
}

/// Steps at the stability limit to `t_end`, keeping every `sample_every`-th
/// state (plus the first and last).
pub fn heat_trajectory(initial: &HeatState, t_end: f64, sample_every: usize) -> Result<Vec<HeatState>> {
    if !(t_end > initial.time) {
        return Err(GeoflowError::InvalidInput(format!(
            "t_end {t_end} must exceed the initial time {}",
            initial.time
        )));
    }
    let dt_max = heat_dt_limit(&initial.field);
    let eps = 1e-14 * t_end.max(1.0);
    let mut out = vec![initial.clone()];
    let mut state = initial.clone();
    let mut k = 0usize;
    while t_end - state.time > eps {
        state = step_heat(&state, dt_max.min(t_end - state.time))?;
        k += 1;
        if k.is_multiple_of(sample_every.max(1)) || t_end - state.time <= eps {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// Diagnostic rows for a trajectory. Entropy, Fisher information and the
/// Harnack minimum are filled only when `with_density` (which then requires
/// positivity); the Harnack column is empty at `t = 0`.
pub fn heat_series(states: &[HeatState], with_density: bool) -> Result<DiagnosticSeries> {
    let mut series = DiagnosticSeries::new(&HEAT_COLUMNS);
    for s in states {
        let f = functionals(s, with_density)?;
        let ly = if with_density && s.time > 0.0 {
            Some(li_yau_min(s, s.time)?)
        } else {
            None
        };
        series.push(s.time, vec![Some(f.l2), Some(f.energy), f.entropy, f.fisher, ly])?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize, f: impl Fn(f64) -> f64) -> HeatState {
        HeatState::new(ScalarField::from_fn_1d(n, 1.0, f).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn constants_are_fixed_points() {
        let s = state(32, |_| 1.0);
        let next = step_heat(&s, heat_dt_limit(&s.field)).unwrap();
        assert_eq!(next.field, s.field);
        let f = functionals(&s, true).unwrap();
        assert_eq!((f.l2, f.energy, f.entropy, f.fisher), (1.0, 0.0, Some(0.0), Some(0.0)));
        let two = functionals(&state(32, |_| 2.0), true).unwrap();
        assert!((two.entropy.unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn density_functionals_need_positivity() {
        let s = state(32, |x| (6.0 * x).sin());
        assert!(functionals(&s, false).is_ok());
        assert!(matches!(functionals(&s, true), Err(GeoflowError::Positivity(_))));
        assert!(matches!(li_yau_min(&s, 1.0), Err(GeoflowError::Positivity(_))));
    }

    #[test]
    fn li_yau_on_constants() {
        let s = state(32, |_| 1.0);
        assert!((li_yau_min(&s, 0.25).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(li_yau_min(&s, 0.0), Err(GeoflowError::Domain(_))));
    }

    #[test]
    fn smoothing_of_constant_is_zero() {
        let s = state(32, |_| 1.0);
        let traj = heat_trajectory(&s, 1e-3, 1).unwrap();
        assert_eq!(smoothing_bound(&traj, 1).unwrap(), 0.0);
        assert_eq!(smoothing_bound(&traj, 2).unwrap(), 0.0);
    }

    #[test]
    fn constant_has_zero_dissipation_residual() {
        let s = state(32, |_| 1.0);
        let next = step_heat(&s, 1e-4).unwrap();
        assert_eq!(fisher_dissipation_residual(&s, &next).unwrap(), 0.0);
    }

    #[test]
    fn sloped_fields_are_rejected() {
        let f = ScalarField::with_slope(Dim::One, 16, 0.1, [1.0, 0.0], vec![0.0; 16]).unwrap();
        assert!(HeatState::new(f, 0.0).is_err());
    }
}
