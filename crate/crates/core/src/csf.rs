//! Curve shortening flow and its diagnostics.
//!
//! The integrator advances the tangentially reparametrised system
//!
//! ```text
//! dX/dt = X_uu / |X_u|^2
//! ```
//!
//! whose normal component is `-kappa N` (the geometric flow) and which is
//! uniformly parabolic in the node index `u`. An explicit Euler step is stable
//! for `dt <= cfl * (min edge)^2`; the curve is resampled to uniform arc
//! length every `resample_every` steps to control tangential drift.

use std::f64::consts::PI;

use crate::curve::{self, cross, geometry, resample_arclength, ClosedCurve, CurveGeometry, Point};
use crate::error::{GeoflowError, Result};
use crate::series::{DiagnosticSeries, CSF_COLUMNS, CSF_PARTNER_COLUMN};

/// Runs stop once the length has dropped below this fraction of its initial value.
pub const EXTINCTION_LENGTH_RATIO: f64 = 1e-2;

/// Above this many nodes the isoperimetric scan uses every 4th node before
/// refining around the best pair.
pub const ISO_FULL_SCAN_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub curve: ClosedCurve,
    pub time: f64,
    pub step_index: usize,
}

impl FlowState {
    pub fn initial(curve: ClosedCurve) -> Self {
        FlowState {
            curve,
            time: 0.0,
            step_index: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub cfl_factor: f64,
    pub resample_every: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            cfl_factor: 0.2,
            resample_every: 10,
        }
    }
}

impl StepPolicy {
    /// Largest stable step for `curve`.
    pub fn dt_for(&self, curve: &ClosedCurve) -> f64 {
        let h = curve.min_edge();
        self.cfl_factor * h * h
    }
}

/// One explicit Euler step without resampling.
///
/// Fails with [`GeoflowError::StepSize`] when `dt` violates the CFL bound and
/// with [`GeoflowError::ExtinctionImminent`] when the new polygon can no
/// longer resolve its curvature (`sup|kappa| * min edge > 1`).
pub fn euler_step(state: &FlowState, dt: f64, cfl_factor: f64) -> Result<FlowState> {
    let limit = cfl_factor * state.curve.min_edge().powi(2);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(GeoflowError::StepSize { dt, limit });
    }
    let nodes = state.curve.nodes();
    let n = nodes.len();
    let moved: Vec<Point> = (0..n)
        .map(|i| {
            let prev = nodes[(i + n - 1) % n];
            let next = nodes[(i + 1) % n];
            let xu = (next - prev) * 0.5;
            let xuu = next - 2.0 * nodes[i] + prev;
            nodes[i] + xuu * (dt / xu.norm_squared())
        })
        .collect();
    let time = state.time + dt;
    let curve = match ClosedCurve::new(moved) {
        Ok(c) => c,
        Err(GeoflowError::DegenerateGeometry(_)) => {
            return Err(GeoflowError::ExtinctionImminent {
                time,
                sup_kappa: f64::INFINITY,
                min_edge: 0.0,
            })
        }
        Err(e) => return Err(e),
    };
    let g = geometry(&curve)?;
    let sup_kappa = g.sup_abs_curvature();
    let min_edge = curve.min_edge();
    if sup_kappa * min_edge > 1.0 {
        return Err(GeoflowError::ExtinctionImminent {
            time,
            sup_kappa,
            min_edge,
        });
    }
    Ok(FlowState {
        curve,
        time,
        step_index: state.step_index + 1,
    })
}

/// One step of the flow; resamples to uniform arc length whenever the new
/// step index is a multiple of `policy.resample_every`.
pub fn step(state: &FlowState, dt: f64, policy: &StepPolicy) -> Result<FlowState> {
    let next = euler_step(state, dt, policy.cfl_factor)?;
    maybe_resample(next, policy)
}

fn maybe_resample(mut state: FlowState, policy: &StepPolicy) -> Result<FlowState> {
    if policy.resample_every > 0 && state.step_index.is_multiple_of(policy.resample_every) {
        state.curve = resample_arclength(&state.curve, state.curve.len())?;
    }
    Ok(state)
}

fn midpoint_curve(prev: &ClosedCurve, next: &ClosedCurve) -> Result<ClosedCurve> {
    if prev.len() != next.len() {
        return Err(GeoflowError::Contract(
            "consecutive states must have the same node count".into(),
        ));
    }
    ClosedCurve::new(
        prev.nodes()
            .iter()
            .zip(next.nodes())
            .map(|(a, b)| (a + b) * 0.5)
            .collect(),
    )
}

fn time_step(prev: &FlowState, next: &FlowState) -> Result<f64> {
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(GeoflowError::Contract(format!(
            "states are not consecutive in time ({} -> {})",
            prev.time, next.time
        )));
    }
    Ok(dt)
}

/// Relative defect of the length identity `dL/dt = -int kappa^2 ds`, with the
/// dissipation evaluated on the midpoint polygon.
pub fn length_rate_residual(prev: &FlowState, next: &FlowState) -> Result<f64> {
    let dt = time_step(prev, next)?;
    let mid = midpoint_curve(&prev.curve, &next.curve)?;
    let dissipation = geometry(&mid)?.curvature_moment(2);
    let rate = (curve::length(&next.curve) - curve::length(&prev.curve)) / dt;
    Ok((rate + dissipation).abs() / dissipation)
}

/// `d kappa / ds` twice, on a polygon with possibly unequal edges.
pub fn curvature_ss(curve: &ClosedCurve, g: &CurveGeometry) -> Vec<f64> {
    let n = curve.len();
    let edges = curve.edge_lengths();
    let k = &g.curvature;
    (0..n)
        .map(|i| {
            let a = edges[(i + n - 1) % n];
            let b = edges[i];
            2.0 * ((k[(i + 1) % n] - k[i]) / b - (k[i] - k[(i + n - 1) % n]) / a) / (a + b)
        })
        .collect()
}

/// Where the normal line through a node of one curve first meets another
/// curve: edge index `j`, fraction `tau` along it, and signed distance `s`.
#[derive(Debug, Clone, Copy)]
struct NormalHit {
    edge: usize,
    tau: f64,
    offset: f64,
}

fn normal_hit(p: &Point, normal: &Point, target: &ClosedCurve, near: usize, window: usize) -> Option<NormalHit> {
    let nodes = target.nodes();
    let m = nodes.len();
    let mut best: Option<NormalHit> = None;
    let span = window.min(m / 2);
    for d in 0..=2 * span {
        let j = (near + m + d - span) % m;
        let a = nodes[j];
        let e = nodes[(j + 1) % m] - a;
        let denom = cross(normal, &e);
        if denom.abs() < 1e-300 {
            continue;
        }
        let ap = a - p;
        let s = cross(&ap, &e) / denom;
        let tau = cross(&ap, normal) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&tau) && best.is_none_or(|b| s.abs() < b.offset.abs()) {
            best = Some(NormalHit {
                edge: j,
                tau: tau.clamp(0.0, 1.0),
                offset: s,
            });
        }
    }
    best
}

/// Relative L2 defect of `d kappa/dt = kappa_ss + kappa^3` between two
/// consecutive states.
///
/// Each node of `prev` is matched to the point of `next` on its normal line;
/// the right-hand side is averaged between the two ends of the match.
pub fn curvature_evolution_residual(prev: &FlowState, next: &FlowState) -> Result<f64> {
    let dt = time_step(prev, next)?;
    let gp = geometry(&prev.curve)?;
    let gn = geometry(&next.curve)?;
    let rhs_p: Vec<f64> = curvature_ss(&prev.curve, &gp)
        .iter()
        .zip(&gp.curvature)
        .map(|(kss, k)| kss + k * k * k)
        .collect();
    let rhs_n: Vec<f64> = curvature_ss(&next.curve, &gn)
        .iter()
        .zip(&gn.curvature)
        .map(|(kss, k)| kss + k * k * k)
        .collect();
    let m = next.curve.len();
    let edges = prev.curve.edge_lengths();
    let n = prev.curve.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let p = prev.curve.nodes()[i];
        let near = i * m / n;
        let hit = normal_hit(&p, &gp.normals[i], &next.curve, near, 16).ok_or_else(|| {
            GeoflowError::Matching(format!("no intersection with the next curve from node {i}"))
        })?;
        let local = edges[i].min(edges[(i + n - 1) % n]);
        let feature = 0.5 / gp.curvature[i].abs().max(1e-300);
        if hit.offset.abs() > local.min(feature) {
            return Err(GeoflowError::Matching(format!(
                "node {i} moved {:e}, beyond local feature size {:e}",
                hit.offset.abs(),
                local.min(feature)
            )));
        }
        let j = hit.edge;
        let j1 = (j + 1) % m;
        let interp = |v: &[f64]| (1.0 - hit.tau) * v[j] + hit.tau * v[j1];
        let dkdt = (interp(&gn.curvature) - gp.curvature[i]) / dt;
        let rhs = 0.5 * (rhs_p[i] + interp(&rhs_n));
        let w = gp.arc_weights[i];
        num += (dkdt - rhs).powi(2) * w;
        den += rhs * rhs * w;
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

fn iso_value(nodes: &[Point], arc: &[f64], total: f64, i: usize, j: usize) -> Option<f64> {
    let d = (nodes[i] - nodes[j]).norm();
    if d == 0.0 {
        return None;
    }
    let along = (arc[j] - arc[i]).abs();
    let l = along.min(total - along);
    Some(total / d * (PI * l / total).sin())
}

/// `sup over node pairs of (L/d) sin(pi l / L)`, with `d` the chord and `l`
/// the shorter arc between the pair. Equals `pi` (up to discretization) for
/// a round circle and exceeds it otherwise.
pub fn isoperimetric_sup(curve: &ClosedCurve) -> Result<f64> {
    let nodes = curve.nodes();
    let n = nodes.len();
    let arc = curve.arc_positions();
    let total = curve::length(curve);
    let stride = if n <= ISO_FULL_SCAN_LIMIT { 1 } else { 4 };
    let mut best: Option<(f64, usize, usize)> = None;
    for i in (0..n).step_by(stride) {
        for j in (i + stride..n).step_by(stride) {
            if let Some(z) = iso_value(nodes, &arc, total, i, j) {
                if best.is_none_or(|b| z > b.0) {
                    best = Some((z, i, j));
                }
            }
        }
    }
    let (mut z, bi, bj) = best.ok_or_else(|| {
        GeoflowError::DegenerateGeometry("every node pair is coincident".into())
    })?;
    if stride > 1 {
        for di in -4..=4isize {
            for dj in -4..=4isize {
                let i = (bi as isize + di).rem_euclid(n as isize) as usize;
                let j = (bj as isize + dj).rem_euclid(n as isize) as usize;
                if i != j {
                    if let Some(v) = iso_value(nodes, &arc, total, i, j) {
                        z = z.max(v);
                    }
                }
            }
        }
    }
    Ok(z)
}

/// Gaussian-weighted length `int (t0-t)^{-1/2} exp(-|x-x0|^2 / (4(t0-t))) ds`.
pub fn huisken_weight(curve: &ClosedCurve, x0: &Point, t0: f64, t: f64) -> Result<f64> {
    if !(t < t0) {
        return Err(GeoflowError::Domain(format!(
            "Gaussian weight needs t < t0 (t={t}, t0={t0})"
        )));
    }
    let tau = t0 - t;
    let nodes = curve.nodes();
    let n = nodes.len();
    let edges = curve.edge_lengths();
    let sum: f64 = (0..n)
        .map(|i| {
            let w = 0.5 * (edges[(i + n - 1) % n] + edges[i]);
            (-(nodes[i] - x0).norm_squared() / (4.0 * tau)).exp() * w
        })
        .sum();
    Ok(sum / tau.sqrt())
}

fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let e = b - a;
    let len2 = e.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&e) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + e * t)).norm()
}

/// Minimum node-to-segment distance between two polygons (both directions).
pub fn min_distance(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let one_way = |x: &ClosedCurve, y: &ClosedCurve| {
        let yn = y.nodes();
        let m = yn.len();
        x.nodes()
            .iter()
            .map(|p| {
                (0..m)
                    .map(|j| point_segment_distance(p, &yn[j], &yn[(j + 1) % m]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    };
    one_way(a, b).min(one_way(b, a))
}

/// How a flow run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    TargetTime,
    /// The curve or its partner went extinct; `time` is the midpoint of the
    /// last step interval.
    Extinction { time: f64 },
    StepBudget,
}

#[derive(Debug, Clone)]
pub struct CsfRunConfig {
    pub initial: ClosedCurve,
    /// Optional second curve evolved with the same time steps.
    pub partner: Option<ClosedCurve>,
    pub policy: StepPolicy,
    /// Stop at this time; `None` runs to extinction.
    pub t_end: Option<f64>,
    pub sample_every: usize,
    /// Space-time point `(x0, t0)` of the Gaussian weight.
    pub huisken_center: Option<(Point, f64)>,
    pub iso_sup: bool,
    pub max_steps: usize,
}

impl CsfRunConfig {
    pub fn new(initial: ClosedCurve) -> Self {
        CsfRunConfig {
            initial,
            partner: None,
            policy: StepPolicy::default(),
            t_end: None,
            sample_every: 1,
            huisken_center: None,
            iso_sup: false,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsfRun {
    pub series: DiagnosticSeries,
    pub final_state: FlowState,
    pub partner_state: Option<FlowState>,
    pub termination: Termination,
    pub steps: usize,
}

impl CsfRun {
    pub fn extinction_time(&self) -> Option<f64> {
        match self.termination {
            Termination::Extinction { time } => Some(time),
            _ => None,
        }
    }
}

fn is_extinction(e: &GeoflowError) -> bool {
    matches!(
        e,
        GeoflowError::ExtinctionImminent { .. } | GeoflowError::DegenerateGeometry(_)
    )
}

/// Integrates until `t_end`, extinction, or the step budget, recording the
/// diagnostic row every `sample_every` steps (and at the start and end).
pub fn run(config: &CsfRunConfig) -> Result<CsfRun> {
    let mut columns: Vec<&str> = CSF_COLUMNS.to_vec();
    if config.partner.is_some() {
        columns.push(CSF_PARTNER_COLUMN);
    }
    let mut series = DiagnosticSeries::new(&columns);
    let mut state = FlowState::initial(config.initial.clone());
    let mut partner = config.partner.clone().map(FlowState::initial);
    let initial_length = curve::length(&state.curve);
    let partner_length = partner.as_ref().map_or(0.0, |p| curve::length(&p.curve));
    let sample_every = config.sample_every.max(1);

    record(&mut series, config, &state, partner.as_ref(), None)?;

    let mut termination = Termination::StepBudget;
    let mut steps = 0;
    while steps < config.max_steps {
        let mut dt = config.policy.dt_for(&state.curve);
        if let Some(p) = &partner {
            dt = dt.min(config.policy.dt_for(&p.curve));
        }
        if let Some(t_end) = config.t_end {
            let remaining = t_end - state.time;
            if remaining <= 1e-14 * t_end.max(1.0) {
                termination = Termination::TargetTime;
                break;
            }
            dt = dt.min(remaining);
        }
        let midpoint = state.time + 0.5 * dt;
        if state.time + dt == state.time {
            // the step no longer advances the clock
            termination = Termination::Extinction { time: state.time };
            break;
        }
        let raw = match euler_step(&state, dt, config.policy.cfl_factor) {
            Ok(s) => s,
            Err(e) if is_extinction(&e) => {
                termination = Termination::Extinction { time: midpoint };
                break;
            }
            Err(e) => return Err(e),
        };
        let raw_partner = match &partner {
            Some(p) => match euler_step(p, dt, config.policy.cfl_factor) {
                Ok(s) => Some(s),
                Err(e) if is_extinction(&e) => {
                    termination = Termination::Extinction { time: midpoint };
                    break;
                }
                Err(e) => return Err(e),
            },
            None => None,
        };
        steps += 1;
        let extinct = curve::length(&raw.curve) < EXTINCTION_LENGTH_RATIO * initial_length
            || raw_partner
                .as_ref()
                .is_some_and(|p| curve::length(&p.curve) < EXTINCTION_LENGTH_RATIO * partner_length);
        let finished = config.t_end.is_some_and(|t| raw.time >= t - 1e-14 * t.max(1.0));
        if extinct || finished || raw.step_index % sample_every == 0 {
            record(&mut series, config, &raw, raw_partner.as_ref(), Some(&state))?;
        }
        state = maybe_resample(raw, &config.policy)?;
        partner = match raw_partner {
            Some(p) => Some(maybe_resample(p, &config.policy)?),
            None => None,
        };
        if extinct {
            termination = Termination::Extinction { time: midpoint };
            break;
        }
    }
    if termination == Termination::StepBudget && config.t_end.is_some_and(|t| state.time >= t - 1e-14 * t.max(1.0)) {
        termination = Termination::TargetTime;
    }
    Ok(CsfRun {
        series,
        final_state: state,
        partner_state: partner,
        termination,
        steps,
    })
}

fn record(
    series: &mut DiagnosticSeries,
    config: &CsfRunConfig,
    state: &FlowState,
    partner: Option<&FlowState>,
    prev: Option<&FlowState>,
) -> Result<()> {
    let g = geometry(&state.curve)?;
    let iso = if config.iso_sup {
        isoperimetric_sup(&state.curve).ok()
    } else {
        None
    };
    let huisken = config
        .huisken_center
        .and_then(|(x0, t0)| huisken_weight(&state.curve, &x0, t0, state.time).ok());
    let (len_res, kappa_res) = match prev {
        Some(p) => (
            length_rate_residual(p, state).ok(),
            curvature_evolution_residual(p, state).ok(),
        ),
        None => (None, None),
    };
    let mut row = vec![
        Some(g.length),
        Some(curve::enclosed_area(&state.curve)),
        Some(g.sup_abs_curvature()),
        iso,
        huisken,
        len_res,
        kappa_res,
    ];
    if config.partner.is_some() {
        row.push(partner.map(|p| min_distance(&state.curve, &p.curve)));
    }
    series.push(state.time, row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, r: f64) -> ClosedCurve {
        ClosedCurve::circle(n, r, Point::zeros()).unwrap()
    }

    #[test]
    fn one_step_keeps_a_circle_round() {
        let s = FlowState::initial(circle(128, 1.0));
        let dt = StepPolicy::default().dt_for(&s.curve);
        let next = step(&s, dt, &StepPolicy::default()).unwrap();
        let radii: Vec<f64> = next.curve.nodes().iter().map(|p| p.norm()).collect();
        let spread = radii.iter().cloned().fold(f64::MIN, f64::max) - radii.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-8, "spread {spread}");
        assert!(radii[0] < 1.0);
    }

    #[test]
    fn rejects_steps_beyond_cfl() {
        let s = FlowState::initial(circle(64, 1.0));
        let dt = StepPolicy::default().dt_for(&s.curve);
        assert!(matches!(
            euler_step(&s, 2.0 * dt, 0.2),
            Err(GeoflowError::StepSize { .. })
        ));
        assert!(euler_step(&s, -1.0, 0.2).is_err());
    }

    #[test]
    fn concentric_and_translated_distances() {
        // Edge sagitta of the outer polygon is 2(1 - cos(pi/n)) < 1e-6 here.
        let a = circle(4096, 1.0);
        let b = circle(4096, 2.0);
        assert!((min_distance(&a, &b) - 1.0).abs() < 1e-6);
        let c = a.map(|p| p + Point::new(2.3, 0.0)).unwrap();
        assert!((min_distance(&a, &c) - 0.3).abs() < 1e-6);
    }

    #[test]
    fn huisken_weight_domain_and_decay() {
        let c = circle(64, 1.0);
        assert!(matches!(
            huisken_weight(&c, &Point::zeros(), 1.0, 1.0),
            Err(GeoflowError::Domain(_))
        ));
        let far = huisken_weight(&c, &Point::zeros(), 1.0, 1.0 - 1e-6).unwrap();
        assert!(far < 1e-100);
    }

    #[test]
    fn iso_sup_is_pi_on_circle() {
        let z = isoperimetric_sup(&circle(256, 3.0)).unwrap();
        assert!((z - PI).abs() < 1e-3);
        let big = isoperimetric_sup(&circle(1024, 1.0)).unwrap();
        assert!((big - PI).abs() < 1e-3);
    }

    #[test]
    fn curvature_ss_vanishes_on_circle() {
        let c = circle(64, 1.0);
        let g = geometry(&c).unwrap();
        assert!(curvature_ss(&c, &g).iter().all(|v| v.abs() < 1e-9));
    }
}
