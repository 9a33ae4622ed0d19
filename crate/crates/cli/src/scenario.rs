//! Dispatch of a scenario file to the flow, solver and statistics modules.

use std::f64::consts::PI;
use std::time::Instant;

use geoflow_core::acceptance::Check;
use geoflow_core::csf::{self, CsfRunConfig, StepPolicy, Termination};
use geoflow_core::curve::{self, resample_arclength};
use geoflow_core::fisher::{self, Estimator};
use geoflow_core::heat::{self, HeatState};
use geoflow_core::mcf;
use geoflow_core::mse::{self, GraphProblem, RectField, RectGrid};
use geoflow_core::ricci::{self, ConformalMetric};
use geoflow_core::series::{max_increase, CSF_PARTNER_COLUMN, HEAT_COLUMNS, MCF_COLUMNS, RICCI_COLUMNS};
use geoflow_core::{kernel, ClosedCurve, DiagnosticSeries, Dim, GeoflowError, Point, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Kind, ScenarioConfig};
use crate::error::CliError;
use crate::output::OutputDir;

pub const SCENARIO_FILE: &str = "scenario.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Ending {
    TEnd { time: f64 },
    Extinction { time: f64 },
    Error { message: String },
}

/// Where a requested diagnostic ended up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticEntry {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub wall_seconds: f64,
    pub termination: Ending,
    pub extinction: bool,
    /// The run stopped on an error; the artifacts cover only part of it.
    pub partial: bool,
    pub artifacts: Vec<String>,
    pub diagnostics: Vec<DiagnosticEntry>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// What a kind-specific runner hands back.
struct Outcome {
    ending: Ending,
    checks: Vec<Check>,
    /// `(diagnostic, artifact)` pairs that carry data.
    produced: Vec<(String, String)>,
}

/// Runs `cfg`, writing `scenario.json` first, then the kind's artifacts, then
/// `report.json`. On a solver error the report is still written, flagged
/// partial, and the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = OutputDir::create(&cfg.resolved_output_dir())?;
    out.write(SCENARIO_FILE, &pretty(cfg)?)?;
    let result = match cfg.kind {
        Kind::Csf => run_csf(cfg, &mut out),
        Kind::McfGraph => run_mcf(cfg, &mut out),
        Kind::Heat => run_heat(cfg, &mut out),
        Kind::Ricci2d => run_ricci(cfg, &mut out),
        Kind::Fisher => run_fisher(cfg, &mut out),
        Kind::Mse => run_mse(cfg, &mut out),
        Kind::Delta => run_delta(cfg, &mut out),
    };
    let (outcome, err) = match result {
        Ok(o) => (o, None),
        Err(e @ CliError::Config(_)) => return Err(e),
        Err(e) => (
            Outcome {
                ending: Ending::Error { message: e.to_string() },
                checks: Vec::new(),
                produced: Vec::new(),
            },
            Some(e),
        ),
    };
    let mut artifacts = out.written().to_vec();
    artifacts.push(REPORT_FILE.to_string());
    let report = RunReport {
        scenario: cfg.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
        extinction: matches!(outcome.ending, Ending::Extinction { .. }),
        partial: err.is_some(),
        termination: outcome.ending,
        artifacts,
        diagnostics: resolve_diagnostics(cfg, &outcome.produced, err.is_some()),
        checks: outcome.checks,
    };
    out.write(REPORT_FILE, &pretty(&report)?)?;
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Config(format!("cannot serialize: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn resolve_diagnostics(cfg: &ScenarioConfig, produced: &[(String, String)], failed: bool) -> Vec<DiagnosticEntry> {
    cfg.diagnostics
        .iter()
        .map(|name| match produced.iter().find(|(d, _)| d == name) {
            Some((_, artifact)) => DiagnosticEntry {
                name: name.clone(),
                artifact: Some(artifact.clone()),
                skipped: None,
            },
            None => DiagnosticEntry {
                name: name.clone(),
                artifact: None,
                skipped: Some(if failed {
                    "run stopped on an error before this diagnostic was written".into()
                } else {
                    format!("not produced by {} runs with this initial data", kind_name(cfg.kind))
                }),
            },
        })
        .collect()
}

fn kind_name(kind: Kind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn unknown_initial(cfg: &ScenarioConfig, known: &[&str]) -> CliError {
    CliError::Config(format!(
        "initial.name: unknown initial data `{}` for kind {}; expected one of {}",
        cfg.initial.name,
        kind_name(cfg.kind),
        known.join(", ")
    ))
}

/// Columns of `series` that hold at least one value, all mapped to `artifact`.
fn series_produced(series: &DiagnosticSeries, artifact: &str) -> Vec<(String, String)> {
    series
        .columns()
        .iter()
        .filter(|c| series.column(c).is_some_and(|v| v.iter().any(Option::is_some)))
        .map(|c| (c.clone(), artifact.to_string()))
        .collect()
}

fn present(series: &DiagnosticSeries, name: &str) -> Vec<f64> {
    series.column(name).unwrap_or_default().into_iter().flatten().collect()
}

fn wants(cfg: &ScenarioConfig, name: &str) -> bool {
    cfg.diagnostics.iter().any(|d| d == name)
}

fn dim_param(cfg: &ScenarioConfig) -> Result<Dim, CliError> {
    let d = cfg.initial.num("dim", 1.0)?;
    if d == 1.0 {
        Ok(Dim::One)
    } else if d == 2.0 {
        Ok(Dim::Two)
    } else {
        Err(CliError::Config(format!("initial.params.dim: must be 1 or 2, got {d}")))
    }
}

fn sample(dim: Dim, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField, GeoflowError> {
    match dim {
        Dim::One => ScalarField::from_fn_1d(n, 1.0, |x| f(x, 0.0)),
        Dim::Two => ScalarField::from_fn_2d(n, 1.0, f),
    }
}

fn ending_time(t_end: f64) -> Ending {
    Ending::TEnd { time: t_end }
}

fn run_csf(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let n = cfg.resolution;
    let curve = match init.name.as_str() {
        "circle" => ClosedCurve::circle(
            n,
            init.num("radius", 1.0)?,
            Point::new(init.num("cx", 0.0)?, init.num("cy", 0.0)?),
        )?,
        "ellipse" => resample_arclength(&ClosedCurve::ellipse(n, init.num("a", 2.0)?, init.num("b", 1.0)?)?, n)?,
        _ => return Err(unknown_initial(cfg, &["circle", "ellipse"])),
    };
    let mut run_cfg = CsfRunConfig::new(curve.clone());
    if init.params.contains_key("partner_radius") {
        run_cfg.partner = Some(ClosedCurve::circle(
            n,
            init.num("partner_radius", 1.0)?,
            Point::new(init.num("partner_cx", 0.0)?, init.num("partner_cy", 0.0)?),
        )?);
    }
    run_cfg.policy = StepPolicy {
        cfl_factor: cfg.step.cfl_factor.unwrap_or(StepPolicy::default().cfl_factor),
        ..StepPolicy::default()
    };
    run_cfg.t_end = cfg.step.t_end;
    run_cfg.sample_every = cfg.step.sample_every;
    run_cfg.iso_sup = wants(cfg, "iso_sup");
    if wants(cfg, "huisken") {
        let t0 = init.num("huisken_t0", curve::enclosed_area(&curve) / (2.0 * PI))?;
        run_cfg.huisken_center = Some((curve.centroid(), t0));
    }
    let run = csf::run(&run_cfg)?;

    out.write("series.csv", run.series.to_csv().as_bytes())?;
    out.write("final_curve.csv", run.final_state.curve.to_csv().as_bytes())?;
    if let Some(p) = &run.partner_state {
        out.write("partner_curve.csv", p.curve.to_csv().as_bytes())?;
    }

    let length = present(&run.series, "length");
    let mut checks = vec![Check::holds(
        "length strictly decreasing",
        length.windows(2).all(|w| w[1] < w[0]),
    )];
    for col in ["iso_sup", "huisken"] {
        let v = present(&run.series, col);
        if v.len() > 1 {
            checks.push(Check::le(format!("{col} max increase per sample"), max_increase(&v), 1e-6));
        }
    }
    let dist = present(&run.series, CSF_PARTNER_COLUMN);
    if let Some(d0) = dist.first() {
        let lowest = dist.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::ge("min distance minus initial", lowest - d0, -1e-3));
    }
    let ending = match run.termination {
        Termination::TargetTime => ending_time(run.final_state.time),
        Termination::Extinction { time } => Ending::Extinction { time },
        Termination::StepBudget => {
            return Err(CliError::Budget(format!(
                "step budget of {} exhausted at t = {}",
                run_cfg.max_steps, run.final_state.time
            )));
        }
    };
    Ok(Outcome {
        ending,
        checks,
        produced: series_produced(&run.series, "series.csv"),
    })
}


/// Writes `series.csv` whether or not `body` succeeded, so a failed run keeps
/// the rows it reached.
fn with_series<T>(
    out: &mut OutputDir,
    columns: &[&str],
    body: impl FnOnce(&mut DiagnosticSeries) -> Result<T, GeoflowError>,
) -> Result<(DiagnosticSeries, T), CliError> {
    let mut series = DiagnosticSeries::new(columns);
    let result = body(&mut series);
    out.write("series.csv", series.to_csv().as_bytes())?;
    Ok((series, result?))
}

fn run_mcf(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let dim = dim_param(cfg)?;
    let periodic = match init.name.as_str() {
        "sine" => {
            let (a, m) = (init.num("amplitude", 0.1)?, init.num("mode", 1.0)?);
            sample(dim, cfg.resolution, |x, y| match dim {
                Dim::One => a * (2.0 * PI * m * x).sin(),
                Dim::Two => a * (2.0 * PI * m * x).sin() * (2.0 * PI * m * y).sin(),
            })?
        }
        "flat" => {
            let level = init.num("level", 0.0)?;
            sample(dim, cfg.resolution, |_, _| level)?
        }
        _ => return Err(unknown_initial(cfg, &["sine", "flat"])),
    };
    let slope = [init.num("sx", 0.0)?, init.num("sy", 0.0)?];
    let field = ScalarField::with_slope(dim, periodic.n(), periodic.h(), slope, periodic.values().to_vec())?;
    let t_end = cfg.step.t_end.unwrap_or_default();
    let dt_max = cfg.step.cfl_factor.unwrap_or(mcf::MCF_CFL) * field.h() * field.h();
    let every = cfg.step.sample_every;
    let (series, last) = with_series(out, &MCF_COLUMNS, |series| {
        let row = |f: &ScalarField| vec![Some(mcf::graph_area(f)), Some(f.max()), Some(f.min())];
        series.push(0.0, row(&field))?;
        let mut f = field.clone();
        let (mut t, mut k) = (0.0, 0usize);
        let eps = 1e-14 * t_end.max(1.0);
        while t_end - t > eps {
            let dt = dt_max.min(t_end - t);
            f = mcf::step_graph_mcf(&f, dt)?;
            t += dt;
            k += 1;
            if k % every == 0 || t_end - t <= eps {
                series.push(t, row(&f))?;
            }
        }
        Ok(f)
    })?;
    out.write("final_field.csv", last.to_csv().as_bytes())?;
    let area = present(&series, "area");
    let sup = present(&series, "sup_u");
    let inf: Vec<f64> = present(&series, "inf_u").iter().map(|v| -v).collect();
    let scale = area[0].abs().max(1.0);
    Ok(Outcome {
        ending: ending_time(t_end),
        checks: vec![
            Check::le("area max increase per sample", max_increase(&area), 1e-12 * scale),
            Check::le("sup max increase per sample", max_increase(&sup), 1e-12),
            Check::le("inf max decrease per sample", max_increase(&inf), 1e-12),
        ],
        produced: series_produced(&series, "series.csv"),
    })
}

struct HeatStats {
    last: HeatState,
    mass_drift: f64,
    sup_rise: f64,
    inf_drop: f64,
}

fn run_heat(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let dim = dim_param(cfg)?;
    let n = cfg.resolution;
    let field = match init.name.as_str() {
        "sine" => {
            let (mean, a, m) = (init.num("mean", 1.0)?, init.num("amplitude", 0.5)?, init.num("mode", 1.0)?);
            sample(dim, n, |x, y| match dim {
                Dim::One => mean + a * (2.0 * PI * m * x).sin(),
                Dim::Two => mean + 0.5 * a * ((2.0 * PI * m * x).sin() + (2.0 * PI * m * y).sin()),
            })?
        }
        "bump" => {
            let (floor, w) = (init.num("floor", 1e-3)?, init.num("width", 0.05)?);
            sample(dim, n, |x, y| {
                let r2 = (x - 0.5).powi(2) + if dim == Dim::Two { (y - 0.5).powi(2) } else { 0.0 };
                floor + (-r2 / (2.0 * w * w)).exp()
            })?
        }
        "square_wave" => {
            let (lo, hi) = (init.num("low", 0.5)?, init.num("high", 1.5)?);
            sample(dim, n, |x, _| if x < 0.5 { hi } else { lo })?
        }
        "constant" => {
            let c = init.num("value", 1.0)?;
            sample(dim, n, |_, _| c)?
        }
        _ => return Err(unknown_initial(cfg, &["sine", "bump", "square_wave", "constant"])),
    };
    let with_density = ["entropy", "fisher", "liyau_min"].iter().any(|d| wants(cfg, d));
    let t_end = cfg.step.t_end.unwrap_or_default();
    let dt_max = cfg
        .step
        .cfl_factor
        .map_or(heat::heat_dt_limit(&field), |c| c * field.h() * field.h());
    let every = cfg.step.sample_every;
    let (series, stats) = with_series(out, &HEAT_COLUMNS, |series| {
        let record = |series: &mut DiagnosticSeries, s: &HeatState| -> Result<(), GeoflowError> {
            let f = heat::functionals(s, with_density)?;
            let ly = if with_density && s.time > 0.0 {
                Some(heat::li_yau_min(s, s.time)?)
            } else {
                None
            };
            series.push(s.time, vec![Some(f.l2), Some(f.energy), f.entropy, f.fisher, ly])
        };
        let mut state = HeatState::new(field.clone(), 0.0)?;
        record(series, &state)?;
        let mass0 = state.field.integral();
        let mut stats = HeatStats {
            last: state.clone(),
            mass_drift: 0.0,
            sup_rise: 0.0,
            inf_drop: 0.0,
        };
        let mut k = 0usize;
        let eps = 1e-14 * t_end.max(1.0);
        while t_end - state.time > eps {
            let next = heat::step_heat(&state, dt_max.min(t_end - state.time))?;
            stats.mass_drift = stats.mass_drift.max((next.field.integral() - mass0).abs());
            stats.sup_rise = stats.sup_rise.max(next.field.max() - state.field.max());
            stats.inf_drop = stats.inf_drop.max(state.field.min() - next.field.min());
            state = next;
            k += 1;
            if k.is_multiple_of(every) || t_end - state.time <= eps {
                record(series, &state)?;
            }
        }
        stats.last = state;
        Ok(stats)
    })?;
    out.write("final_field.csv", stats.last.field.to_csv().as_bytes())?;
    let ulp = 1e-14 * field.max_abs().max(1.0);
    let mut checks = Vec::new();
    for col in ["l2", "energy", "entropy", "fisher"] {
        let v = present(&series, col);
        if v.len() > 1 {
            let scale = v[0].abs().max(1.0);
            checks.push(Check::le(format!("{col} max increase per sample"), max_increase(&v), 1e-12 * scale));
        }
    }
    checks.push(Check::le("mass drift", stats.mass_drift, 1e-12));
    checks.push(Check::le("sup rise per step", stats.sup_rise, ulp));
    checks.push(Check::le("inf drop per step", stats.inf_drop, ulp));
    let ly = present(&series, "liyau_min");
    if !ly.is_empty() {
        checks.push(Check::ge("Li-Yau minimum", ly.iter().copied().fold(f64::INFINITY, f64::min), -1e-6));
    }
    Ok(Outcome {
        ending: ending_time(t_end),
        checks,
        produced: series_produced(&series, "series.csv"),
    })
}

fn run_ricci(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let n = cfg.resolution;
    let metric = match init.name.as_str() {
        "trig" => {
            let (a, m) = (init.num("amplitude", 0.3)?, init.num("mode", 1.0)?);
            ConformalMetric::from_fn(n, |x, y| a * (2.0 * PI * m * x).sin() * (2.0 * PI * m * y).cos())?
        }
        "constant" => {
            let c = init.num("value", 0.0)?;
            ConformalMetric::from_fn(n, |_, _| c)?
        }
        _ => return Err(unknown_initial(cfg, &["trig", "constant"])),
    };
    let t_end = cfg.step.t_end.unwrap_or_default();
    let every = cfg.step.sample_every;
    let cfl = cfg.step.cfl_factor.unwrap_or(ricci::RICCI_CFL);
    let zero = metric.u().map(|_| 0.0)?;
    let (series, last) = with_series(out, &RICCI_COLUMNS, |series| {
        let record = |series: &mut DiagnosticSeries, t: f64, m: &ConformalMetric| -> Result<(), GeoflowError> {
            let r = ricci::scalar_curvature(m)?;
            series.push(
                t,
                vec![
                    Some(r.max_abs()),
                    Some(r.min()),
                    Some(ricci::total_curvature_measure(m)?),
                    Some(ricci::area(m)),
                    Some(ricci::perelman_f(m, &zero)?),
                ],
            )
        };
        record(series, 0.0, &metric)?;
        let mut m = metric.clone();
        let (mut t, mut k) = (0.0, 0usize);
        let eps = 1e-14 * t_end.max(1.0);
        while t_end - t > eps {
            let dt = (m.dt_limit() * cfl / ricci::RICCI_CFL).min(t_end - t);
            m = ricci::step_ricci(&m, dt)?;
            t += dt;
            k += 1;
            if k % every == 0 || t_end - t <= eps {
                record(series, t, &m)?;
            }
        }
        Ok(m)
    })?;
    out.write("final_u.csv", last.u().to_csv().as_bytes())?;
    let total = present(&series, "total_R_measure");
    let drift = total.iter().map(|v| (v - total[0]).abs()).fold(0.0, f64::max);
    let min_r = present(&series, "min_R");
    let r0 = min_r[0];
    let mut margin = f64::INFINITY;
    for (t, r) in series.times().iter().zip(&min_r) {
        if let Ok(bound) = ricci::curvature_ode_oracle(r0, *t) {
            margin = margin.min(r - bound);
        }
    }
    let mut checks = vec![Check::le("total curvature drift", drift, 1e-10)];
    if margin.is_finite() {
        checks.push(Check::ge("min R minus ODE lower bound", margin, -1e-4));
    }
    checks.push(Check::info("final sup |R|", present(&series, "sup_abs_R").last().copied().unwrap_or(0.0)));
    Ok(Outcome {
        ending: ending_time(t_end),
        checks,
        produced: series_produced(&series, "series.csv"),
    })
}

fn run_fisher(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let family = fisher::family_by_name(&init.name).map_err(|e| CliError::Config(format!("initial.name: {e}")))?;
    let thetas: Vec<Vec<f64>> = match init.params.get("thetas") {
        Some(serde_json::Value::Array(rows)) => rows
            .iter()
            .map(|row| {
                serde_json::from_value::<Vec<f64>>(row.clone())
                    .map_err(|_| CliError::Config(format!("initial.params.thetas: expected arrays of numbers, got {row}")))
            })
            .collect::<Result<_, _>>()?,
        Some(v) => return Err(CliError::Config(format!("initial.params.thetas: expected an array, got {v}"))),
        None => vec![init.nums("theta", &vec![0.5; family.dim()])?],
    };
    if let Some(bad) = thetas.iter().find(|t| t.len() != family.dim()) {
        return Err(CliError::Config(format!(
            "initial.params.thetas: {} needs {} parameters, got {}",
            family.name(),
            family.dim(),
            bad.len()
        )));
    }
    let estimator = match init.text("estimator")?.as_deref() {
        None | Some("none") => None,
        Some("mle") => {
            let m = family.outcomes();
            let values = (0..m)
                .map(|x| {
                    let mut w = vec![0.0; m];
                    w[x] = 1.0;
                    fisher::mle(family.as_ref(), &w).map(|r| r.theta)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(Estimator::new(values)?)
        }
        Some(other) => {
            return Err(CliError::Config(format!(
                "initial.params.estimator: expected `mle` or `none`, got `{other}`"
            )))
        }
    };
    let mut lines = String::new();
    let mut score_mean: f64 = 0.0;
    let mut min_info = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut result = Ok(());
    for theta in &thetas {
        let step = (|| -> Result<(), GeoflowError> {
            let rec = fisher::fisher_record(family.as_ref(), theta, estimator.as_ref())?;
            for m in fisher::score_mean(family.as_ref(), theta)? {
                score_mean = score_mean.max(m.abs());
            }
            min_info = min_info.min(fisher::min_eigenvalue(&fisher::fisher_matrix(family.as_ref(), theta)?));
            if let Some(g) = rec.gap_min_eigenvalue {
                min_gap = min_gap.min(g);
            }
            lines.push_str(&serde_json::to_string(&rec).map_err(|e| GeoflowError::Io(e.to_string()))?);
            lines.push('\n');
            Ok(())
        })();
        if let Err(e) = step {
            result = Err(e);
            break;
        }
    }
    out.write("records.jsonl", lines.as_bytes())?;
    result?;
    let mut checks = vec![
        Check::le("max |E[score]|", score_mean, 1e-12),
        Check::ge("min Fisher eigenvalue", min_info, 0.0),
    ];
    if estimator.is_some() {
        checks.push(Check::ge("min Cramer-Rao gap eigenvalue", min_gap, -1e-10));
    }
    Ok(Outcome {
        ending: Ending::TEnd { time: 0.0 },
        checks,
        produced: ["fisher", "score", "gap"]
            .iter()
            .map(|d| (d.to_string(), "records.jsonl".to_string()))
            .collect(),
    })
}

fn run_mse(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let n = cfg.resolution;
    let (grid, exact): (RectGrid, Box<dyn Fn(f64, f64) -> f64>) = match init.name.as_str() {
        "scherk" => {
            let w = init.num("half_width", 1.2)?;
            if !(w > 0.0 && w < PI / 2.0) {
                return Err(CliError::Config(format!(
                    "initial.params.half_width: must lie in (0, pi/2), got {w}"
                )));
            }
            (RectGrid::new(-w, w, -w, w, n, n)?, Box::new(|x: f64, y: f64| (x.cos() / y.cos()).ln()))
        }
        "affine" => {
            let (sx, sy, c) = (init.num("sx", 0.3)?, init.num("sy", 0.1)?, init.num("c", 0.0)?);
            (RectGrid::new(0.0, 1.0, 0.0, 1.0, n, n)?, Box::new(move |x, y| sx * x + sy * y + c))
        }
        "zero" => (RectGrid::new(0.0, 1.0, 0.0, 1.0, n, n)?, Box::new(|_, _| 0.0)),
        _ => return Err(unknown_initial(cfg, &["scherk", "affine", "zero"])),
    };
    let problem = GraphProblem::from_fn(grid, &exact)?;
    out.write("boundary.csv", problem.boundary_csv().as_bytes())?;
    let sol = match mse::solve_mse(&problem) {
        Ok(s) => s,
        Err(e) => {
            if let GeoflowError::NonConvergence { history } = &e {
                out.write("newton.csv", newton_csv(history, &[]).as_bytes())?;
            }
            return Err(e.into());
        }
    };
    out.write("newton.csv", newton_csv(&sol.residual_history, &sol.step_lengths).as_bytes())?;
    out.write("field.csv", sol.field.to_csv().as_bytes())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let eta = RectField::new(grid, (0..grid.nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect())?
            .with_zero_boundary();
        let norm = (eta.values.iter().map(|v| v * v).sum::<f64>() * grid.hx * grid.hy).sqrt();
        if norm > 0.0 {
            worst = worst.max(mse::first_variation(&sol.field, &eta)?.abs() / norm);
        }
    }
    let closed = RectField::from_fn(grid, &exact)?;
    let err = sol
        .field
        .values
        .iter()
        .zip(&closed.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(Outcome {
        ending: Ending::TEnd { time: 0.0 },
        checks: vec![
            Check::le(
                "final Newton residual",
                sol.residual_history.last().copied().unwrap_or(f64::INFINITY),
                mse::RESIDUAL_TOLERANCE,
            ),
            Check::le("max |A'(0)[eta]| / |eta| over 20 random eta", worst, 1e-7),
            Check::info("max deviation from the boundary formula", err),
            Check::info("area", mse::area(&sol.field)),
        ],
        produced: vec![
            ("field".into(), "field.csv".into()),
            ("residual".into(), "newton.csv".into()),
            ("boundary".into(), "boundary.csv".into()),
        ],
    })
}

fn newton_csv(residuals: &[f64], steps: &[f64]) -> String {
    let mut s = String::from("iteration,residual,step_length\n");
    for (i, r) in residuals.iter().enumerate() {
        let step = steps.get(i).map(|v| format!("{v:e}")).unwrap_or_default();
        s.push_str(&format!("{i},{r:e},{step}\n"));
    }
    s
}

fn run_delta(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let init = &cfg.initial;
    let (sigma, target): (fn(f64) -> f64, f64) = match init.name.as_str() {
        "gaussian" => (|x| (-x * x).exp(), -2.0),
        "x2_gaussian" => (|x| x * x * (-x * x).exp(), 2.0),
        "kernel_cos" => return run_kernel(cfg, out),
        _ => return Err(unknown_initial(cfg, &["gaussian", "x2_gaussian", "kernel_cos"])),
    };
    let a_values = init.nums("a", &[1e2, 1e3, 1e4])?;
    if let Some(a) = a_values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(CliError::Config(format!("initial.params.a: values must be positive, got {a}")));
    }
    let mut csv = String::from("a,lhs,target,abs_error\n");
    let mut errs = Vec::new();
    for a in &a_values {
        let lhs = kernel::delta_claim1_lhs(sigma, *a)?;
        errs.push((lhs - target).abs());
        csv.push_str(&format!("{a:e},{lhs:e},{target:e},{:e}\n", (lhs - target).abs()));
    }
    out.write("delta.csv", csv.as_bytes())?;
    Ok(Outcome {
        ending: Ending::TEnd { time: 0.0 },
        checks: vec![
            Check::le("|lhs - sigma''(0)| at the largest a", errs.last().copied().unwrap_or(0.0), 1e-3),
            Check::holds("error decreases as a grows", errs.windows(2).all(|w| w[1] < w[0])),
        ],
        produced: vec![("delta".into(), "delta.csv".into())],
    })
}

fn run_kernel(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let ks = cfg.initial.nums("k", &[0.4, 0.2, 0.1, 0.05])?;
    if let Some(k) = ks.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(CliError::Config(format!("initial.params.k: values must be positive, got {k}")));
    }
    let mut csv = String::from("k,expected,exact,remainder\n");
    let mut worst: f64 = 0.0;
    for k in &ks {
        let v = kernel::kernel_expected(f64::cos, *k)?;
        let exact = (-k * k / 4.0).exp();
        let rem = kernel::kernel_remainder(f64::cos, 1.0, -1.0, *k)?;
        worst = worst.max((v - exact).abs());
        csv.push_str(&format!("{k:e},{v:e},{exact:e},{rem:e}\n"));
    }
    out.write("kernel.csv", csv.as_bytes())?;
    Ok(Outcome {
        ending: Ending::TEnd { time: 0.0 },
        checks: vec![Check::le("max |E[cos] - exp(-k^2/4)|", worst, 1e-10)],
        produced: vec![("kernel".into(), "kernel.csv".into())],
    })
}
