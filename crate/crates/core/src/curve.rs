//! Discrete differential geometry of closed plane curves.
//!
//! A [`ClosedCurve`] is a periodic polygon: node `i` is joined to node
//! `i + 1 mod N`. Derivatives are taken with centered differences on the
//! cyclic node index, so the same stencils serve arbitrary (not necessarily
//! arc-length) parametrisations.
//!
//! Sign conventions: the unit normal is the tangent rotated by `-pi/2`, and
//! curvature is signed so that a counterclockwise circle of radius `r` has
//! `kappa = 1/r`. With these choices the curve shortening velocity
//! `-kappa N` points into the enclosed region.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{GeoflowError, Result};

pub type Point = nalgebra::Vector2<f64>;

/// Smallest admissible node count.
pub const MIN_NODES: usize = 8;

/// Edges shorter than this fraction of the total length are degenerate.
pub const DEGENERATE_EDGE_RATIO: f64 = 1e-14;

const RESAMPLE_TOL: f64 = 1e-10;
const RESAMPLE_MAX_PASSES: usize = 12;

#[inline]
pub(crate) fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A closed polygonal curve in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    nodes: Vec<Point>,
}

impl ClosedCurve {
    /// Builds a curve, rejecting fewer than [`MIN_NODES`] nodes, non-finite
    /// coordinates and degenerate edges.
    pub fn new(nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(GeoflowError::InvalidInput(format!(
                "closed curve needs at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeoflowError::BlowUp("non-finite curve node".into()));
        }
        let curve = ClosedCurve { nodes };
        curve.check_edges()?;
        Ok(curve)
    }

    /// Samples `X(t)` at `n` parameter values equally spaced in `[0, 2 pi)`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        let nodes = (0..n)
            .map(|k| f(2.0 * PI * k as f64 / n as f64))
            .collect();
        Self::new(nodes)
    }

    /// Counterclockwise circle, regular `n`-gon inscribed.
    pub fn circle(n: usize, radius: f64, center: Point) -> Result<Self> {
        Self::from_fn(n, |t| center + Point::new(radius * t.cos(), radius * t.sin()))
    }

    /// Counterclockwise ellipse with semi-axes `a` (x) and `b` (y), sampled
    /// uniformly in the angular parameter.
    pub fn ellipse(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::from_fn(n, |t| Point::new(a * t.cos(), b * t.sin()))
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn into_nodes(self) -> Vec<Point> {
        self.nodes
    }

    /// Applies `f` to every node and revalidates.
    pub fn map(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        Self::new(self.nodes.iter().map(f).collect())
    }

    /// Edge `i` runs from node `i` to node `i + 1`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.nodes.len();
        (0..n)
            .map(|i| (self.nodes[(i + 1) % n] - self.nodes[i]).norm())
            .collect()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point {
        let sum = self.nodes.iter().fold(Point::zeros(), |acc, p| acc + p);
        sum / self.nodes.len() as f64
    }

    /// Mean distance of the nodes from `center`.
    pub fn mean_radius(&self, center: &Point) -> f64 {
        self.nodes.iter().map(|p| (p - center).norm()).sum::<f64>() / self.nodes.len() as f64
    }

    /// Cumulative polygon arc length at each node, starting from 0 at node 0.
    pub fn arc_positions(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.nodes.len());
        let mut acc = 0.0;
        for e in self.edge_lengths() {
            s.push(acc);
            acc += e;
        }
        s
    }

    fn check_edges(&self) -> Result<()> {
        let edges = self.edge_lengths();
        let total: f64 = edges.iter().sum();
        if !(total > 0.0) {
            return Err(GeoflowError::DegenerateGeometry("curve has zero length".into()));
        }
        if let Some((i, e)) = edges
            .iter()
            .enumerate()
            .find(|(_, &e)| e <= DEGENERATE_EDGE_RATIO * total)
        {
            return Err(GeoflowError::DegenerateGeometry(format!(
                "edge {i} has length {e:e} (total length {total:e})"
            )));
        }
        Ok(())
    }

    /// Serializes as CSV with header `x,y`, one node per row, without a
    /// closing duplicate of the first node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in &self.nodes {
            let _ = writeln!(out, "{},{}", p.x, p.y);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("x,y") => {}
            other => {
                return Err(GeoflowError::Parse(format!(
                    "expected header `x,y`, found {other:?}"
                )))
            }
        }
        let mut nodes = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| GeoflowError::Parse(format!("row {row}: missing field")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| GeoflowError::Parse(format!("row {row}: {e}")))
            };
            let x = next()?;
            let y = next()?;
            nodes.push(Point::new(x, y));
        }
        Self::new(nodes)
    }
}

/// Per-node frame and curvature of a [`ClosedCurve`].
#[derive(Debug, Clone)]
pub struct CurveGeometry {
    pub tangents: Vec<Point>,
    pub normals: Vec<Point>,
    pub curvature: Vec<f64>,
    /// Half-edge weights: `(|e_{i-1}| + |e_i|) / 2`.
    pub arc_weights: Vec<f64>,
    pub length: f64,
}

impl CurveGeometry {
    pub fn sup_abs_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    /// `sum kappa_i^p ds_i`
    pub fn curvature_moment(&self, p: i32) -> f64 {
        self.curvature
            .iter()
            .zip(&self.arc_weights)
            .map(|(k, w)| k.powi(p) * w)
            .sum()
    }
}

/// Tangent, normal, signed curvature and arc-length weights.
///
/// Curvature uses `(x'y'' - y'x'') / |X'|^3` with second-order centered
/// differences in the node index.
pub fn geometry(curve: &ClosedCurve) -> Result<CurveGeometry> {
    curve.check_edges()?;
    let nodes = curve.nodes();
    let n = nodes.len();
    let edges = curve.edge_lengths();
    let mut tangents = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let mut arc_weights = Vec::with_capacity(n);
    for i in 0..n {
        let prev = nodes[(i + n - 1) % n];
        let next = nodes[(i + 1) % n];
        let d1 = (next - prev) * 0.5;
        let d2 = next - 2.0 * nodes[i] + prev;
        let speed = d1.norm();
        if speed == 0.0 {
            return Err(GeoflowError::DegenerateGeometry(format!(
                "node {i} has coincident neighbours"
            )));
        }
        let t = d1 / speed;
        tangents.push(t);
        normals.push(Point::new(t.y, -t.x));
        curvature.push(cross(&d1, &d2) / (speed * speed * speed));
        arc_weights.push(0.5 * (edges[(i + n - 1) % n] + edges[i]));
    }
    Ok(CurveGeometry {
        tangents,
        normals,
        curvature,
        arc_weights,
        length: edges.iter().sum(),
    })
}

/// Polygon perimeter.
pub fn length(curve: &ClosedCurve) -> f64 {
    curve.edge_lengths().iter().sum()
}

/// Discrete total curvature: the sum of signed exterior angles, which is
/// exactly `2 pi` times the turning number of the polygon.
pub fn total_curvature(curve: &ClosedCurve) -> f64 {
    let nodes = curve.nodes();
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let e0 = nodes[i] - nodes[(i + n - 1) % n];
            let e1 = nodes[(i + 1) % n] - nodes[i];
            cross(&e0, &e1).atan2(e0.dot(&e1))
        })
        .sum()
}

/// Signed shoelace area, positive for counterclockwise curves.
pub fn enclosed_area(curve: &ClosedCurve) -> f64 {
    let nodes = curve.nodes();
    let n = nodes.len();
    0.5 * (0..n)
        .map(|i| cross(&nodes[i], &nodes[(i + 1) % n]))
        .sum::<f64>()
}

/// Periodic cubic spline through the nodes, parametrised by cumulative chord
/// length.
#[derive(Debug, Clone)]
pub(crate) struct PeriodicSpline {
    knots: Vec<f64>,
    period: f64,
    values: Vec<Point>,
    second: Vec<Point>,
}

impl PeriodicSpline {
    pub(crate) fn through(curve: &ClosedCurve) -> Self {
        let values = curve.nodes().to_vec();
        let n = values.len();
        let h = curve.edge_lengths();
        let knots = curve.arc_positions();
        let period: f64 = h.iter().sum();

        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs_x = vec![0.0; n];
        let mut rhs_y = vec![0.0; n];
        for i in 0..n {
            let hm = h[(i + n - 1) % n];
            let hp = h[i];
            sub[i] = hm;
            diag[i] = 2.0 * (hm + hp);
            sup[i] = hp;
            let slope_p = (values[(i + 1) % n] - values[i]) / hp;
            let slope_m = (values[i] - values[(i + n - 1) % n]) / hm;
            let r = 6.0 * (slope_p - slope_m);
            rhs_x[i] = r.x;
            rhs_y[i] = r.y;
        }
        let mx = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs_x);
        let my = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs_y);
        let second = mx.into_iter().zip(my).map(|(x, y)| Point::new(x, y)).collect();
        PeriodicSpline {
            knots,
            period,
            values,
            second,
        }
    }

    pub(crate) fn period(&self) -> f64 {
        self.period
    }

    pub(crate) fn eval(&self, s: f64) -> Point {
        let n = self.values.len();
        let s = s.rem_euclid(self.period);
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let s0 = self.knots[i];
        let s1 = if i + 1 < n { self.knots[i + 1] } else { self.period };
        let h = s1 - s0;
        let b = (s - s0) / h;
        let a = 1.0 - b;
        let j = (i + 1) % n;
        self.values[i] * a
            + self.values[j] * b
            + (self.second[i] * (a * a * a - a) + self.second[j] * (b * b * b - b)) * (h * h / 6.0)
    }
}

/// Solves a tridiagonal system whose first and last rows wrap around
/// (`sub[0]` multiplies `x[n-1]`, `sup[n-1]` multiplies `x[0]`).
pub(crate) fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Sherman-Morrison: A = T + u v^T with u = (gamma, 0.., sup[n-1]),
    // v = (1, 0.., sub[0]/gamma).
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= sup[n - 1] * sub[0] / gamma;
    let solve = |r: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        c[0] = sup[0] / d[0];
        x[0] = r[0] / d[0];
        for i in 1..n {
            let m = d[i] - sub[i] * c[i - 1];
            c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
            x[i] = (r[i] - sub[i] * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };
    let y = solve(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = solve(&u);
    let vy = y[0] + sub[0] / gamma * y[n - 1];
    let vz = z[0] + sub[0] / gamma * z[n - 1];
    let f = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(yi, zi)| yi - f * zi).collect()
}

/// Redistributes `n` nodes along the curve so that all edges have equal
/// length.
///
/// Nodes are placed on a periodic cubic spline through the input (chord
/// length parametrisation). Starting from equal parameter spacing, each pass
/// inverts the cumulative chord length by linear interpolation; passes stop
/// once the edge lengths agree to a relative `1e-10`. Node 0 is kept fixed.
pub fn resample_arclength(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < MIN_NODES {
        return Err(GeoflowError::InvalidInput(format!(
            "resampling needs at least {MIN_NODES} nodes, got {n}"
        )));
    }
    curve.check_edges()?;
    let spline = PeriodicSpline::through(curve);
    let period = spline.period();
    let mut params: Vec<f64> = (0..n).map(|k| k as f64 * period / n as f64).collect();
    let mut points: Vec<Point> = params.iter().map(|&s| spline.eval(s)).collect();
    for _ in 0..RESAMPLE_MAX_PASSES {
        let chords: Vec<f64> = (0..n)
            .map(|k| (points[(k + 1) % n] - points[k]).norm())
            .collect();
        let total: f64 = chords.iter().sum();
        let mean = total / n as f64;
        let spread = chords.iter().fold(0.0_f64, |m, c| m.max((c - mean).abs())) / mean;
        if spread <= RESAMPLE_TOL {
            break;
        }
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for c in &chords {
            acc += c;
            cumulative.push(acc);
        }
        let mut knots = params.clone();
        knots.push(period);
        let mut j = 0;
        let mut next = Vec::with_capacity(n);
        next.push(0.0);
        for k in 1..n {
            let target = k as f64 * total / n as f64;
            while cumulative[j + 1] < target {
                j += 1;
            }
            let w = (target - cumulative[j]) / (cumulative[j + 1] - cumulative[j]);
            next.push(knots[j] + w * (knots[j + 1] - knots[j]));
        }
        params = next;
        points = params.iter().map(|&s| spline.eval(s)).collect();
    }
    ClosedCurve::new(points)
}
