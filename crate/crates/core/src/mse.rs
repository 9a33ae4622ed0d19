//! Dirichlet problem for the minimal surface equation on a rectangle.
//!
//! The graph is piecewise linear on a mesh that splits every grid cell along
//! its rising diagonal. The discrete area
//!
//! ```text
//! A(f) = sum_T |T| sqrt(1 + |grad f_T|^2)
//! ```
//!
//! is convex in the nodal values, its gradient is the weak form of
//! `div(grad f / sqrt(1 + |grad f|^2))`, and the solver is Newton's method on
//! that gradient.

use std::fmt::Write as _;

use crate::banded::BandedSpd;
use crate::error::{GeoflowError, Result};

pub const MIN_CELLS: usize = 16;
pub const NEWTON_BUDGET: usize = 60;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Node grid `(nx + 1) x (ny + 1)` over `[x0, x0 + nx hx] x [y0, y0 + ny hy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectGrid {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectGrid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(GeoflowError::InvalidInput(format!(
                "rectangle grid needs at least {MIN_CELLS} cells per side, got {nx}x{ny}"
            )));
        }
        if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(GeoflowError::InvalidInput(format!(
                "bad rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(RectGrid {
            x0,
            y0,
            hx: (x1 - x0) / nx as f64,
            hy: (y1 - y0) / ny as f64,
            nx,
            ny,
        })
    }

    pub fn nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % (self.nx + 1), k / (self.nx + 1));
        (self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy)
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let (i, j) = (k % (self.nx + 1), k / (self.nx + 1));
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Interior node `(i, j)` has unknown number `(j - 1)(nx - 1) + (i - 1)`.
    fn unknown(&self, k: usize) -> Option<usize> {
        if self.is_boundary(k) {
            None
        } else {
            let (i, j) = (k % (self.nx + 1), k / (self.nx + 1));
            Some((j - 1) * (self.nx - 1) + (i - 1))
        }
    }

    fn unknowns(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    /// Each triangle as its three node indices and the gradients of their
    /// hat functions.
    fn triangles(&self) -> impl Iterator<Item = ([usize; 3], [[f64; 2]; 3])> + '_ {
        let (ax, ay) = (1.0 / self.hx, 1.0 / self.hy);
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).flat_map(move |i| {
                let a = self.index(i, j);
                let b = self.index(i + 1, j);
                let c = self.index(i + 1, j + 1);
                let d = self.index(i, j + 1);
                [
                    ([a, b, c], [[-ax, 0.0], [ax, -ay], [0.0, ay]]),
                    ([a, c, d], [[0.0, -ay], [ax, 0.0], [-ax, ay]]),
                ]
            })
        })
    }

    fn triangle_area(&self) -> f64 {
        0.5 * self.hx * self.hy
    }
}

/// Nodal values of a piecewise linear graph on a [`RectGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RectField {
    pub grid: RectGrid,
    pub values: Vec<f64>,
}

impl RectField {
    pub fn new(grid: RectGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(GeoflowError::InvalidInput(format!(
                "expected {} nodal values, got {}",
                grid.nodes(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeoflowError::BlowUp("non-finite nodal value".into()));
        }
        Ok(RectField { grid, values })
    }

    pub fn from_fn(grid: RectGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(
            grid,
            (0..grid.nodes())
                .map(|k| {
                    let (x, y) = grid.position(k);
                    f(x, y)
                })
                .collect(),
        )
    }

    /// Same field with every boundary node set to zero.
    pub fn with_zero_boundary(mut self) -> Self {
        for k in 0..self.values.len() {
            if self.grid.is_boundary(k) {
                self.values[k] = 0.0;
            }
        }
        self
    }

    /// `# n=<nx+1>x<ny+1> h=<hx>,<hy> origin=<x0>,<y0>` followed by one
    /// comma-separated row per `y` level.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut out = format!(
            "# n={}x{} h={},{} origin={},{}\n",
            g.nx + 1,
            g.ny + 1,
            g.hx,
            g.hy,
            g.x0,
            g.y0
        );
        for j in 0..=g.ny {
            let row: Vec<String> = (0..=g.nx).map(|i| self.values[g.index(i, j)].to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .and_then(|l| l.trim().strip_prefix('#'))
            .ok_or_else(|| GeoflowError::Parse("missing `#` header line".into()))?;
        let mut dims = None;
        let mut spacing = None;
        let mut origin = None;
        for item in header.split_whitespace() {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| GeoflowError::Parse(format!("bad header item `{item}`")))?;
            let pair = |sep: char| -> Result<(String, String)> {
                value
                    .split_once(sep)
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .ok_or_else(|| GeoflowError::Parse(format!("bad `{key}` value `{value}`")))
            };
            let num = |s: &str| s.parse::<f64>().map_err(|e| GeoflowError::Parse(format!("`{s}`: {e}")));
            let count = |s: &str| s.parse::<usize>().map_err(|e| GeoflowError::Parse(format!("`{s}`: {e}")));
            match key {
                "n" => {
                    let (a, b) = pair('x')?;
                    dims = Some((count(&a)?, count(&b)?));
                }
                "h" => {
                    let (a, b) = pair(',')?;
                    spacing = Some((num(&a)?, num(&b)?));
                }
                "origin" => {
                    let (a, b) = pair(',')?;
                    origin = Some((num(&a)?, num(&b)?));
                }
                _ => return Err(GeoflowError::Parse(format!("unknown header key `{key}`"))),
            }
        }
        let ((px, py), (hx, hy)) = dims.zip(spacing).ok_or_else(|| GeoflowError::Parse("header needs n and h".into()))?;
        let (x0, y0) = origin.unwrap_or((0.0, 0.0));
        if px < 2 || py < 2 {
            return Err(GeoflowError::Parse("grid too small".into()));
        }
        let grid = RectGrid::new(x0, x0 + hx * (px - 1) as f64, y0, y0 + hy * (py - 1) as f64, px - 1, py - 1)
            .map_err(|e| GeoflowError::Parse(e.to_string()))?;
        let mut values = Vec::with_capacity(px * py);
        for (j, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| GeoflowError::Parse(format!("row {j}: `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != px {
                return Err(GeoflowError::Parse(format!("row {j} has {} values, expected {px}", row.len())));
            }
            values.extend(row);
        }
        if values.len() != px * py {
            return Err(GeoflowError::Parse(format!("expected {py} rows, got {}", values.len() / px)));
        }
        // Keep the exact spacing from the header rather than the one
        // recomputed from the extents.
        let grid = RectGrid { hx, hy, ..grid };
        RectField::new(grid, values).map_err(|e| GeoflowError::Parse(e.to_string()))
    }
}

/// Grid plus Dirichlet values on every boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphProblem {
    pub grid: RectGrid,
    /// `(node index, value)` in increasing node order.
    boundary: Vec<(usize, f64)>,
}

impl GraphProblem {
    pub fn new(grid: RectGrid, boundary: Vec<(usize, f64)>) -> Result<Self> {
        let mut boundary = boundary;
        boundary.sort_by_key(|b| b.0);
        let expected: Vec<usize> = (0..grid.nodes()).filter(|k| grid.is_boundary(*k)).collect();
        if boundary.len() != expected.len() || boundary.iter().zip(&expected).any(|(b, k)| b.0 != *k) {
            return Err(GeoflowError::InvalidInput(
                "boundary data must give exactly one value per boundary node".into(),
            ));
        }
        if boundary.iter().any(|b| !b.1.is_finite()) {
            return Err(GeoflowError::InvalidInput("boundary values must be finite".into()));
        }
        Ok(GraphProblem { grid, boundary })
    }

    /// Boundary trace of `g`.
    pub fn from_fn(grid: RectGrid, g: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let boundary = (0..grid.nodes())
            .filter(|k| grid.is_boundary(*k))
            .map(|k| {
                let (x, y) = grid.position(k);
                (k, g(x, y))
            })
            .collect();
        Self::new(grid, boundary)
    }

    pub fn boundary(&self) -> &[(usize, f64)] {
        &self.boundary
    }

    /// Sidecar CSV `i,j,value`, one boundary node per row.
    pub fn boundary_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        let w = self.grid.nx + 1;
        for (k, v) in &self.boundary {
            let _ = writeln!(out, "{},{},{}", k % w, k / w, v);
        }
        out
    }

    pub fn from_boundary_csv(grid: RectGrid, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("i,j,value") {
            return Err(GeoflowError::Parse("boundary sidecar must start with `i,j,value`".into()));
        }
        let mut boundary = Vec::new();
        for (row, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(GeoflowError::Parse(format!("row {row}: expected 3 fields")));
            }
            let idx = |s: &str| s.parse::<usize>().map_err(|e| GeoflowError::Parse(format!("row {row}: {e}")));
            let (i, j) = (idx(f[0])?, idx(f[1])?);
            let v = f[2].parse::<f64>().map_err(|e| GeoflowError::Parse(format!("row {row}: {e}")))?;
            if i > grid.nx || j > grid.ny {
                return Err(GeoflowError::Parse(format!("row {row}: node ({i}, {j}) off the grid")));
            }
            boundary.push((grid.index(i, j), v));
        }
        Self::new(grid, boundary).map_err(|e| GeoflowError::Parse(e.to_string()))
    }

    fn apply_boundary(&self, values: &mut [f64]) {
        for (k, v) in &self.boundary {
            values[*k] = *v;
        }
    }
}

fn check_grid(a: &RectGrid, b: &RectGrid) -> Result<()> {
    if a != b {
        return Err(GeoflowError::Contract("fields live on different grids".into()));
    }
    Ok(())
}

fn triangle_gradient(values: &[f64], nodes: &[usize; 3], grads: &[[f64; 2]; 3]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (n, d) in nodes.iter().zip(grads) {
        g[0] += values[*n] * d[0];
        g[1] += values[*n] * d[1];
    }
    g
}

/// Discrete graph area.
pub fn area(field: &RectField) -> f64 {
    let t = field.grid.triangle_area();
    field
        .grid
        .triangles()
        .map(|(nodes, grads)| {
            let [gx, gy] = triangle_gradient(&field.values, &nodes, &grads);
            t * (1.0 + gx * gx + gy * gy).sqrt()
        })
        .sum()
}

/// `sum_T |T| grad f . grad eta / sqrt(1 + |grad f|^2)`, the derivative of
/// [`area`] at `f` in direction `eta`.
pub fn first_variation(field: &RectField, eta: &RectField) -> Result<f64> {
    check_grid(&field.grid, &eta.grid)?;
    if let Some(k) = (0..eta.values.len()).find(|k| field.grid.is_boundary(*k) && eta.values[*k] != 0.0) {
        return Err(GeoflowError::Contract(format!(
            "perturbation is {} on boundary node {k}",
            eta.values[k]
        )));
    }
    let t = field.grid.triangle_area();
    Ok(field
        .grid
        .triangles()
        .map(|(nodes, grads)| {
            let [gx, gy] = triangle_gradient(&field.values, &nodes, &grads);
            let [ex, ey] = triangle_gradient(&eta.values, &nodes, &grads);
            t * (gx * ex + gy * ey) / (1.0 + gx * gx + gy * gy).sqrt()
        })
        .sum())
}

/// Interior components of the area gradient, divided by the nodal area
/// `hx hy` so that they approximate `-div(grad f / sqrt(1 + |grad f|^2))`.
pub fn mse_residual(field: &RectField) -> Vec<f64> {
    assemble(field, false).0
}

/// Residual vector and (optionally) the Hessian of the area, both over
/// interior unknowns and scaled by `1 / (hx hy)`.
fn assemble(field: &RectField, with_hessian: bool) -> (Vec<f64>, Option<BandedSpd>) {
    let g = &field.grid;
    let scale = 1.0 / (g.hx * g.hy);
    let t = g.triangle_area() * scale;
    let mut r = vec![0.0; g.unknowns()];
    let mut h = with_hessian.then(|| BandedSpd::zeros(g.unknowns(), g.nx));
    for (nodes, grads) in g.triangles() {
        let [gx, gy] = triangle_gradient(&field.values, &nodes, &grads);
        let w2 = 1.0 + gx * gx + gy * gy;
        let w = w2.sqrt();
        let ids = nodes.map(|n| g.unknown(n));
        for a in 0..3 {
            let Some(ia) = ids[a] else { continue };
            r[ia] += t * (gx * grads[a][0] + gy * grads[a][1]) / w;
            if let Some(h) = h.as_mut() {
                // M = I / w - g g^T / w^3
                let ma = [
                    (grads[a][0] * (w2 - gx * gx) - grads[a][1] * gx * gy) / (w2 * w),
                    (grads[a][1] * (w2 - gy * gy) - grads[a][0] * gx * gy) / (w2 * w),
                ];
                for b in 0..=a {
                    let Some(ib) = ids[b] else { continue };
                    h.add(ia, ib, t * (ma[0] * grads[b][0] + ma[1] * grads[b][1]));
                }
            }
        }
    }
    (r, h)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Discrete harmonic extension of the boundary data.
pub fn harmonic_extension(problem: &GraphProblem) -> Result<RectField> {
    let g = problem.grid;
    let mut values = vec![0.0; g.nodes()];
    problem.apply_boundary(&mut values);
    let field = RectField::new(g, values)?;
    // The area Hessian at a flat graph is the P1 Laplacian; one Newton-like
    // solve with it yields the harmonic interior.
    let flat = RectField::new(g, vec![0.0; g.nodes()])?;
    let (_, lap) = assemble(&flat, true);
    let lap = lap.expect("requested");
    let rhs: Vec<f64> = dirichlet_load(&field);
    let x = lap.solve(&rhs)?;
    let mut out = field;
    scatter(&mut out, &x, 1.0);
    Ok(out)
}

/// `-(K f_b)` on interior rows, where `K` is the P1 Laplacian and `f_b` is
/// the field with zero interior.
fn dirichlet_load(boundary_only: &RectField) -> Vec<f64> {
    let g = &boundary_only.grid;
    let scale = 1.0 / (g.hx * g.hy);
    let t = g.triangle_area() * scale;
    let mut r = vec![0.0; g.unknowns()];
    for (nodes, grads) in g.triangles() {
        let [gx, gy] = triangle_gradient(&boundary_only.values, &nodes, &grads);
        for a in 0..3 {
            if let Some(ia) = g.unknown(nodes[a]) {
                r[ia] -= t * (gx * grads[a][0] + gy * grads[a][1]);
            }
        }
    }
    r
}

fn scatter(field: &mut RectField, x: &[f64], step: f64) {
    let g = field.grid;
    for k in 0..g.nodes() {
        if let Some(i) = g.unknown(k) {
            field.values[k] += step * x[i];
        }
    }
}

#[derive(Debug, Clone)]
pub struct MseSolution {
    pub field: RectField,
    /// Sup norm of [`mse_residual`] before each iteration and at the end.
    pub residual_history: Vec<f64>,
    /// Accepted step length of each Newton iteration.
    pub step_lengths: Vec<f64>,
}

/// Damped Newton on the area gradient from the harmonic extension. Steps are
/// halved until the Euclidean residual norm drops by the Armijo factor.
pub fn solve_mse(problem: &GraphProblem) -> Result<MseSolution> {
    let mut field = harmonic_extension(problem)?;
    let (mut r, _) = assemble(&field, false);
    let mut history = vec![norm_inf(&r)];
    let mut steps = Vec::new();
    for _ in 0..NEWTON_BUDGET {
        if norm_inf(&r) <= RESIDUAL_TOLERANCE {
            return Ok(MseSolution {
                field,
                residual_history: history,
                step_lengths: steps,
            });
        }
        let (_, h) = assemble(&field, true);
        let dx = h.expect("requested").solve(&r)?;
        let r0 = norm2(&r);
        let mut s = 1.0;
        loop {
            let mut trial = field.clone();
            scatter(&mut trial, &dx, -s);
            let (rt, _) = assemble(&trial, false);
            if norm2(&rt) <= (1.0 - 1e-4 * s) * r0 || s < 1e-6 {
                if s < 1e-6 && norm2(&rt) > r0 {
                    return Err(GeoflowError::NonConvergence { history });
                }
                field = trial;
                r = rt;
                break;
            }
            s *= 0.5;
        }
        steps.push(s);
        history.push(norm_inf(&r));
    }
    if norm_inf(&r) <= RESIDUAL_TOLERANCE {
        return Ok(MseSolution {
            field,
            residual_history: history,
            step_lengths: steps,
        });
    }
    Err(GeoflowError::NonConvergence { history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> RectGrid {
        RectGrid::new(0.0, 1.0, 0.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn flat_and_tilted_areas() {
        let g = unit(16);
        assert!((area(&RectField::from_fn(g, |_, _| 0.0).unwrap()) - 1.0).abs() < 1e-12);
        let tilted = RectField::from_fn(g, |x, _| 0.3 * x).unwrap();
        assert!((area(&tilted) - 1.09f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn first_variation_rejects_boundary_perturbation() {
        let g = unit(16);
        let f = RectField::from_fn(g, |_, _| 0.0).unwrap();
        let eta = RectField::from_fn(g, |_, _| 1.0).unwrap();
        assert!(matches!(first_variation(&f, &eta), Err(GeoflowError::Contract(_))));
    }

    #[test]
    fn first_variation_matches_area_difference() {
        let g = unit(20);
        let bump = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
        let f = RectField::from_fn(g, |x, y| 0.5 * bump(x, y) + 0.2 * x * y).unwrap();
        let eta = RectField::from_fn(g, |x, y| bump(x, y) * (1.0 + x)).unwrap().with_zero_boundary();
        let eps = 1e-6;
        let shifted = |s: f64| {
            RectField::new(g, f.values.iter().zip(&eta.values).map(|(a, b)| a + s * b).collect()).unwrap()
        };
        let fd = (area(&shifted(eps)) - area(&shifted(-eps))) / (2.0 * eps);
        assert!((fd - first_variation(&f, &eta).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn grid_and_boundary_csv_round_trip() {
        let g = RectGrid::new(-1.0, 1.0, 0.0, 0.5, 16, 20).unwrap();
        let f = RectField::from_fn(g, |x, y| x * y + 0.25).unwrap();
        assert_eq!(RectField::from_csv(&f.to_csv()).unwrap(), f);
        let p = GraphProblem::from_fn(g, |x, y| x - y).unwrap();
        assert_eq!(GraphProblem::from_boundary_csv(g, &p.boundary_csv()).unwrap(), p);
    }

    #[test]
    fn incomplete_boundary_is_rejected() {
        let g = unit(16);
        assert!(GraphProblem::new(g, vec![(0, 1.0)]).is_err());
    }
}
