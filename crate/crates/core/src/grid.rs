//! Periodic scalar fields on uniform 1D and 2D grids, with the finite
//! difference operators shared by the graph, heat and Ricci solvers.
//!
//! A field stores `u = a . x + v` where `v` is periodic and `a` is a constant
//! slope. All flows in this crate act on `v`; derivatives of `u` are those of
//! `v` plus `a`.

use std::fmt::Write as _;

use crate::error::{GeoflowError, Result};

pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// Samples on a uniform periodic grid of `n` (1D) or `n x n` (2D) points.
/// Node `(i, j)` sits at `(i h, j h)` and is stored at `j * n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: Dim,
    n: usize,
    h: f64,
    slope: [f64; 2],
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(dim: Dim, n: usize, h: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_slope(dim, n, h, [0.0, 0.0], values)
    }

    pub fn with_slope(dim: Dim, n: usize, h: f64, slope: [f64; 2], values: Vec<f64>) -> Result<Self> {
        if n < MIN_GRID {
            return Err(GeoflowError::InvalidInput(format!(
                "grid needs at least {MIN_GRID} points per axis, got {n}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(GeoflowError::InvalidInput(format!("grid spacing {h} must be positive")));
        }
        let expected = match dim {
            Dim::One => n,
            Dim::Two => n * n,
        };
        if values.len() != expected {
            return Err(GeoflowError::InvalidInput(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if dim == Dim::One && slope[1] != 0.0 {
            return Err(GeoflowError::InvalidInput("1D field cannot have a y slope".into()));
        }
        if values.iter().chain(&slope).any(|v| !v.is_finite()) {
            return Err(GeoflowError::BlowUp("non-finite field value".into()));
        }
        Ok(ScalarField {
            dim,
            n,
            h,
            slope,
            values,
        })
    }

    /// Samples `f(x)` at `x = i * period / n`.
    pub fn from_fn_1d(n: usize, period: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = period / n as f64;
        Self::new(Dim::One, n, h, (0..n).map(|i| f(i as f64 * h)).collect())
    }

    /// Samples `f(x, y)` on the `n x n` grid of the square `[0, period)^2`.
    pub fn from_fn_2d(n: usize, period: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = period / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self::new(Dim::Two, n, h, values)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn slope(&self) -> [f64; 2] {
        self.slope
    }

    /// The periodic part `v`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell measure `h^d`.
    pub fn cell(&self) -> f64 {
        self.h.powi(self.dim.as_usize() as i32)
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.n, k / self.n);
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Full value `a . x + v` at storage index `k`.
    pub fn value_at(&self, k: usize) -> f64 {
        let (x, y) = self.coords(k);
        self.values[k] + self.slope[0] * x + self.slope[1] * y
    }

    /// Same grid and slope, new periodic values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::with_slope(self.dim, self.n, self.h, self.slope, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Riemann sum of `v` (exact trapezoid rule on a periodic grid).
    pub fn integral(&self) -> f64 {
        self.integrate(|_, v| v)
    }

    /// `sum_k f(k, v_k) h^d`, accumulated in storage order.
    pub fn integrate(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k, v))
            .sum::<f64>()
            * self.cell()
    }

    #[inline]
    pub(crate) fn idx(&self, i: isize, j: isize) -> usize {
        let n = self.n as isize;
        (j.rem_euclid(n) * n + i.rem_euclid(n)) as usize
    }

    /// Second-order Laplacian (3-point in 1D, 5-point in 2D).
    pub fn laplacian(&self) -> Vec<f64> {
        let inv = 1.0 / (self.h * self.h);
        let v = &self.values;
        let n = self.n as isize;
        match self.dim {
            Dim::One => (0..n)
                .map(|i| (v[self.idx(i + 1, 0)] - 2.0 * v[i as usize] + v[self.idx(i - 1, 0)]) * inv)
                .collect(),
            Dim::Two => {
                let mut out = Vec::with_capacity(v.len());
                for j in 0..n {
                    for i in 0..n {
                        let c = v[self.idx(i, j)];
                        out.push(
                            (v[self.idx(i + 1, j)]
                                + v[self.idx(i - 1, j)]
                                + v[self.idx(i, j + 1)]
                                + v[self.idx(i, j - 1)]
                                - 4.0 * c)
                                * inv,
                        );
                    }
                }
                out
            }
        }
    }

    /// Fourth-order Laplacian (5-point per axis).
    pub fn laplacian4(&self) -> Vec<f64> {
        let inv = 1.0 / (12.0 * self.h * self.h);
        let v = &self.values;
        let n = self.n as isize;
        let d2 = |a2: f64, a1: f64, c: f64, b1: f64, b2: f64| (-a2 + 16.0 * a1 - 30.0 * c + 16.0 * b1 - b2) * inv;
        let mut out = Vec::with_capacity(v.len());
        let rows = if self.dim == Dim::One { 1 } else { n };
        for j in 0..rows {
            for i in 0..n {
                let c = v[self.idx(i, j)];
                let mut s = d2(
                    v[self.idx(i - 2, j)],
                    v[self.idx(i - 1, j)],
                    c,
                    v[self.idx(i + 1, j)],
                    v[self.idx(i + 2, j)],
                );
                if self.dim == Dim::Two {
                    s += d2(
                        v[self.idx(i, j - 2)],
                        v[self.idx(i, j - 1)],
                        c,
                        v[self.idx(i, j + 1)],
                        v[self.idx(i, j + 2)],
                    );
                }
                out.push(s);
            }
        }
        out
    }

    /// Gradient of the full field `u` with second-order centered differences.
    /// The y component is zero in 1D.
    pub fn gradient(&self) -> Vec<[f64; 2]> {
        self.gradient_with(|m1, p1, _, _| (p1 - m1) / (2.0 * self.h))
    }

    /// Gradient of the full field `u` with fourth-order centered differences.
    pub fn gradient4(&self) -> Vec<[f64; 2]> {
        self.gradient_with(|m1, p1, m2, p2| (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * self.h))
    }

    fn gradient_with(&self, d: impl Fn(f64, f64, f64, f64) -> f64) -> Vec<[f64; 2]> {
        let v = &self.values;
        let n = self.n as isize;
        let rows = if self.dim == Dim::One { 1 } else { n };
        let mut out = Vec::with_capacity(v.len());
        for j in 0..rows {
            for i in 0..n {
                let gx = d(
                    v[self.idx(i - 1, j)],
                    v[self.idx(i + 1, j)],
                    v[self.idx(i - 2, j)],
                    v[self.idx(i + 2, j)],
                ) + self.slope[0];
                let gy = if self.dim == Dim::Two {
                    d(
                        v[self.idx(i, j - 1)],
                        v[self.idx(i, j + 1)],
                        v[self.idx(i, j - 2)],
                        v[self.idx(i, j + 2)],
                    ) + self.slope[1]
                } else {
                    0.0
                };
                out.push([gx, gy]);
            }
        }
        out
    }

    /// Second derivatives `(u_xx, u_xy, u_yy)` with second-order stencils; the
    /// mixed term uses the 4-corner stencil. In 1D only `u_xx` is non-zero.
    pub fn hessian(&self) -> Vec<[f64; 3]> {
        let v = &self.values;
        let n = self.n as isize;
        let inv = 1.0 / (self.h * self.h);
        let rows = if self.dim == Dim::One { 1 } else { n };
        let mut out = Vec::with_capacity(v.len());
        for j in 0..rows {
            for i in 0..n {
                let c = v[self.idx(i, j)];
                let xx = (v[self.idx(i + 1, j)] - 2.0 * c + v[self.idx(i - 1, j)]) * inv;
                if self.dim == Dim::One {
                    out.push([xx, 0.0, 0.0]);
                    continue;
                }
                let yy = (v[self.idx(i, j + 1)] - 2.0 * c + v[self.idx(i, j - 1)]) * inv;
                let xy = (v[self.idx(i + 1, j + 1)] - v[self.idx(i + 1, j - 1)] - v[self.idx(i - 1, j + 1)]
                    + v[self.idx(i - 1, j - 1)])
                    * 0.25
                    * inv;
                out.push([xx, xy, yy]);
            }
        }
        out
    }

    /// CSV form. 1D: header `x,u` then one `x,u` row per node. 2D: a
    /// `# n=<n> h=<h>` line then `n` comma-separated rows (row `j` holds
    /// `y = j h`). Values are the full field `u`; a non-zero slope is appended
    /// to the 2D header as ` slope=<ax>,<ay>` and, in 1D, as a trailing
    /// `# slope=<ax>` line, so that parsing restores the periodic part.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.dim {
            Dim::One => {
                out.push_str("x,u\n");
                for k in 0..self.n {
                    let _ = writeln!(out, "{},{}", self.coords(k).0, self.value_at(k));
                }
                if self.slope != [0.0, 0.0] {
                    let _ = writeln!(out, "# slope={}", self.slope[0]);
                }
            }
            Dim::Two => {
                let _ = write!(out, "# n={} h={}", self.n, self.h);
                if self.slope != [0.0, 0.0] {
                    let _ = write!(out, " slope={},{}", self.slope[0], self.slope[1]);
                }
                out.push('\n');
                for j in 0..self.n {
                    let row: Vec<String> = (0..self.n)
                        .map(|i| self.value_at(j * self.n + i).to_string())
                        .collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| GeoflowError::Parse(format!("`{s}`: {e}")))
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| GeoflowError::Parse("empty field file".into()))?
            .trim();
        if header == "x,u" {
            let mut xs = Vec::new();
            let mut us = Vec::new();
            let mut slope = 0.0;
            for line in lines {
                if let Some(rest) = line.trim().strip_prefix("# slope=") {
                    slope = parse(rest)?;
                    continue;
                }
                let (x, u) = line
                    .split_once(',')
                    .ok_or_else(|| GeoflowError::Parse(format!("bad row `{line}`")))?;
                xs.push(parse(x)?);
                us.push(parse(u)?);
            }
            if xs.len() < 2 {
                return Err(GeoflowError::Parse("1D field needs at least two rows".into()));
            }
            let h = xs[1] - xs[0];
            let values = xs.iter().zip(&us).map(|(x, u)| u - slope * x).collect();
            return Self::with_slope(Dim::One, xs.len(), h, [slope, 0.0], values);
        }
        let meta = header
            .strip_prefix('#')
            .ok_or_else(|| GeoflowError::Parse(format!("unrecognised header `{header}`")))?;
        let mut n = None;
        let mut h = None;
        let mut slope = [0.0, 0.0];
        for item in meta.split_whitespace() {
            match item.split_once('=') {
                Some(("n", v)) => {
                    n = Some(v.parse::<usize>().map_err(|e| GeoflowError::Parse(e.to_string()))?)
                }
                Some(("h", v)) => h = Some(parse(v)?),
                Some(("slope", v)) => {
                    let (a, b) = v
                        .split_once(',')
                        .ok_or_else(|| GeoflowError::Parse(format!("bad slope `{v}`")))?;
                    slope = [parse(a)?, parse(b)?];
                }
                _ => return Err(GeoflowError::Parse(format!("unknown header item `{item}`"))),
            }
        }
        let (n, h) = match (n, h) {
            (Some(n), Some(h)) => (n, h),
            _ => return Err(GeoflowError::Parse("2D header needs n= and h=".into())),
        };
        let mut values = Vec::with_capacity(n * n);
        for (j, line) in lines.enumerate() {
            let row: Vec<f64> = line.split(',').map(parse).collect::<Result<_>>()?;
            if row.len() != n {
                return Err(GeoflowError::Parse(format!("row {j} has {} values, expected {n}", row.len())));
            }
            for (i, u) in row.into_iter().enumerate() {
                values.push(u - slope[0] * i as f64 * h - slope[1] * j as f64 * h);
            }
        }
        Self::with_slope(Dim::Two, n, h, slope, values)
    }
}

/// Maximum absolute difference between the periodic parts of two fields.
pub fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn validates_shape_and_finiteness() {
        assert!(ScalarField::new(Dim::One, 8, 0.1, vec![0.0; 8]).is_err());
        assert!(ScalarField::new(Dim::One, 16, 0.1, vec![0.0; 15]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(
            ScalarField::new(Dim::One, 16, 0.1, v),
            Err(GeoflowError::BlowUp(_))
        ));
    }

    #[test]
    fn stencils_on_a_fourier_mode() {
        let n = 128;
        let k = 2.0 * PI;
        let f = ScalarField::from_fn_2d(n, 1.0, |x, y| (k * x).sin() * (k * y).cos()).unwrap();
        let h = f.h();
        let lap = f.laplacian();
        let symbol = 2.0 * (2.0 - 2.0 * (k * h).cos()) / (h * h);
        for (l, v) in lap.iter().zip(f.values()) {
            assert!((l + symbol * v).abs() < 1e-9);
        }
        let lap4 = f.laplacian4();
        for (l, v) in lap4.iter().zip(f.values()) {
            assert!((l + 2.0 * k * k * v).abs() < 1e-5);
        }
        let g4 = f.gradient4();
        for (kk, g) in g4.iter().enumerate() {
            let (x, y) = f.coords(kk);
            assert!((g[0] - k * (k * x).cos() * (k * y).cos()).abs() < 5e-6);
            assert!((g[1] + k * (k * x).sin() * (k * y).sin()).abs() < 5e-6);
        }
    }

    #[test]
    fn slope_enters_gradient_but_not_second_derivatives() {
        let f = ScalarField::with_slope(Dim::Two, 16, 1.0 / 16.0, [0.3, 0.1], vec![0.0; 256]).unwrap();
        for g in f.gradient() {
            assert_eq!(g, [0.3, 0.1]);
        }
        assert!(f.hessian().iter().all(|h| *h == [0.0; 3]));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let f = ScalarField::from_fn_1d(32, 1.0, |x| 1.0 + 0.5 * (2.0 * PI * x).sin()).unwrap();
        assert_eq!(ScalarField::from_csv(&f.to_csv()).unwrap(), f);
        let g = ScalarField::from_fn_2d(16, 2.0, |x, y| x * y + 0.25).unwrap();
        assert_eq!(ScalarField::from_csv(&g.to_csv()).unwrap(), g);
    }
}
