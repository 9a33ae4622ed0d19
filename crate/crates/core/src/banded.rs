//! Symmetric positive definite banded matrices and their Cholesky solve.

use crate::error::{GeoflowError, Result};

/// Lower band of a symmetric `m x m` matrix: `band[i][d] = A(i, i - d)` for
/// `0 <= d <= bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpd {
    m: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(m: usize, bandwidth: usize) -> Self {
        BandedSpd {
            m,
            bandwidth,
            band: vec![0.0; m * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `A(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bandwidth {
            0.0
        } else {
            self.band[i * (self.bandwidth + 1) + d]
        }
    }

    /// Adds `v` to `A(i, j)` (and by symmetry `A(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        assert!(d <= self.bandwidth, "entry ({i}, {j}) outside bandwidth {}", self.bandwidth);
        self.band[i * (self.bandwidth + 1) + d] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for i in 0..self.m {
            for d in 0..=self.bandwidth.min(i) {
                let a = self.band[i * (self.bandwidth + 1) + d];
                let j = i - d;
                y[i] += a * x[j];
                if d > 0 {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Solves `A x = b` by banded Cholesky.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.m {
            return Err(GeoflowError::Contract(format!(
                "right-hand side has {} entries for a {} system",
                b.len(),
                self.m
            )));
        }
        let w = self.bandwidth + 1;
        let mut l = self.band.clone();
        for i in 0..self.m {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let mut s = l[i * w + (i - j)];
                let kl = lo.max(j.saturating_sub(self.bandwidth));
                for k in kl..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(GeoflowError::Contract(format!(
                            "matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        let mut y = b.to_vec();
        for i in 0..self.m {
            let lo = i.saturating_sub(self.bandwidth);
            for k in lo..i {
                y[i] -= l[i * w + (i - k)] * y[k];
            }
            y[i] /= l[i * w];
        }
        for i in (0..self.m).rev() {
            let hi = (i + self.bandwidth).min(self.m - 1);
            for k in i + 1..=hi {
                y[i] -= l[k * w + (k - i)] * y[k];
            }
            y[i] /= l[i * w];
        }
        Ok(y)
    }
}
