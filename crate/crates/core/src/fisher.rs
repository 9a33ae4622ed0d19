//! Score, Fisher matrix, Cramér–Rao gap and maximum likelihood on finite
//! sample spaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{GeoflowError, Result};

/// Relative step of the central-difference fallback for `dp/dtheta`.
const FD_STEP: f64 = 1e-6;

/// A parametric probability vector over a finite ordered sample space.
pub trait DiscreteFamily {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn outcomes(&self) -> usize;
    /// Axis-aligned bounds of the parameter domain.
    fn bounds(&self) -> Vec<(f64, f64)>;
    /// Membership in the parameter domain (defaults to the bounding box).
    fn admissible(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.bounds())
                .all(|(t, (lo, hi))| *t >= lo && *t <= hi)
    }
    /// Probabilities at an admissible `theta`.
    fn probabilities(&self, theta: &[f64]) -> Vec<f64>;
    /// Analytic `dp[outcome][i] = d p(outcome) / d theta_i`, if available.
    fn jacobian(&self, _theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        None
    }
}

fn check_theta(family: &dyn DiscreteFamily, theta: &[f64]) -> Result<()> {
    if !family.admissible(theta) {
        return Err(GeoflowError::Domain(format!(
            "theta {theta:?} is outside the domain of {}",
            family.name()
        )));
    }
    Ok(())
}

/// Probabilities and their parameter derivatives; the flag reports whether
/// the derivatives are analytic.
pub fn derivatives(family: &dyn DiscreteFamily, theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>, bool)> {
    check_theta(family, theta)?;
    let p = family.probabilities(theta);
    if let Some(j) = family.jacobian(theta) {
        return Ok((p, j, true));
    }
    let d = family.dim();
    let mut jac = vec![vec![0.0; d]; p.len()];
    for i in 0..d {
        let h = FD_STEP * theta[i].abs().max(1.0);
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let (fp, fm, span) = match (family.admissible(&plus), family.admissible(&minus)) {
            (true, true) => (family.probabilities(&plus), family.probabilities(&minus), 2.0 * h),
            (true, false) => (family.probabilities(&plus), p.clone(), h),
            (false, true) => (p.clone(), family.probabilities(&minus), h),
            (false, false) => {
                return Err(GeoflowError::Domain(format!(
                    "no room for a difference step around {theta:?}"
                )))
            }
        };
        for (row, (a, b)) in jac.iter_mut().zip(fp.iter().zip(&fm)) {
            row[i] = (a - b) / span;
        }
    }
    Ok((p, jac, false))
}

/// Per-outcome score vectors `d log p / d theta`. Outcomes with zero
/// probability and zero derivative get a zero score.
pub fn score(family: &dyn DiscreteFamily, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (p, jac, _) = derivatives(family, theta)?;
    p.iter()
        .zip(jac)
        .enumerate()
        .map(|(x, (&px, dp))| {
            if px > 0.0 {
                Ok(dp.iter().map(|d| d / px).collect())
            } else if dp.iter().all(|d| *d == 0.0) {
                Ok(vec![0.0; dp.len()])
            } else {
                Err(GeoflowError::Domain(format!(
                    "outcome {x} has zero probability but non-zero derivative at {theta:?}"
                )))
            }
        })
        .collect()
}

/// `E[V]`, which vanishes for every family.
pub fn score_mean(family: &dyn DiscreteFamily, theta: &[f64]) -> Result<Vec<f64>> {
    let v = score(family, theta)?;
    let p = family.probabilities(theta);
    let mut mean = vec![0.0; family.dim()];
    for (px, vx) in p.iter().zip(&v) {
        for (m, s) in mean.iter_mut().zip(vx) {
            *m += px * s;
        }
    }
    Ok(mean)
}

/// `g_ij = E[V_i V_j]`.
pub fn fisher_matrix(family: &dyn DiscreteFamily, theta: &[f64]) -> Result<DMatrix<f64>> {
    let v = score(family, theta)?;
    let p = family.probabilities(theta);
    let d = family.dim();
    let mut g = DMatrix::zeros(d, d);
    for (px, vx) in p.iter().zip(&v) {
        let s = DVector::from_column_slice(vx);
        g += *px * &s * s.transpose();
    }
    Ok(g)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Parameter estimate for every outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    values: Vec<Vec<f64>>,
}

impl Estimator {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let d = values.first().map_or(0, |v| v.len());
        if d == 0 || values.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
            return Err(GeoflowError::InvalidInput(
                "estimator needs one finite vector of common length per outcome".into(),
            ));
        }
        Ok(Estimator { values })
    }

    pub fn from_fn(outcomes: usize, f: impl Fn(usize) -> Vec<f64>) -> Result<Self> {
        Self::new((0..outcomes).map(f).collect())
    }

    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|v| vec![*v]).collect())
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }
}

pub const BIAS_TOLERANCE: f64 = 1e-8;

/// `cov(est) - g^{-1}`, positive semidefinite for estimators unbiased near
/// `theta`.
///
/// Requires `E[est] = theta` and `d E[est] / d theta = I`; the second
/// condition rules out estimators that are unbiased only at the single point
/// `theta` (a constant estimator is one).
pub fn cramer_rao_gap(family: &dyn DiscreteFamily, est: &Estimator, theta: &[f64]) -> Result<DMatrix<f64>> {
    let (p, jac, _) = derivatives(family, theta)?;
    let d = family.dim();
    if est.values.len() != p.len() || est.values[0].len() != d {
        return Err(GeoflowError::InvalidInput(format!(
            "estimator shape {}x{} does not match {} outcomes of dimension {d}",
            est.values.len(),
            est.values[0].len(),
            p.len()
        )));
    }
    let mut mean = DVector::zeros(d);
    for (px, e) in p.iter().zip(&est.values) {
        mean += *px * DVector::from_column_slice(e);
    }
    let bias: Vec<f64> = mean.iter().zip(theta).map(|(m, t)| m - t).collect();
    if bias.iter().any(|b| b.abs() > BIAS_TOLERANCE) {
        return Err(GeoflowError::Bias { bias });
    }
    let mut sensitivity = DMatrix::<f64>::zeros(d, d);
    for (dp, e) in jac.iter().zip(&est.values) {
        for a in 0..d {
            for b in 0..d {
                sensitivity[(a, b)] += e[a] * dp[b];
            }
        }
    }
    let deviation = (sensitivity - DMatrix::identity(d, d)).abs().max();
    if deviation > 1e-6 {
        return Err(GeoflowError::NotLocallyUnbiased { deviation });
    }
    let g = fisher_matrix(family, theta)?;
    let lambda = min_eigenvalue(&g);
    if !(lambda > 1e-12 * g.abs().max().max(1.0)) {
        return Err(GeoflowError::SingularFisher { min_eigenvalue: lambda });
    }
    let g_inv = g
        .cholesky()
        .ok_or(GeoflowError::SingularFisher { min_eigenvalue: lambda })?
        .inverse();
    let mut cov = DMatrix::zeros(d, d);
    for (px, e) in p.iter().zip(&est.values) {
        let c = DVector::from_column_slice(e) - &mean;
        cov += *px * &c * c.transpose();
    }
    Ok(cov - g_inv)
}

/// Weighted log-likelihood `sum_x w_x log p_x` and its gradient.
pub fn log_likelihood(family: &dyn DiscreteFamily, weights: &[f64], theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (p, jac, _) = derivatives(family, theta)?;
    let mut value = 0.0;
    let mut grad = vec![0.0; family.dim()];
    for ((w, px), dp) in weights.iter().zip(&p).zip(&jac) {
        if *w == 0.0 {
            continue;
        }
        if *px <= 0.0 {
            return Ok((f64::NEG_INFINITY, grad));
        }
        value += w * px.ln();
        for (g, d) in grad.iter_mut().zip(dp) {
            *g += w * d / px;
        }
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub theta: Vec<f64>,
    /// The maximum sits on the boundary of the parameter domain.
    pub boundary: bool,
    /// Gradient norm at `theta` (not meaningful on the boundary).
    pub stationarity: f64,
    pub iterations: usize,
}

const MLE_MAX_ITER: usize = 200;
const MLE_TOL: f64 = 1e-11;

/// Maximum likelihood estimate for outcome weights (counts or frequencies).
///
/// One-parameter families use Newton's method safeguarded by bisection on a
/// sign-changing bracket of the score; a score that keeps one sign across the
/// whole domain reports the corresponding endpoint as a boundary optimum.
/// Higher dimensions use damped Newton with a difference Hessian.
pub fn mle(family: &dyn DiscreteFamily, weights: &[f64]) -> Result<MleResult> {
    if weights.len() != family.outcomes() || weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(GeoflowError::InvalidInput(
            "weights must be non-negative, one per outcome, and not all zero".into(),
        ));
    }
    if family.dim() == 1 {
        mle_1d(family, weights)
    } else {
        mle_nd(family, weights)
    }
}

fn mle_1d(family: &dyn DiscreteFamily, weights: &[f64]) -> Result<MleResult> {
    let (lo, hi) = family.bounds()[0];
    let span = hi - lo;
    let slope = |t: f64| -> Result<f64> { Ok(log_likelihood(family, weights, &[t])?.1[0]) };
    let mut a = lo + 1e-12 * span;
    let mut b = hi - 1e-12 * span;
    let sa = slope(a)?;
    let sb = slope(b)?;
    if sa <= 0.0 {
        return Ok(MleResult {
            theta: vec![lo],
            boundary: true,
            stationarity: sa.abs(),
            iterations: 0,
        });
    }
    if sb >= 0.0 {
        return Ok(MleResult {
            theta: vec![hi],
            boundary: true,
            stationarity: sb.abs(),
            iterations: 0,
        });
    }
    let mut t = 0.5 * (a + b);
    let mut best = (f64::INFINITY, t);
    for it in 1..=MLE_MAX_ITER {
        let s = slope(t)?;
        if s.abs() < best.0 {
            best = (s.abs(), t);
        }
        if s > 0.0 {
            a = t;
        } else {
            b = t;
        }
        let scale = weights.iter().sum::<f64>() / (t - lo).min(hi - t).max(1e-300);
        if s.abs() <= MLE_TOL * scale.max(1.0) || b - a <= 4.0 * f64::EPSILON * span {
            return Ok(MleResult {
                theta: vec![t],
                boundary: false,
                stationarity: s.abs(),
                iterations: it,
            });
        }
        let h = 1e-6 * (b - a).min(t.abs().max(1e-3));
        let curvature = (slope((t + h).min(hi))? - slope((t - h).max(lo))?) / (2.0 * h);
        let newton = t - s / curvature;
        t = if curvature < 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Err(GeoflowError::Optimization {
        message: format!("no stationary point of {} after {MLE_MAX_ITER} iterations", family.name()),
        best: vec![best.1],
    })
}

fn mle_nd(family: &dyn DiscreteFamily, weights: &[f64]) -> Result<MleResult> {
    let d = family.dim();
    let mut theta: Vec<f64> = family.bounds().iter().map(|(lo, hi)| interior_start(*lo, *hi)).collect();
    if !family.admissible(&theta) {
        theta = vec![1.0 / (d + 1) as f64; d];
    }
    let (mut value, mut grad) = log_likelihood(family, weights, &theta)?;
    for it in 1..=MLE_MAX_ITER {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm <= MLE_TOL * weights.iter().sum::<f64>().max(1.0) {
            return Ok(MleResult {
                theta,
                boundary: false,
                stationarity: norm,
                iterations: it,
            });
        }
        let mut hess = DMatrix::zeros(d, d);
        for i in 0..d {
            let h = 1e-6 * theta[i].abs().max(1e-3);
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[i] += h;
            minus[i] -= h;
            let gp = log_likelihood(family, weights, &plus)?.1;
            let gm = log_likelihood(family, weights, &minus)?.1;
            for j in 0..d {
                hess[(j, i)] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        let hess = 0.5 * (&hess + hess.transpose());
        let g = DVector::from_column_slice(&grad);
        let direction = match (-&hess).cholesky() {
            Some(c) => c.solve(&g),
            None => g.clone(),
        };
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(direction.iter()).map(|(t, s)| t + step * s).collect();
            if family.admissible(&trial) {
                let (v, gr) = log_likelihood(family, weights, &trial)?;
                if v >= value + 1e-4 * step * g.dot(&direction) {
                    theta = trial;
                    value = v;
                    grad = gr;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-14 {
                return Ok(MleResult {
                    theta,
                    boundary: true,
                    stationarity: norm,
                    iterations: it,
                });
            }
        }
    }
    Err(GeoflowError::Optimization {
        message: format!("damped Newton on {} did not converge", family.name()),
        best: theta,
    })
}

fn interior_start(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
        (false, false) => 0.0,
    }
}

pub struct Bernoulli;

impl DiscreteFamily for Bernoulli {
    fn name(&self) -> String {
        "bernoulli".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn outcomes(&self) -> usize {
        2
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0)]
    }
    /// Outcome 0 is failure, outcome 1 success.
    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        vec![1.0 - theta[0], theta[0]]
    }
    fn jacobian(&self, _theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        Some(vec![vec![-1.0], vec![1.0]])
    }
}

fn binomial_coefficient(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

/// `p^k (1-p)^(n-k)` and its derivative in `p`.
fn sequence_weight(n: u32, k: u32, p: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let value = p.powi(k as i32) * q.powi((n - k) as i32);
    let mut d = 0.0;
    if k > 0 {
        d += k as f64 * p.powi(k as i32 - 1) * q.powi((n - k) as i32);
    }
    if k < n {
        d -= (n - k) as f64 * p.powi(k as i32) * q.powi((n - k) as i32 - 1);
    }
    (value, d)
}

/// Number of successes in `n` independent trials; outcome `k` has `k` successes.
pub struct Binomial {
    pub n: u32,
}

impl DiscreteFamily for Binomial {
    fn name(&self) -> String {
        format!("binomial-{}", self.n)
    }
    fn dim(&self) -> usize {
        1
    }
    fn outcomes(&self) -> usize {
        self.n as usize + 1
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0)]
    }
    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        (0..=self.n)
            .map(|k| binomial_coefficient(self.n, k) * sequence_weight(self.n, k, theta[0]).0)
            .collect()
    }
    fn jacobian(&self, theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        Some(
            (0..=self.n)
                .map(|k| vec![binomial_coefficient(self.n, k) * sequence_weight(self.n, k, theta[0]).1])
                .collect(),
        )
    }
}

/// Full record of `n` independent trials; outcome `x` is a bit mask whose bit
/// `i` marks success of trial `i`.
pub struct BernoulliSequence {
    pub n: u32,
}

impl DiscreteFamily for BernoulliSequence {
    fn name(&self) -> String {
        format!("bernoulli-sequence-{}", self.n)
    }
    fn dim(&self) -> usize {
        1
    }
    fn outcomes(&self) -> usize {
        1 << self.n
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0)]
    }
    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.outcomes())
            .map(|x| sequence_weight(self.n, (x as u32).count_ones(), theta[0]).0)
            .collect()
    }
    fn jacobian(&self, theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        Some(
            (0..self.outcomes())
                .map(|x| vec![sequence_weight(self.n, (x as u32).count_ones(), theta[0]).1])
                .collect(),
        )
    }
}

/// `k` outcomes; `theta` holds the first `k - 1` probabilities.
pub struct Categorical {
    pub k: usize,
}

impl DiscreteFamily for Categorical {
    fn name(&self) -> String {
        format!("categorical-{}", self.k)
    }
    fn dim(&self) -> usize {
        self.k - 1
    }
    fn outcomes(&self) -> usize {
        self.k
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.k - 1]
    }
    fn admissible(&self, theta: &[f64]) -> bool {
        theta.len() == self.k - 1 && theta.iter().all(|t| *t >= 0.0) && theta.iter().sum::<f64>() <= 1.0 + 1e-15
    }
    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        let mut p = theta.to_vec();
        p.push(1.0 - theta.iter().sum::<f64>());
        p
    }
    fn jacobian(&self, _theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        let d = self.k - 1;
        let mut j: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|l| if i == l { 1.0 } else { 0.0 }).collect())
            .collect();
        j.push(vec![-1.0; d]);
        Some(j)
    }
}

/// `p(x) = exp(theta . T(x) - psi(theta))` with sufficient statistics
/// `stats[x]`.
pub struct ExponentialFamily {
    pub stats: Vec<Vec<f64>>,
}

impl ExponentialFamily {
    pub fn new(stats: Vec<Vec<f64>>) -> Result<Self> {
        let d = stats.first().map_or(0, |s| s.len());
        if stats.len() < 2 || d == 0 || stats.iter().any(|s| s.len() != d) {
            return Err(GeoflowError::InvalidInput(
                "need at least two outcomes with statistics of one common length".into(),
            ));
        }
        Ok(ExponentialFamily { stats })
    }
}

impl DiscreteFamily for ExponentialFamily {
    fn name(&self) -> String {
        format!("exponential-{}x{}", self.stats.len(), self.dim())
    }
    fn dim(&self) -> usize {
        self.stats[0].len()
    }
    fn outcomes(&self) -> usize {
        self.stats.len()
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.dim()]
    }
    fn admissible(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && theta.iter().all(|t| t.is_finite())
    }
    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .stats
            .iter()
            .map(|s| s.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }
    fn jacobian(&self, theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        let p = self.probabilities(theta);
        let d = self.dim();
        let mean: Vec<f64> = (0..d)
            .map(|i| p.iter().zip(&self.stats).map(|(px, s)| px * s[i]).sum())
            .collect();
        Some(
            p.iter()
                .zip(&self.stats)
                .map(|(px, s)| (0..d).map(|i| px * (s[i] - mean[i])).collect())
                .collect(),
        )
    }
}

/// A family given only by its probability function; derivatives are taken
/// by central differences.
pub struct FnFamily<F: Fn(&[f64]) -> Vec<f64>> {
    pub label: String,
    pub outcomes: usize,
    pub bounds: Vec<(f64, f64)>,
    pub prob: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> DiscreteFamily for FnFamily<F> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn dim(&self) -> usize {
        self.bounds.len()
    }
    fn outcomes(&self) -> usize {
        self.outcomes
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.clone()
    }
    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        (self.prob)(theta)
    }
}

/// Built-in family by name: `bernoulli`, `binomial-<n>`,
/// `bernoulli-sequence-<n>` or `categorical-<k>`.
pub fn family_by_name(name: &str) -> Result<Box<dyn DiscreteFamily>> {
    let sized = |prefix: &str| -> Option<Result<u32>> {
        name.strip_prefix(prefix).map(|rest| {
            rest.parse::<u32>()
                .map_err(|_| GeoflowError::InvalidInput(format!("bad size in family name `{name}`")))
        })
    };
    if name == "bernoulli" {
        return Ok(Box::new(Bernoulli));
    }
    if let Some(n) = sized("binomial-") {
        let n = n?;
        if n == 0 || n > 64 {
            return Err(GeoflowError::InvalidInput(format!("binomial size {n} out of range 1..=64")));
        }
        return Ok(Box::new(Binomial { n }));
    }
    if let Some(n) = sized("bernoulli-sequence-") {
        let n = n?;
        if n == 0 || n > 16 {
            return Err(GeoflowError::InvalidInput(format!("sequence length {n} out of range 1..=16")));
        }
        return Ok(Box::new(BernoulliSequence { n }));
    }
    if let Some(k) = sized("categorical-") {
        let k = k?;
        if !(2..=64).contains(&k) {
            return Err(GeoflowError::InvalidInput(format!("categorical size {k} out of range 2..=64")));
        }
        return Ok(Box::new(Categorical { k: k as usize }));
    }
    Err(GeoflowError::InvalidInput(format!("unknown family `{name}`")))
}

/// JSON line of a Fisher report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FisherRecord {
    pub family: String,
    pub theta: Vec<f64>,
    pub fisher: Vec<Vec<f64>>,
    pub gap_min_eigenvalue: Option<f64>,
}

/// Fisher matrix at `theta` plus, when an estimator is given, the smallest
/// eigenvalue of its Cramér–Rao gap.
pub fn fisher_record(family: &dyn DiscreteFamily, theta: &[f64], est: Option<&Estimator>) -> Result<FisherRecord> {
    let g = fisher_matrix(family, theta)?;
    let gap = match est {
        Some(e) => Some(min_eigenvalue(&cramer_rao_gap(family, e, theta)?)),
        None => None,
    };
    Ok(FisherRecord {
        family: family.name(),
        theta: theta.to_vec(),
        fisher: g.row_iter().map(|r| r.iter().copied().collect()).collect(),
        gap_min_eigenvalue: gap,
    })
}

/// Every estimator on `n` trials that is unbiased for all `p`, of the form
/// `k/n + delta(x)` with `delta` drawn from `grid` and summing to zero over
/// each class of outcomes with `k` successes.
///
/// Unbiasedness for all `p` forces exactly these class sums, so with `grid`
/// containing 0 the enumeration includes the sample mean.
pub fn unbiased_sequence_estimators(n: u32, grid: &[f64]) -> Vec<Estimator> {
    let outcomes = 1usize << n;
    let classes: Vec<Vec<usize>> = (0..=n)
        .map(|k| (0..outcomes).filter(|x| (*x as u32).count_ones() == k).collect())
        .collect();
    let per_class: Vec<Vec<Vec<f64>>> = classes.iter().map(|c| zero_sum_assignments(c.len(), grid)).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; classes.len()];
    loop {
        let mut values = vec![0.0; outcomes];
        for (k, (class, &pick)) in classes.iter().zip(&choice).enumerate() {
            for (x, delta) in class.iter().zip(&per_class[k][pick]) {
                values[*x] = k as f64 / n as f64 + delta;
            }
        }
        out.push(Estimator::scalar(&values).expect("finite"));
        let mut level = 0;
        loop {
            if level == choice.len() {
                return out;
            }
            choice[level] += 1;
            if choice[level] < per_class[level].len() {
                break;
            }
            choice[level] = 0;
            level += 1;
        }
    }
}

fn zero_sum_assignments(len: usize, grid: &[f64]) -> Vec<Vec<f64>> {
    if len == 1 {
        return vec![vec![0.0]];
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; len];
    loop {
        let v: Vec<f64> = idx.iter().map(|i| grid[*i]).collect();
        if v.iter().sum::<f64>().abs() < 1e-12 {
            out.push(v);
        }
        let mut level = 0;
        loop {
            if level == len {
                return out;
            }
            idx[level] += 1;
            if idx[level] < grid.len() {
                break;
            }
            idx[level] = 0;
            level += 1;
        }
    }
}

/// Shannon entropy `-sum p log p` in nats (zero terms skipped).
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// `H_A(B) = sum_a p(a) H(B | A = a)` for a joint table `joint[a][b]`.
pub fn conditional_entropy(joint: &[Vec<f64>]) -> f64 {
    joint
        .iter()
        .map(|row| {
            let pa: f64 = row.iter().sum();
            if pa > 0.0 {
                let cond: Vec<f64> = row.iter().map(|v| v / pa).collect();
                pa * shannon_entropy(&cond)
            } else {
                0.0
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_score_values() {
        let v = score(&Bernoulli, &[0.5]).unwrap();
        assert_eq!(v, vec![vec![-2.0], vec![2.0]]);
    }

    #[test]
    fn outside_domain_is_rejected() {
        assert!(matches!(score(&Bernoulli, &[1.5]), Err(GeoflowError::Domain(_))));
    }

    #[test]
    fn zero_probability_with_slope_is_a_domain_error() {
        assert!(matches!(score(&Bernoulli, &[0.0]), Err(GeoflowError::Domain(_))));
    }

    #[test]
    fn names_round_trip() {
        for name in ["bernoulli", "binomial-4", "bernoulli-sequence-3", "categorical-3"] {
            assert_eq!(family_by_name(name).unwrap().name(), name);
        }
        assert!(family_by_name("poisson").is_err());
        assert!(family_by_name("binomial-x").is_err());
    }

    #[test]
    fn constant_estimator_is_not_locally_unbiased() {
        let est = Estimator::scalar(&[0.3, 0.3]).unwrap();
        assert!(matches!(
            cramer_rao_gap(&Bernoulli, &est, &[0.3]),
            Err(GeoflowError::NotLocallyUnbiased { .. })
        ));
    }

    #[test]
    fn biased_estimator_reports_bias() {
        let est = Estimator::scalar(&[0.0, 0.5]).unwrap();
        match cramer_rao_gap(&Bernoulli, &est, &[0.3]) {
            Err(GeoflowError::Bias { bias }) => assert!((bias[0] + 0.15).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn enumeration_sizes() {
        // zero-sum vectors over {-1/2, 0, 1/2}: length 3 -> 7, length 4 -> 19, length 6 -> 141
        let grid = [-0.5, 0.0, 0.5];
        assert_eq!(zero_sum_assignments(3, &grid).len(), 7);
        assert_eq!(zero_sum_assignments(4, &grid).len(), 19);
        assert_eq!(zero_sum_assignments(6, &grid).len(), 141);
        assert_eq!(unbiased_sequence_estimators(3, &grid).len(), 49);
    }
}
