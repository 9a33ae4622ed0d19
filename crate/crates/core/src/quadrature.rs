//! Adaptive Gauss-Kronrod quadrature on finite intervals.

use crate::error::{GeoflowError, Result};

// 15-point Kronrod nodes on [-1, 1] (non-negative half), with the 7-point
// Gauss weights embedded at the odd positions.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by repeatedly
/// bisecting the interval with the largest error estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Integral> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Like [`integrate`], starting from the given (increasing) break points.
pub fn integrate_with_breaks(f: impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> Result<Integral> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(GeoflowError::InvalidInput(
            "quadrature breaks must be strictly increasing".into(),
        ));
    }
    let mut pieces: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(GeoflowError::Quadrature {
                error_estimate: err,
                intervals: pieces.len(),
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (a, b, _, _) = pieces.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        pieces.push((a, m, v1, e1));
        pieces.push((m, b, v2, e2));
    }
    // Sum in interval order so the result does not depend on refinement history.
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(Integral {
        value: pieces.iter().map(|p| p.2).sum(),
        error_estimate: pieces.iter().map(|p| p.3).sum(),
        intervals: pieces.len(),
    })
}
