//! Numerical laboratory for geometric evolution equations.
//!
//! The crate integrates curve shortening flow, mean curvature flow of
//! periodic graphs, the heat equation and 2D Ricci flow in conformal gauge,
//! and evaluates the monotone and conserved quantities each flow carries. It
//! also holds the finite-family information geometry toolkit (score, Fisher
//! matrix, Cramér–Rao gap, maximum likelihood), Gaussian kernel asymptotics,
//! and a Newton solver for the minimal surface equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod banded;
pub mod csf;
pub mod curve;
pub mod error;
pub mod fisher;
pub mod grid;
pub mod heat;
pub mod kernel;
pub mod mcf;
pub mod mse;
pub mod quadrature;
pub mod ricci;
pub mod series;

pub use curve::{ClosedCurve, CurveGeometry, Point};
pub use error::{GeoflowError, Result};
pub use grid::{Dim, ScalarField};
pub use series::DiagnosticSeries;
