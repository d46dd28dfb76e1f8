//! Random input-output tables and the correlation between upstreamness
//! and downstreamness of their sectors.
//!
//! - [`model`] samples economies and builds the output/input share matrices.
//! - [`measures`] computes `U1`, `D1`, Fally's `U2`, `D2` and the rank-1 estimators.
//! - [`analytics`] holds the closed-form moments, the covariance `C_N` and the slope.
//! - [`oracle`] provides quadrature, Neumann-series and brute-force checks.
//! - [`experiments`] drives Monte Carlo ensembles and scatter fits.
//! - [`io`] reads and writes tables, CSV, JSON and SVG.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod stats;

pub use error::{Error, Result};
