//! Extended kappa-mu small-scale fading model.
//!
//! The extended kappa-mu model describes the envelope of a received radio
//! signal as a sum of `u` in-phase and `u*p` quadrature multipath clusters,
//! each a biased Gaussian, with `k` the ratio of dominant (line-of-sight) to
//! scattered power and `p in [0, 1]` the cluster-imbalance factor. Setting
//! `p = 1` recovers the original kappa-mu model.
//!
//! The crate provides:
//!
//! - [`model`]: exact statistics of the normalized envelope and of the SNR
//!   (PDF, CDF via the Marcum Q function, arbitrary-order moments, MGF);
//! - [`metrics`]: link-performance metrics (amount of fading, outage
//!   probability, average bit error rate, effective rate);
//! - [`simulate`]: a Monte Carlo oracle sampling the generative definition,
//!   with empirical-CDF and Kolmogorov-Smirnov utilities;
//! - [`fit`]: multistart nonlinear least-squares fitting of the model CDF to
//!   empirical data;
//! - [`specfun`], [`numerics`]: the special functions and numerical kernels
//!   everything above is built on.
//!
//! All library-level SNR quantities are linear; dB conversion happens only at
//! the CLI boundary.

// Negated comparisons like `!(x > 0.0)` are used throughout as NaN-rejecting
// domain guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fit;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod simulate;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{ExtKuParams, SnrContext};
