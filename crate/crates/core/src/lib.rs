//! High-dimensional Cox regression toolkit.
//!
//! In the proportional-hazards regime where the number of covariates grows
//! like a fixed fraction of the sample size, the maximum partial likelihood
//! estimator stops behaving classically: it may fail to exist at all past a
//! sharp aspect-ratio threshold, and where it exists it is biased and
//! over-dispersed relative to textbook theory. This crate bundles the
//! machinery needed to study and correct for both effects:
//!
//! - [`model`]: simulated censored cohorts, the decreasing-time sort, and
//!   the rotated one-dimensional reduced model;
//! - [`fit`]: the partial likelihood, its derivatives, a damped Newton
//!   solver and classical Fisher/LRT diagnostics;
//! - [`existence`]: a finite-sample existence verdict by linear programming
//!   over a reduced constraint set;
//! - [`boundary`]: Monte Carlo estimation of the theoretical existence
//!   boundary via order-cone projections;
//! - [`state`]: the scalar saddle problem whose solution (a*, b*, r*) gives
//!   the asymptotic bias factor and null-coordinate spread;
//! - [`inference`]: corrected z and Wald chi-square tests plus
//!   distribution-fit statistics;
//! - [`harness`]: seeded, deterministic experiment drivers with CSV
//!   artifacts.
//!
//! The `coxht` binary exposes the same functionality as subcommands.

pub mod boundary;
pub mod error;
pub mod existence;
pub mod fit;
pub mod harness;
pub mod inference;
pub mod model;
pub mod numeric;
pub mod state;

pub use error::{CoxError, Result};
