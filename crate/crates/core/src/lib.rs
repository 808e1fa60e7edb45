//! High-dimensional white-noise testing.
//!
//! Given a p-dimensional observation panel, the library tests the null of
//! serial independence with gap-constrained U-statistics of several even
//! orders, standardized by a moment estimator of their null standard
//! deviation, plus an adaptive equal-weight combination of the orders.
//! Max-type and sum-type competitor statistics, data simulators for the
//! null and VAR(1)/VMA(1) alternatives, and a reproducible Monte Carlo
//! harness for size/power studies round out the toolkit.

pub mod baselines;
pub mod covariance;
pub mod error;
pub mod montecarlo;
pub mod normal;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod ustat;
pub mod verify;
pub mod whitenoise;

pub use error::{Error, Result};
pub use series::SeriesMatrix;
