//! State estimation for radial distribution feeders.
//!
//! Two estimators share one network and measurement model: a Gauss-Newton
//! weighted least squares solver ([`wls`]) and a linearized interval
//! estimator that encloses the solution set of the linear model with a
//! Krawczyk iteration ([`estimator`]). [`bench`] runs Monte Carlo campaigns
//! over both and writes reproducible reports.

pub mod bench;
pub mod cases;
pub mod error;
pub mod estimator;
pub mod interval;
pub mod measurement;
pub mod network;
pub mod wls;

pub use error::{Error, Result};
