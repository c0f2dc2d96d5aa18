//! Correlation estimation on asynchronous tick data.
//!
//! Trades of two instruments rarely coincide, so previous-tick returns on a
//! common grid only partly cover the same stretch of time. The plain Pearson
//! coefficient therefore shrinks as the return interval shrinks. This crate
//! measures the overlap of the two effective return windows and reweights
//! each return product by it, removing that statistical part of the decay.
//!
//! Modules:
//! - [`tickstore`]: tick series model and CSV ingestion
//! - [`synth`]: correlated underlying paths and renewal-process tick sampling
//! - [`estimator`]: previous-tick returns, plain / compensated / filtered
//!   correlation, Hayashi-Yoshida baseline
//! - [`analysis`]: sweeps over return intervals, overlap histograms, ensembles
//! - [`experiment`]: configuration, orchestration and output files

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod synth;
pub mod tickstore;

pub use error::{Error, Result};
pub use tickstore::{SessionSpec, TickSeries};
