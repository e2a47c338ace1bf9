//! Anomaly detection for sensor time series.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] parses sensor CSV files, removes junk readings and repairs
//!   the duplicated hour left behind by a daylight-saving clock set-back.
//! * [`stats`] holds the additive seasonal decomposition, Gaussian fitting
//!   and the Pearson / Spearman / Kendall coefficients.
//! * [`detect`] implements the univariate detectors: the naive baseline,
//!   the running-average low-high pass filter (online and offline), the
//!   univariate Gaussian predictor and Seasonal ESD.
//! * [`cluster`] implements k-means and the LDCOF cluster-based score on
//!   multivariate features.
//! * [`synth`] generates seasonal test traces and injects labelled anomalies
//!   with a portable PRNG.
//! * [`evaluate`] turns flags into confusion counts and metrics, profiles
//!   anomaly frequency, flags sensor faults and combines detectors.
//! * [`pipeline`] wires everything together from a flat config file.

pub mod cluster;
pub mod config;
pub mod detect;
pub mod evaluate;
pub mod ingest;
pub mod pipeline;
pub mod plot;
pub mod special;
pub mod stats;
pub mod synth;

pub use detect::AnomalyReport;
pub use ingest::{SensorReading, TimeSeries};
