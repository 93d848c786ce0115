//! Canopy transpiration from sap-flow probes and Sentinel-2 reflectance.
//!
//! The crate is organised as a chain of stages:
//!
//! * [`sapflow`]: thermal-dissipation probe readings to plot-scale weekly
//!   transpiration (mm·day⁻¹).
//! * [`ingest`]: per-pixel Sentinel-2 L2A samples and station meteorology,
//!   QA-filtered and aggregated to ISO weeks.
//! * [`features`]: the weekly inner join used as the design matrix.
//! * [`forest`]: a regression random forest with impurity importance.
//! * [`eval`]: repeated k-fold cross-validation, metrics, importance scaling
//!   and report rendering.
//! * [`synth`]: a deterministic generator of all input files with a planted
//!   relationship, for end-to-end validation.

mod csvio;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod rng;
pub mod sapflow;
pub mod synth;
pub mod week;

pub use error::{Error, Result};
pub use week::IsoWeek;
