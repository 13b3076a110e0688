//! Per-image overlap metrics for anomaly localization.
//!
//! Score maps and binary masks go in as a [`Dataset`]; threshold sweeps turn
//! them into ROC, PRO, PIMO and IoU curves and their areas.

pub mod counting;
pub mod curves;
pub mod data;
pub mod error;
pub mod grid;
pub mod io;
pub mod perturb;
pub mod regions;
pub mod stats;
pub mod synth;

pub use data::{assemble_dataset, Dataset, GtMask, ImageClass, Sample, ScoreMap};
pub use error::{Bound, Error, Result};
pub use grid::{build_threshold_grid, GridMode, GridProvenance, ThresholdGrid};
