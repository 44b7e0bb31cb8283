//! Daily nowcasts of annual sector-level greenhouse-gas emissions.
//!
//! The crate turns a handful of timely indicator series into estimates of
//! the trailing-365-day emissions of a sector, calibrated against an annual
//! inventory. The pipeline is split into modules that mirror its stages:
//!
//! - [`timeseries`]: date-indexed series, daily harmonization and rolling windows.
//! - [`ingest`]: source tables, keyword site matching, continuity filtering and splicing.
//! - [`indicators`]: the ten sector indicators and the fleet emissions-potential model.
//! - [`models`]: bounded-variable least squares, random forest and extra trees.
//! - [`selection`]: repeated double cross validation and the model selection protocol.
//! - [`analysis`]: outliers, inter-annual comparison, correlation and shock slopes.
//! - [`nowcast`]: the end-to-end pipeline and its reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod ingest;
pub mod indicators;
pub mod models;
pub mod nowcast;
pub mod report;
pub mod rng;
pub mod selection;
pub mod special;
pub mod stats;
pub mod timeseries;

pub use error::{Error, Result};
pub use indicators::{FeatureMatrix, Indicator, IndicatorCode, Sector};
pub use models::{ModelKind, TrainedModel};
pub use nowcast::{run_pipeline, PipelineConfig, PipelineOutput};
pub use timeseries::{AggregationKind, Frequency, TimeSeries};
