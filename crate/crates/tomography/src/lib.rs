//! Experiment runner for loss-landscape tomography.
//!
//! Parses JSON experiment configs, fans independent runs out over a worker
//! pool, aggregates them into success grids and threshold curves, and writes
//! CSV, JSON and SVG artifacts. The numerical work lives in
//! [`tomography_core`].

pub mod config;
pub mod error;
pub mod experiments;
pub mod idx;
pub mod output;
pub mod svg;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use error::{CliError, Result};
pub use experiments::run;
pub use svg::render_phase_svg;
