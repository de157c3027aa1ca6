//! Experiment sweeps, result emission and acceptance checks for `matdecomp`.

pub mod checks;
pub mod config;
pub mod fit;
pub mod instance;
pub mod output;
pub mod sweep;

pub use output::{emit_csv, CSV_HEADER};
pub use sweep::{Experiment, ResultRow, Settings, SweepSpec};
