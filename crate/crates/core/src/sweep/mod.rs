//! Hyperparameter sweeps: grids, resumable execution, model selection and
//! correlation reports.

pub mod grid;
pub mod manifest;
pub mod report;
pub mod runner;
pub mod select;

pub use grid::{expand_grid, GridSpec};
pub use manifest::{run_id, RunEntry, RunStatus, SweepManifest};
pub use report::{
    correlation_report, pairwise_encoding_distances, ComboRow, Correlations, EvalRows, ModelRow, PairRow, Report,
    ReportOptions, TopEncoding,
};
pub use runner::{run_sweep, SweepOptions, SweepSummary};
pub use select::{select_model, Criterion};
