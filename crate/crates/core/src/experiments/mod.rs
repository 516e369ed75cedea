//! Experiment drivers: estimator comparison on enumerable problems and
//! sparse-regression feature selection.

pub mod metrics;
pub mod report;
pub mod sparse;
pub mod synthetic;

pub use metrics::{compute_metrics, cosine_distance, Metrics};
pub use report::{read_reports_csv, write_reports, write_trace, ReportFormat};
pub use sparse::{
    generate_sparse_problem, least_squares, run_sparse_regression, RegressionLoss,
    SparseRegressionProblem, SparseRegressionRun, TraceRow,
};
pub use synthetic::{
    build_problem, run_synthetic, EstimatorReport, SyntheticConfig, SyntheticProblem,
};
