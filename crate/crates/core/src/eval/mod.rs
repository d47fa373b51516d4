//! Leave-one-room-out evaluation: folds, metrics, statistics, the
//! experiment matrix and its reports.

pub mod folds;
pub mod matrix;
pub mod metrics;
pub mod records;
pub mod report;
pub mod stats;

pub use folds::{loro_folds, Fold, FoldPlan};
pub use matrix::{
    evaluate_ranks, oracle_of, run_matrix, summarize, Cell, ConfigRow, MatrixInputs, MatrixOutput, MatrixSpec, MeanStd,
    ReportTable, TTestRow, TTEST_PAIRS,
};
pub use metrics::{aggregate, recombine, singleton_oracle, stratify, topk, Axis, Stratum, NON_POINTING, POINTING};
pub use records::{AlphaRecord, ResultRecord};
pub use report::write_report;
pub use stats::{paired_t, two_sided_p, TTest};
