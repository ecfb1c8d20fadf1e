//! Evaluation harness: run registered methods over a manifest and report
//! angular-error statistics.

pub mod methods;
pub mod run;

pub use methods::{parse_method, EvalContext, Method, SingleFrame, METHOD_NAMES};
pub use run::{
    emit_log, emit_table, evaluate_method, run_benchmark, FoldSelection, LogEntry, MethodResult,
    ResultsTable, RunConfig, TableFormat,
};
