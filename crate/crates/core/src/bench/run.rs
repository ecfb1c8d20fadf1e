use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::methods::{parse_method, EvalContext, Method};
use crate::color::{angular_error, summarize_degrees, ErrorStats};
use crate::dataset::{DatasetManifest, Fold, SequenceRecord};
use crate::error::{Error, Result};

/// Which records of a manifest to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldSelection {
    Train,
    Test,
    All,
}

impl FromStr for FoldSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "test" => Ok(Self::Test),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidArgument(format!(
                "fold must be train, test or all, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for FoldSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Test => "test",
            Self::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::InvalidArgument(format!(
                "format must be csv or markdown, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    /// Method specs, one table row each.
    pub methods: Vec<String>,
    pub fold: FoldSelection,
    pub seed: u64,
    /// Where to write the table; nothing is written when `None`.
    pub table_path: Option<PathBuf>,
    pub format: TableFormat,
    /// Where to write the per-sequence error log (CSV).
    pub log_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, methods: Vec<String>) -> Self {
        Self {
            manifest: manifest.into(),
            methods,
            fold: FoldSelection::All,
            seed: 0,
            table_path: None,
            format: TableFormat::Markdown,
            log_path: None,
        }
    }
}

/// One evaluated sequence: an error in degrees or the failure message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub id: String,
    pub error_degrees: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: String,
    /// `None` when the method failed on every sequence.
    pub stats: Option<ErrorStats>,
    pub failures: usize,
    pub log: Vec<LogEntry>,
}

impl MethodResult {
    pub fn from_log(method: String, log: Vec<LogEntry>) -> Result<Self> {
        let errors: Vec<f64> = log.iter().filter_map(|e| e.error_degrees).collect();
        let stats = if errors.is_empty() {
            None
        } else {
            Some(summarize_degrees(&errors)?)
        };
        Ok(Self {
            method,
            stats,
            failures: log.len() - errors.len(),
            log,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ResultsTable {
    pub rows: Vec<MethodResult>,
}

impl ResultsTable {
    /// Every row's statistics must equal a fresh summary of its log.
    pub fn check_consistency(&self) -> Result<()> {
        for row in &self.rows {
            let fresh = MethodResult::from_log(row.method.clone(), row.log.clone())?;
            if fresh.stats != row.stats || fresh.failures != row.failures {
                return Err(Error::Numerical(format!(
                    "row `{}` disagrees with its error log",
                    row.method
                )));
            }
        }
        Ok(())
    }
}

fn selected_records(manifest: &DatasetManifest, fold: FoldSelection) -> Result<Vec<&SequenceRecord>> {
    let records: Vec<&SequenceRecord> = match fold {
        FoldSelection::All => manifest.records.iter().collect(),
        FoldSelection::Train | FoldSelection::Test => {
            if !manifest.records.iter().all(|r| r.split.is_some()) {
                return Err(Error::InvalidArgument(format!(
                    "fold `{fold}` requested but the manifest is not split"
                )));
            }
            let f = if fold == FoldSelection::Train { Fold::Train } else { Fold::Test };
            manifest.fold(f).collect()
        }
    };
    if records.is_empty() {
        return Err(Error::EmptyInput("no sequences in the selected fold"));
    }
    Ok(records)
}

/// Evaluates one method over the selected records in parallel; results
/// keep manifest order.
pub fn evaluate_method(
    manifest: &DatasetManifest,
    fold: FoldSelection,
    method: &dyn Method,
    seed: u64,
) -> Result<MethodResult> {
    let records = selected_records(manifest, fold)?;
    let log: Vec<LogEntry> = records
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let outcome = (|| {
                let frames = if method.is_temporal() {
                    manifest.load_frames(record)?
                } else {
                    let shot = record
                        .frames
                        .last()
                        .ok_or(Error::EmptyInput("sequence has no frames"))?;
                    vec![crate::dataset::load_frame(manifest.frame_path(shot))?]
                };
                let ctx = EvalContext {
                    id: &record.id,
                    seed: seed.wrapping_add(i as u64),
                    truth: record.illuminant,
                };
                let estimate = method.estimate(&frames, &ctx)?;
                Ok::<f64, Error>(angular_error(estimate, record.illuminant)?.degrees())
            })();
            match outcome {
                Ok(e) => LogEntry {
                    id: record.id.clone(),
                    error_degrees: Some(e),
                    failure: None,
                },
                Err(e) => {
                    log::warn!("{}: {} failed: {e}", record.id, method.label());
                    LogEntry {
                        id: record.id.clone(),
                        error_degrees: None,
                        failure: Some(format!("{}: {e}", e.kind())),
                    }
                }
            }
        })
        .collect();
    MethodResult::from_log(method.label(), log)
}

/// Runs every configured method and writes the requested outputs.
pub fn run_benchmark(config: &RunConfig) -> Result<ResultsTable> {
    if config.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods to evaluate".into()));
    }
    let methods = config
        .methods
        .iter()
        .map(|m| parse_method(m))
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::load(&config.manifest)?;
    let rows = methods
        .iter()
        .map(|m| evaluate_method(&manifest, config.fold, m.as_ref(), config.seed))
        .collect::<Result<Vec<_>>>()?;
    let table = ResultsTable { rows };
    table.check_consistency()?;

    if let Some(path) = &config.table_path {
        write_file(path, &emit_table(&table, config.format)?)?;
    }
    if let Some(path) = &config.log_path {
        write_file(path, &emit_log(&table)?)?;
    }
    Ok(table)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub const TABLE_COLUMNS: [&str; 6] = ["Mean", "Med.", "Tri.", "B25%", "W25%", "W5%"];

fn row_cells(row: &MethodResult) -> Vec<String> {
    let mut cells = vec![row.method.clone()];
    match &row.stats {
        Some(s) => cells.extend(s.as_array().iter().map(|v| format!("{v:.2}"))),
        None => cells.extend(std::iter::repeat_n("-".to_string(), 6)),
    }
    cells.push(row.failures.to_string());
    cells
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Renders the statistics table. Values have two decimals; output is a
/// pure function of the table.
pub fn emit_table(table: &ResultsTable, format: TableFormat) -> Result<Vec<u8>> {
    if table.rows.is_empty() {
        return Err(Error::EmptyInput("results table has no rows"));
    }
    let mut header = vec!["Method"];
    header.extend(TABLE_COLUMNS);
    header.push("Failures");
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).map_err(csv_error)?;
            for row in &table.rows {
                w.write_record(row_cells(row)).map_err(csv_error)?;
            }
            w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
        }
        TableFormat::Markdown => {
            let mut out = format!("| {} |\n", header.join(" | "));
            out.push_str("|---|");
            out.push_str(&"---:|".repeat(header.len() - 1));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row_cells(row).into_iter().map(|c| c.replace('|', "\\|")).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            Ok(out.into_bytes())
        }
    }
}

/// Per-sequence log: `method,id,error_deg,failure`.
pub fn emit_log(table: &ResultsTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "id", "error_deg", "failure"]).map_err(csv_error)?;
    for row in &table.rows {
        for e in &row.log {
            let err = e.error_degrees.map(|v| format!("{v:.6}")).unwrap_or_default();
            let failure = e.failure.clone().unwrap_or_default();
            w.write_record([row.method.as_str(), &e.id, &err, &failure]).map_err(csv_error)?;
        }
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}
