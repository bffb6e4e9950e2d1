//! Batch execution: applies harmonization rules over data files, integrates
//! the harmonized files into one dataset with provenance columns, records a
//! replay log, and re-executes logged jobs byte-identically.
//!
//! Execution never touches input files. Each applied (rule, file) pair
//! appends one log entry in application order; identity pass-through is not
//! logged because it performs no transformation. Replay re-runs the logged
//! actions against the original files and must re-create the integrated
//! output byte for byte, so everything that influences output bytes is
//! derived deterministically from (rules, dictionaries, inputs) alone.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::io::CanonicalWriterConfig;
use crate::model::{DataDictionary, DataElement, DataFile, Variable};
use crate::rules::{
    rule_from_json, rule_to_json, validate_rule, HarmonizationRule, RuleApplyError,
};
use crate::values::{conforms, Value, ValueType};

/// Names of the two provenance columns appended at integration time.
pub const SOURCE_DATASET_COLUMN: &str = "source_dataset";
pub const ORIGINAL_ID_COLUMN: &str = "original_id";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum JobConfigError {
    #[error("rule target {0} is not part of the job's target dictionary")]
    RuleTargetNotInDictionary(String),
    #[error("dataset {dataset:?}: rule source {source_ref} does not belong to the file's dictionary {dictionary:?}")]
    RuleSourceMismatch {
        dataset: String,
        source_ref: String,
        dictionary: String,
    },
    #[error("dataset {dataset:?}: target element {element:?} is covered by more than one rule")]
    AmbiguousCoverage { dataset: String, element: String },
    #[error("dataset {dataset:?}: target element {element:?} is not covered by a rule and has no identical source element")]
    UncoveredElement { dataset: String, element: String },
    #[error("dataset {dataset:?}: source element {element:?} matches the target element by name but not by response type")]
    TypeConflict { dataset: String, element: String },
    #[error("dataset {dataset:?}: rule for {element:?} is not well-formed: {details}")]
    InvalidRule {
        dataset: String,
        element: String,
        details: String,
    },
    #[error("target dictionary already defines the reserved provenance column {0:?}")]
    ReservedColumn(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    JobConfig(#[from] JobConfigError),
    #[error("dataset {dataset:?}, row {row}, column {column:?}: {message}")]
    Cell {
        dataset: String,
        row: usize,
        column: String,
        message: String,
    },
    #[error("dataset {dataset:?} does not conform to the target dictionary: {details}")]
    Conformance { dataset: String, details: String },
    #[error("replay log names dataset {0:?} but no such original was provided")]
    MissingOriginal(String),
    #[error("log line {line}: {reason}")]
    LogParse { line: usize, reason: String },
}

// ---------------------------------------------------------------------------
// Job description
// ---------------------------------------------------------------------------

/// What to do with per-cell data errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Abort the job at the first bad cell, citing row, column, and the
    /// operation that failed.
    #[default]
    FailFast,
    /// Substitute missing for bad cells and report them all at the end.
    Collect,
}

#[derive(Debug, Clone, Default)]
pub struct JobOptions {
    pub error_policy: ErrorPolicy,
    /// Dataset name of the integrated output.
    pub output_name: Option<String>,
}

/// A batch harmonization job: input files with the rules to apply to each,
/// and the target dictionary the output must comply with.
#[derive(Debug, Clone)]
pub struct HarmonizationJob {
    pub inputs: Vec<(DataFile, Vec<HarmonizationRule>)>,
    pub target: Arc<DataDictionary>,
    pub options: JobOptions,
}

/// One substituted cell under the collect error policy.
#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    /// 1-based record index in the input file.
    pub row: usize,
    /// Target element the cell was being produced for.
    pub column: String,
    pub message: String,
}

impl fmt::Display for CellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}, column {:?}: {}", self.row, self.column, self.message)
    }
}

/// Result of harmonizing one file.
#[derive(Debug)]
pub struct HarmonizeOutcome {
    pub file: DataFile,
    /// Bad cells substituted with missing (collect policy only).
    pub cell_errors: Vec<CellError>,
    /// Source columns that were neither passed through nor consumed by a
    /// rule, and are therefore absent from the output.
    pub dropped_columns: Vec<String>,
    /// Rules applied to this file, in application order.
    pub applied: Vec<HarmonizationRule>,
}

// ---------------------------------------------------------------------------
// Replay log
// ---------------------------------------------------------------------------

/// One replayable record: the full serialized rule that was applied and the
/// dataset it was applied to.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub rule: HarmonizationRule,
    pub dataset: String,
}

#[derive(Serialize)]
struct LogEntrySer<'a> {
    action: serde_json::Value,
    dataset: &'a str,
}

impl LogEntry {
    /// Compact single-line JSON with the canonical rule object embedded
    /// under "action".
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&LogEntrySer {
            action: rule_to_json(&self.rule),
            dataset: &self.dataset,
        })
        .expect("log entry serialization")
    }
}

/// Ordered, append-only record of applied rules; one JSON object per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayLog {
    entries: Vec<LogEntry>,
}

impl ReplayLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, entry: LogEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, EngineError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |reason: String| EngineError::LogParse {
                line: idx + 1,
                reason,
            };
            let value: serde_json::Value =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let action = value
                .get("action")
                .ok_or_else(|| parse_err("missing \"action\" key".into()))?;
            let rule = rule_from_json(action).map_err(|e| parse_err(e.to_string()))?;
            let dataset = value
                .get("dataset")
                .and_then(|v| v.as_str())
                .ok_or_else(|| parse_err("missing \"dataset\" key".into()))?
                .to_string();
            entries.push(LogEntry { rule, dataset });
        }
        Ok(Self { entries })
    }
}

// ---------------------------------------------------------------------------
// Column planning
// ---------------------------------------------------------------------------

enum ColumnRoute<'a> {
    Rule(&'a HarmonizationRule, usize),
    Identity(usize),
}

/// Decide, per target element, whether a rule or identity pass-through
/// produces it for this file. Enforces the job invariants.
fn plan_columns<'a>(
    file: &DataFile,
    rules: &'a [HarmonizationRule],
    target: &DataDictionary,
) -> Result<Vec<ColumnRoute<'a>>, JobConfigError> {
    let dataset = file.name().to_string();
    let dictionary = file.dictionary();

    for rule in rules {
        if rule.target().dictionary != target.name()
            || target.position_of(&rule.target().element).is_none()
        {
            return Err(JobConfigError::RuleTargetNotInDictionary(
                rule.target().to_string(),
            ));
        }
        if rule.source().dictionary != dictionary.name()
            || dictionary.position_of(&rule.source().element).is_none()
        {
            return Err(JobConfigError::RuleSourceMismatch {
                dataset: dataset.clone(),
                source_ref: rule.source().to_string(),
                dictionary: dictionary.name().to_string(),
            });
        }
    }

    let mut plan = Vec::with_capacity(target.len());
    for element in target.elements() {
        let mut candidates = rules
            .iter()
            .filter(|r| r.target().element == element.name());
        let route = match (candidates.next(), candidates.next()) {
            (Some(_), Some(_)) => {
                return Err(JobConfigError::AmbiguousCoverage {
                    dataset,
                    element: element.name().to_string(),
                })
            }
            (Some(rule), None) => {
                let catalog = [Arc::clone(dictionary), Arc::new(target.clone())];
                let violations = validate_rule(rule, &catalog);
                if !violations.is_empty() {
                    let details = violations
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join("; ");
                    return Err(JobConfigError::InvalidRule {
                        dataset,
                        element: element.name().to_string(),
                        details,
                    });
                }
                let position = dictionary
                    .position_of(&rule.source().element)
                    .expect("source checked above");
                ColumnRoute::Rule(rule, position)
            }
            (None, _) => match dictionary.position_of(element.name()) {
                Some(position) => {
                    let source = &dictionary.elements()[position];
                    if source.response_type() != element.response_type() {
                        return Err(JobConfigError::TypeConflict {
                            dataset,
                            element: element.name().to_string(),
                        });
                    }
                    ColumnRoute::Identity(position)
                }
                None => {
                    return Err(JobConfigError::UncoveredElement {
                        dataset,
                        element: element.name().to_string(),
                    })
                }
            },
        };
        plan.push(route);
    }
    Ok(plan)
}

/// Coerce a chain output onto the target element: integers widen to
/// decimal, date and text interchange their text, and categorical labels
/// resolve to their code in the element's coded set.
fn fit_to_element(value: Value, element: &DataElement) -> Result<Value, String> {
    if value.is_missing() {
        return Ok(Value::Missing);
    }
    match (value, element.response_type()) {
        (v @ Value::Text(_), ValueType::String) => Ok(v),
        (Value::Date(t), ValueType::String) => Ok(Value::Text(t)),
        (v @ Value::Date(_), ValueType::Date) => Ok(v),
        (Value::Text(t), ValueType::Date) => Ok(Value::Date(t)),
        (v @ Value::Integer(_), ValueType::Integer) => Ok(v),
        (Value::Integer(i), ValueType::Decimal) => Ok(Value::Decimal(i as f64)),
        (v @ Value::Decimal(_), ValueType::Decimal) => Ok(v),
        (v @ Value::Boolean(_), ValueType::Boolean) => Ok(v),
        (Value::EnumCode(code), ValueType::Enum(set)) => {
            if set.contains_code(code) {
                Ok(Value::EnumCode(code))
            } else {
                Err(format!("code {code} is not in the target coded set"))
            }
        }
        (Value::Text(label), ValueType::Enum(set)) => set
            .code_of(&label)
            .map(Value::EnumCode)
            .ok_or_else(|| format!("label {label:?} is not in the target coded set")),
        (v @ Value::Vector(_), ty @ ValueType::Vector(_)) => {
            if conforms(&v, ty, None) {
                Ok(v)
            } else {
                Err(format!("vector does not conform to {ty}"))
            }
        }
        (v, ty) => Err(format!("cannot fit {} into {ty}", v.kind())),
    }
}

// ---------------------------------------------------------------------------
// harmonize_file
// ---------------------------------------------------------------------------

/// Apply `rules` to `file`, producing a file that conforms to `target`.
/// The input is untouched; one log entry is appended per applied rule, in
/// application order (target dictionary order).
pub fn harmonize_file(
    file: &DataFile,
    rules: &[HarmonizationRule],
    target: &Arc<DataDictionary>,
    policy: ErrorPolicy,
    log: &mut ReplayLog,
) -> Result<HarmonizeOutcome, EngineError> {
    let plan = plan_columns(file, rules, target)?;
    let dataset = file.name().to_string();

    let mut cell_errors = Vec::new();
    let mut rows = Vec::with_capacity(file.row_count());
    for (row_idx, row) in file.rows().iter().enumerate() {
        let mut out_row = Vec::with_capacity(target.len());
        for (route, element) in plan.iter().zip(target.elements()) {
            let produced: Result<Value, String> = match route {
                ColumnRoute::Identity(position) => {
                    let value = row[*position].clone();
                    let source = &file.dictionary().elements()[*position];
                    if conforms(&value, source.response_type(), source.codes()) {
                        Ok(value)
                    } else {
                        Err(format!(
                            "input cell does not conform to element {:?}",
                            source.name()
                        ))
                    }
                }
                ColumnRoute::Rule(rule, position) => rule
                    .apply(&row[*position])
                    .map_err(|e: RuleApplyError| e.to_string())
                    .and_then(|v| fit_to_element(v, element)),
            };
            match produced {
                Ok(value) => out_row.push(value),
                Err(message) => match policy {
                    ErrorPolicy::FailFast => {
                        return Err(EngineError::Cell {
                            dataset,
                            row: row_idx + 1,
                            column: element.name().to_string(),
                            message,
                        })
                    }
                    ErrorPolicy::Collect => {
                        cell_errors.push(CellError {
                            row: row_idx + 1,
                            column: element.name().to_string(),
                            message,
                        });
                        out_row.push(Value::Missing);
                    }
                },
            }
        }
        rows.push(out_row);
    }

    let consumed: Vec<usize> = plan
        .iter()
        .map(|route| match route {
            ColumnRoute::Rule(_, position) | ColumnRoute::Identity(position) => *position,
        })
        .collect();
    let dropped_columns: Vec<String> = file
        .dictionary()
        .elements()
        .iter()
        .enumerate()
        .filter(|(i, _)| !consumed.contains(i))
        .map(|(_, e)| e.name().to_string())
        .collect();

    let applied: Vec<HarmonizationRule> = plan
        .iter()
        .filter_map(|route| match route {
            ColumnRoute::Rule(rule, _) => Some((*rule).clone()),
            ColumnRoute::Identity(_) => None,
        })
        .collect();
    for rule in &applied {
        log.append(LogEntry {
            rule: rule.clone(),
            dataset: dataset.clone(),
        });
    }

    let out = DataFile::new(dataset, Arc::clone(target), rows)
        .expect("output rows match target width by construction");
    Ok(HarmonizeOutcome {
        file: out,
        cell_errors,
        dropped_columns,
        applied,
    })
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

/// The dictionary of an integrated dataset: the target elements followed by
/// the two provenance columns.
pub fn integrated_dictionary(target: &DataDictionary) -> Result<DataDictionary, JobConfigError> {
    for reserved in [SOURCE_DATASET_COLUMN, ORIGINAL_ID_COLUMN] {
        if target.position_of(reserved).is_some() {
            return Err(JobConfigError::ReservedColumn(reserved.to_string()));
        }
    }
    let mut elements = target.elements().to_vec();
    elements.push(
        DataElement::new(
            SOURCE_DATASET_COLUMN,
            Variable::new(SOURCE_DATASET_COLUMN).expect("static name"),
            "Name of the dataset this record came from",
            ValueType::String,
        )
        .expect("static element"),
    );
    elements.push(
        DataElement::new(
            ORIGINAL_ID_COLUMN,
            Variable::new(ORIGINAL_ID_COLUMN).expect("static name"),
            "1-based record index in the original dataset",
            ValueType::Integer,
        )
        .expect("static element"),
    );
    Ok(DataDictionary::new(
        format!("{}-integrated", target.name()),
        elements,
    )
    .expect("provenance names checked against target"))
}

/// Concatenate harmonized files row-wise in input order, appending the
/// source_dataset and original_id provenance columns.
pub fn integrate(
    files: &[DataFile],
    target: &Arc<DataDictionary>,
    output_name: &str,
) -> Result<DataFile, EngineError> {
    let dictionary = Arc::new(integrated_dictionary(target)?);
    let mut rows = Vec::new();
    for file in files {
        if file.dictionary().as_ref() != target.as_ref() {
            return Err(EngineError::Conformance {
                dataset: file.name().to_string(),
                details: format!(
                    "file uses dictionary {:?}, expected {:?}",
                    file.dictionary().name(),
                    target.name()
                ),
            });
        }
        if let Some(violation) = crate::model::validate_file(file).into_iter().next() {
            return Err(EngineError::Conformance {
                dataset: file.name().to_string(),
                details: violation.to_string(),
            });
        }
        for (idx, row) in file.rows().iter().enumerate() {
            let mut out_row = row.clone();
            out_row.push(Value::Text(file.name().to_string()));
            out_row.push(Value::Integer((idx + 1) as i64));
            rows.push(out_row);
        }
    }
    Ok(DataFile::new(output_name, dictionary, rows).expect("rows match integrated dictionary"))
}

// ---------------------------------------------------------------------------
// Whole jobs and replay
// ---------------------------------------------------------------------------

/// Per-file summary of a job run.
#[derive(Debug)]
pub struct FileReport {
    pub dataset: String,
    pub rows: usize,
    pub rules_applied: usize,
    pub dropped_columns: Vec<String>,
    pub cell_errors: Vec<CellError>,
}

#[derive(Debug)]
pub struct JobOutput {
    pub integrated: DataFile,
    pub log: ReplayLog,
    /// Canonical writer configuration for the integrated output, derived
    /// from the job itself so replay regenerates it identically.
    pub writer_config: CanonicalWriterConfig,
    pub reports: Vec<FileReport>,
}

/// Pin printed decimal precision for target columns where every route into
/// the column ends in a Round with one common precision. Identity routes
/// carry arbitrary source precision, so they disable pinning.
fn derive_writer_config(
    target: &DataDictionary,
    inputs: &[(&DataFile, &[HarmonizationRule])],
) -> CanonicalWriterConfig {
    let mut per_column: BTreeMap<String, Option<u32>> = BTreeMap::new();
    for (file, rules) in inputs {
        for element in target.elements() {
            if !matches!(element.response_type(), ValueType::Decimal) {
                continue;
            }
            let rule = rules.iter().find(|r| {
                r.target().element == element.name() && r.source().dictionary == file.dictionary().name()
            });
            let precision = rule.and_then(|r| r.final_round_precision());
            per_column
                .entry(element.name().to_string())
                .and_modify(|existing| {
                    if *existing != precision {
                        *existing = None;
                    }
                })
                .or_insert(precision);
        }
    }
    CanonicalWriterConfig {
        column_precision: per_column
            .into_iter()
            .filter_map(|(column, p)| p.map(|p| (column, p)))
            .collect(),
        labels: false,
    }
}

/// Run a whole job: harmonize every input, integrate, and return the
/// output with its replay log and writer configuration.
pub fn run_job(job: &HarmonizationJob) -> Result<JobOutput, EngineError> {
    let mut log = ReplayLog::new();
    let mut harmonized = Vec::with_capacity(job.inputs.len());
    let mut reports = Vec::with_capacity(job.inputs.len());
    for (file, rules) in &job.inputs {
        let outcome = harmonize_file(file, rules, &job.target, job.options.error_policy, &mut log)?;
        reports.push(FileReport {
            dataset: file.name().to_string(),
            rows: outcome.file.row_count(),
            rules_applied: outcome.applied.len(),
            dropped_columns: outcome.dropped_columns,
            cell_errors: outcome.cell_errors,
        });
        harmonized.push(outcome.file);
    }
    let output_name = job.options.output_name.as_deref().unwrap_or("integrated");
    let integrated = integrate(&harmonized, &job.target, output_name)?;
    let inputs: Vec<(&DataFile, &[HarmonizationRule])> = job
        .inputs
        .iter()
        .map(|(f, r)| (f, r.as_slice()))
        .collect();
    let writer_config = derive_writer_config(&job.target, &inputs);
    Ok(JobOutput {
        integrated,
        log,
        writer_config,
        reports,
    })
}

#[derive(Debug)]
pub struct ReplayOutput {
    pub integrated: DataFile,
    pub writer_config: CanonicalWriterConfig,
}

/// Re-execute a logged job. Every logged action runs against its named
/// original, in log order; originals without log entries pass through
/// unchanged. Integration follows the order of `originals`, which must
/// match the original job's input order for byte-identical output.
///
/// Replay runs under the collect policy: a cell the original job turned
/// into missing is reproduced, not re-raised.
pub fn replay(
    log: &ReplayLog,
    originals: &[DataFile],
    target: &Arc<DataDictionary>,
    output_name: &str,
) -> Result<ReplayOutput, EngineError> {
    for entry in log.entries() {
        if !originals.iter().any(|f| f.name() == entry.dataset) {
            return Err(EngineError::MissingOriginal(entry.dataset.clone()));
        }
    }
    let per_file_rules: Vec<Vec<HarmonizationRule>> = originals
        .iter()
        .map(|file| {
            log.entries()
                .iter()
                .filter(|e| e.dataset == file.name())
                .map(|e| e.rule.clone())
                .collect()
        })
        .collect();

    let mut replay_log = ReplayLog::new();
    let mut harmonized = Vec::with_capacity(originals.len());
    for (file, rules) in originals.iter().zip(&per_file_rules) {
        let outcome = harmonize_file(file, rules, target, ErrorPolicy::Collect, &mut replay_log)?;
        harmonized.push(outcome.file);
    }
    let integrated = integrate(&harmonized, target, output_name)?;
    let inputs: Vec<(&DataFile, &[HarmonizationRule])> = originals
        .iter()
        .zip(&per_file_rules)
        .map(|(f, r)| (f, r.as_slice()))
        .collect();
    let writer_config = derive_writer_config(target, &inputs);
    Ok(ReplayOutput {
        integrated,
        writer_config,
    })
}
