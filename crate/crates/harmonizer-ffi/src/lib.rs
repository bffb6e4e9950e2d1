//! C ABI for the harmonizer engine.
//!
//! Conventions:
//! - Handles (`HmzDictionary`, `HmzRule`, `HmzDataFile`, `HmzStore`) are
//!   opaque pointers owned by Rust; free them with the matching `_free`.
//! - Returned strings are NUL-terminated, UTF-8, owned by the caller, and
//!   must be released with `hmz_string_free`.
//! - Functions that can fail return an `HmzStatus`; on any non-OK status
//!   (or a NULL handle return) `hmz_last_error_message` describes the
//!   failure for the calling thread.
//! - Structured inputs and outputs use JSON documents in the engine's
//!   canonical formats; single values use a tagged encoding:
//!   `null` (missing), `{"string": s}`, `{"integer": i}`, `{"decimal": d}`,
//!   `{"boolean": b}`, `{"date": s}`, `{"code": c}`, `{"vector": [...]}`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use libc::c_char;

use harmonizer::engine::{self, ErrorPolicy, HarmonizationJob, JobOptions, ReplayLog};
use harmonizer::io::{
    read_data_from_str, read_dictionary_from_str, write_data_to_string, write_dictionary_to_string,
    CanonicalWriterConfig,
};
use harmonizer::model::{DataDictionary, DataFile};
use harmonizer::rules::{
    deserialize_rule, rule_from_json, serialize_rule, validate_rule, ElementRef,
    HarmonizationRule,
};
use harmonizer::store::RuleStore;
use harmonizer::values::Value;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmzStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A document could not be parsed.
    Parse = 3,
    /// A document parsed but violates its schema or contract.
    Invalid = 4,
    /// Reading or writing backing storage failed.
    Storage = 5,
    /// The requested item does not exist.
    NotFound = 6,
    /// A job was mis-configured or data failed to transform.
    Job = 7,
    /// An internal panic was caught at the boundary.
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    let stored = CString::new(message.replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message describing the calling thread's most recent failure, or NULL.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn hmz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Engine version as a static string; do not free.
#[no_mangle]
pub extern "C" fn hmz_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a `hmz_` function that
/// transfers string ownership, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hmz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Handles
// ---------------------------------------------------------------------------

pub struct HmzDictionary {
    inner: Arc<DataDictionary>,
}

pub struct HmzRule {
    inner: HarmonizationRule,
}

pub struct HmzDataFile {
    inner: DataFile,
}

pub struct HmzStore {
    inner: RuleStore,
}

unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, HmzStatus> {
    if ptr.is_null() {
        set_error(format!("{what} must not be NULL"));
        return Err(HmzStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        HmzStatus::InvalidUtf8
    })
}

unsafe fn handle_arg<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, HmzStatus> {
    if ptr.is_null() {
        set_error(format!("{what} must not be NULL"));
        return Err(HmzStatus::NullArgument);
    }
    Ok(&*ptr)
}

fn out_string(text: String) -> *mut c_char {
    match CString::new(text) {
        Ok(s) => s.into_raw(),
        Err(_) => {
            set_error("output contained an interior NUL byte");
            std::ptr::null_mut()
        }
    }
}

/// Run `body`, converting panics into a NULL/err result with a message.
fn guard<T, F: FnOnce() -> Result<T, HmzStatus>>(fallback: T, body: F) -> (T, HmzStatus) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => (value, HmzStatus::Ok),
        Ok(Err(status)) => (fallback, status),
        Err(_) => {
            set_error("internal panic at the FFI boundary");
            (fallback, HmzStatus::Panic)
        }
    }
}

fn guard_ptr<T, F: FnOnce() -> Result<*mut T, HmzStatus>>(body: F) -> *mut T {
    guard(std::ptr::null_mut(), body).0
}

// ---------------------------------------------------------------------------
// Dictionaries
// ---------------------------------------------------------------------------

/// Parse a dictionary JSON document. Returns NULL on failure.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmz_dictionary_parse(json: *const c_char) -> *mut HmzDictionary {
    guard_ptr(|| {
        clear_error();
        let text = str_arg(json, "json")?;
        let dict = read_dictionary_from_str(text, "dictionary").map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Parse
        })?;
        Ok(Box::into_raw(Box::new(HmzDictionary {
            inner: Arc::new(dict),
        })))
    })
}

/// Canonical JSON text of a dictionary.
///
/// # Safety
/// `dictionary` must be a live handle from `hmz_dictionary_parse`.
#[no_mangle]
pub unsafe extern "C" fn hmz_dictionary_to_json(dictionary: *const HmzDictionary) -> *mut c_char {
    guard_ptr(|| {
        clear_error();
        let handle = handle_arg(dictionary, "dictionary")?;
        Ok(out_string(write_dictionary_to_string(&handle.inner)))
    })
}

/// # Safety
/// `dictionary` must be a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hmz_dictionary_free(dictionary: *mut HmzDictionary) {
    if !dictionary.is_null() {
        drop(Box::from_raw(dictionary));
    }
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

/// Parse a single-rule JSON document. Returns NULL on failure.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmz_rule_parse(json: *const c_char) -> *mut HmzRule {
    guard_ptr(|| {
        clear_error();
        let text = str_arg(json, "json")?;
        let rule = deserialize_rule(text).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Parse
        })?;
        Ok(Box::into_raw(Box::new(HmzRule { inner: rule })))
    })
}

/// Canonical serialization of a rule.
///
/// # Safety
/// `rule` must be a live handle from `hmz_rule_parse`.
#[no_mangle]
pub unsafe extern "C" fn hmz_rule_serialize(rule: *const HmzRule) -> *mut c_char {
    guard_ptr(|| {
        clear_error();
        let handle = handle_arg(rule, "rule")?;
        Ok(out_string(serialize_rule(&handle.inner)))
    })
}

/// Validate a rule against dictionaries. Writes a JSON report
/// `{"valid": bool, "violations": [string]}` to `out_report`.
///
/// # Safety
/// `rule` and every entry of `dictionaries[0..n_dictionaries]` must be live
/// handles; `out_report` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hmz_rule_validate(
    rule: *const HmzRule,
    dictionaries: *const *const HmzDictionary,
    n_dictionaries: usize,
    out_report: *mut *mut c_char,
) -> HmzStatus {
    guard((), || {
        clear_error();
        let rule = handle_arg(rule, "rule")?;
        if out_report.is_null() {
            set_error("out_report must not be NULL");
            return Err(HmzStatus::NullArgument);
        }
        let mut dicts = Vec::with_capacity(n_dictionaries);
        if n_dictionaries > 0 {
            if dictionaries.is_null() {
                set_error("dictionaries must not be NULL");
                return Err(HmzStatus::NullArgument);
            }
            for i in 0..n_dictionaries {
                let handle = handle_arg(*dictionaries.add(i), "dictionary")?;
                dicts.push(Arc::clone(&handle.inner));
            }
        }
        let violations = validate_rule(&rule.inner, &dicts);
        let report = serde_json::json!({
            "valid": violations.is_empty(),
            "violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        });
        *out_report = out_string(report.to_string());
        Ok(())
    })
    .1
}

/// Apply a rule to one tagged-JSON value; returns the result in the same
/// encoding, or NULL with a data error.
///
/// # Safety
/// `rule` must be a live handle; `value_json` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmz_rule_apply_json(
    rule: *const HmzRule,
    value_json: *const c_char,
) -> *mut c_char {
    guard_ptr(|| {
        clear_error();
        let rule = handle_arg(rule, "rule")?;
        let text = str_arg(value_json, "value_json")?;
        let parsed: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            set_error(format!("value: {e}"));
            HmzStatus::Parse
        })?;
        let value = value_from_json(&parsed).map_err(|e| {
            set_error(e);
            HmzStatus::Invalid
        })?;
        let result = rule.inner.apply(&value).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Job
        })?;
        Ok(out_string(value_to_json(&result).to_string()))
    })
}

/// # Safety
/// `rule` must be a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hmz_rule_free(rule: *mut HmzRule) {
    if !rule.is_null() {
        drop(Box::from_raw(rule));
    }
}

// ---------------------------------------------------------------------------
// Data files
// ---------------------------------------------------------------------------

/// Parse CSV text against a dictionary into a data file handle.
///
/// # Safety
/// `name` and `csv` must be valid NUL-terminated strings; `dictionary` a
/// live handle.
#[no_mangle]
pub unsafe extern "C" fn hmz_data_file_read_csv(
    name: *const c_char,
    csv: *const c_char,
    dictionary: *const HmzDictionary,
) -> *mut HmzDataFile {
    guard_ptr(|| {
        clear_error();
        let name = str_arg(name, "name")?;
        let csv = str_arg(csv, "csv")?;
        let dictionary = handle_arg(dictionary, "dictionary")?;
        let file = read_data_from_str(name, csv, &dictionary.inner, name).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Parse
        })?;
        Ok(Box::into_raw(Box::new(HmzDataFile { inner: file })))
    })
}

/// Canonical CSV bytes of a data file.
///
/// # Safety
/// `file` must be a live handle from `hmz_data_file_read_csv`.
#[no_mangle]
pub unsafe extern "C" fn hmz_data_file_write_csv(file: *const HmzDataFile) -> *mut c_char {
    guard_ptr(|| {
        clear_error();
        let file = handle_arg(file, "file")?;
        let text = write_data_to_string(&file.inner, &CanonicalWriterConfig::default())
            .map_err(|e| {
                set_error(e.to_string());
                HmzStatus::Invalid
            })?;
        Ok(out_string(text))
    })
}

/// Number of records in a data file; 0 with an error set on a NULL handle.
///
/// # Safety
/// `file` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hmz_data_file_row_count(file: *const HmzDataFile) -> usize {
    guard(0, || {
        clear_error();
        let file = handle_arg(file, "file")?;
        Ok(file.inner.row_count())
    })
    .0
}

/// # Safety
/// `file` must be a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hmz_data_file_free(file: *mut HmzDataFile) {
    if !file.is_null() {
        drop(Box::from_raw(file));
    }
}

// ---------------------------------------------------------------------------
// Rule store
// ---------------------------------------------------------------------------

/// Open (creating if needed) a rule store rooted at a directory.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmz_store_open(path: *const c_char) -> *mut HmzStore {
    guard_ptr(|| {
        clear_error();
        let path = str_arg(path, "path")?;
        let store = RuleStore::open(PathBuf::from(path)).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Storage
        })?;
        Ok(Box::into_raw(Box::new(HmzStore { inner: store })))
    })
}

/// Persist a rule; `out_overwrote` (optional) reports whether an earlier
/// rule for the same source/target pair was replaced.
///
/// # Safety
/// `store` must be a live mutable handle and `rule` a live handle;
/// `out_overwrote` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn hmz_store_put(
    store: *mut HmzStore,
    rule: *const HmzRule,
    out_overwrote: *mut bool,
) -> HmzStatus {
    guard((), || {
        clear_error();
        if store.is_null() {
            set_error("store must not be NULL");
            return Err(HmzStatus::NullArgument);
        }
        let rule = handle_arg(rule, "rule")?;
        let outcome = (*store).inner.put(&rule.inner).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Storage
        })?;
        if !out_overwrote.is_null() {
            *out_overwrote = outcome.overwrote;
        }
        Ok(())
    })
    .1
}

/// Fetch the stored rule for a (source, target) element pair; NULL with
/// `NotFound` when absent.
///
/// # Safety
/// `store` must be a live handle; the four name arguments valid strings.
#[no_mangle]
pub unsafe extern "C" fn hmz_store_get(
    store: *const HmzStore,
    source_dictionary: *const c_char,
    source_element: *const c_char,
    target_dictionary: *const c_char,
    target_element: *const c_char,
) -> *mut HmzRule {
    guard_ptr(|| {
        clear_error();
        let store = handle_arg(store, "store")?;
        let source = ElementRef::new(
            str_arg(source_dictionary, "source_dictionary")?,
            str_arg(source_element, "source_element")?,
        )
        .map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Invalid
        })?;
        let target = ElementRef::new(
            str_arg(target_dictionary, "target_dictionary")?,
            str_arg(target_element, "target_element")?,
        )
        .map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Invalid
        })?;
        match store.inner.get(&source, &target) {
            Ok(Some(rule)) => Ok(Box::into_raw(Box::new(HmzRule { inner: rule }))),
            Ok(None) => {
                set_error(format!("no rule stored for {source} -> {target}"));
                Err(HmzStatus::NotFound)
            }
            Err(e) => {
                set_error(e.to_string());
                Err(HmzStatus::Storage)
            }
        }
    })
}

/// # Safety
/// `store` must be a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hmz_store_free(store: *mut HmzStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

// ---------------------------------------------------------------------------
// Whole jobs
// ---------------------------------------------------------------------------

/// Run a harmonization job described by a JSON request:
///
/// ```json
/// {
///   "dictionaries": [<dictionary documents>],
///   "target": "<target dictionary name>",
///   "error_policy": "fail-fast" | "collect",
///   "inputs": [
///     {"name": "...", "csv": "...", "rules": [<rule documents>]}
///   ]
/// }
/// ```
///
/// On success returns `{"output_csv": ..., "log_ndjson": ..., "reports":
/// [...]}`; the CSV is in canonical form so replaying the log reproduces
/// it byte for byte.
///
/// # Safety
/// `request_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmz_run_job_json(request_json: *const c_char) -> *mut c_char {
    guard_ptr(|| {
        clear_error();
        let text = str_arg(request_json, "request_json")?;
        let request: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            set_error(format!("request: {e}"));
            HmzStatus::Parse
        })?;
        let job = job_from_request(&request)?;
        let output = engine::run_job(&job).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Job
        })?;
        let csv = write_data_to_string(&output.integrated, &output.writer_config)
            .map_err(|e| {
                set_error(e.to_string());
                HmzStatus::Invalid
            })?;
        let reports: Vec<serde_json::Value> = output
            .reports
            .iter()
            .map(|r| {
                serde_json::json!({
                    "dataset": r.dataset,
                    "rows": r.rows,
                    "rules_applied": r.rules_applied,
                    "dropped_columns": r.dropped_columns,
                    "cell_errors": r.cell_errors.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        let response = serde_json::json!({
            "output_csv": csv,
            "log_ndjson": output.log.to_ndjson(),
            "reports": reports,
        });
        Ok(out_string(response.to_string()))
    })
}

/// Replay a log against original data files:
///
/// ```json
/// {
///   "dictionaries": [<dictionary documents>],
///   "target": "<target dictionary name>",
///   "log_ndjson": "...",
///   "originals": [{"name": "...", "csv": "..."}]
/// }
/// ```
///
/// Returns `{"output_csv": ...}`, byte-identical to the original job's
/// output when given the same originals in the same order.
///
/// # Safety
/// `request_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmz_replay_json(request_json: *const c_char) -> *mut c_char {
    guard_ptr(|| {
        clear_error();
        let text = str_arg(request_json, "request_json")?;
        let request: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            set_error(format!("request: {e}"));
            HmzStatus::Parse
        })?;
        let (dictionaries, target) = dictionaries_from_request(&request)?;
        let log_text = request
            .get("log_ndjson")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                set_error("request needs a \"log_ndjson\" string");
                HmzStatus::Invalid
            })?;
        let log = ReplayLog::from_ndjson(log_text).map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Parse
        })?;
        let originals_json = request
            .get("originals")
            .and_then(|v| v.as_array())
            .ok_or_else(|| {
                set_error("request needs an \"originals\" array");
                HmzStatus::Invalid
            })?;
        let mut originals = Vec::with_capacity(originals_json.len());
        for entry in originals_json {
            originals.push(file_from_json(entry, &dictionaries)?);
        }
        let replayed = engine::replay(&log, &originals, &target, "integrated").map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Job
        })?;
        let csv = write_data_to_string(&replayed.integrated, &replayed.writer_config)
            .map_err(|e| {
                set_error(e.to_string());
                HmzStatus::Invalid
            })?;
        Ok(out_string(serde_json::json!({ "output_csv": csv }).to_string()))
    })
}

fn dictionaries_from_request(
    request: &serde_json::Value,
) -> Result<(Vec<Arc<DataDictionary>>, Arc<DataDictionary>), HmzStatus> {
    let raw = request
        .get("dictionaries")
        .and_then(|v| v.as_array())
        .ok_or_else(|| {
            set_error("request needs a \"dictionaries\" array");
            HmzStatus::Invalid
        })?;
    let mut dictionaries = Vec::with_capacity(raw.len());
    for doc in raw {
        let dict = read_dictionary_from_str(&doc.to_string(), "request").map_err(|e| {
            set_error(e.to_string());
            HmzStatus::Parse
        })?;
        dictionaries.push(Arc::new(dict));
    }
    let target_name = request
        .get("target")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            set_error("request needs a \"target\" dictionary name");
            HmzStatus::Invalid
        })?;
    let target = dictionaries
        .iter()
        .find(|d| d.name() == target_name)
        .cloned()
        .ok_or_else(|| {
            set_error(format!("target {target_name:?} is not among the dictionaries"));
            HmzStatus::NotFound
        })?;
    Ok((dictionaries, target))
}

fn file_from_json(
    entry: &serde_json::Value,
    dictionaries: &[Arc<DataDictionary>],
) -> Result<DataFile, HmzStatus> {
    let name = entry.get("name").and_then(|v| v.as_str()).ok_or_else(|| {
        set_error("each input needs a \"name\"");
        HmzStatus::Invalid
    })?;
    let csv = entry.get("csv").and_then(|v| v.as_str()).ok_or_else(|| {
        set_error(format!("input {name:?} needs a \"csv\" string"));
        HmzStatus::Invalid
    })?;
    let header = harmonizer::io::csv_header_from_str(csv, name).map_err(|e| {
        set_error(e.to_string());
        HmzStatus::Parse
    })?;
    let header_set: std::collections::BTreeSet<&str> =
        header.iter().map(|s| s.as_str()).collect();
    let matched: Vec<&Arc<DataDictionary>> = dictionaries
        .iter()
        .filter(|d| {
            let names: std::collections::BTreeSet<&str> =
                d.elements().iter().map(|e| e.name()).collect();
            names == header_set
        })
        .collect();
    let [dictionary] = matched.as_slice() else {
        set_error(format!(
            "input {name:?} matches {} dictionaries, expected exactly one",
            matched.len()
        ));
        return Err(HmzStatus::Invalid);
    };
    read_data_from_str(name, csv, dictionary, name).map_err(|e| {
        set_error(e.to_string());
        HmzStatus::Parse
    })
}

fn job_from_request(request: &serde_json::Value) -> Result<HarmonizationJob, HmzStatus> {
    let (dictionaries, target) = dictionaries_from_request(request)?;
    let policy = match request.get("error_policy").and_then(|v| v.as_str()) {
        None | Some("fail-fast") => ErrorPolicy::FailFast,
        Some("collect") => ErrorPolicy::Collect,
        Some(other) => {
            set_error(format!("unknown error policy {other:?}"));
            return Err(HmzStatus::Invalid);
        }
    };
    let inputs_json = request
        .get("inputs")
        .and_then(|v| v.as_array())
        .ok_or_else(|| {
            set_error("request needs an \"inputs\" array");
            HmzStatus::Invalid
        })?;
    let mut inputs = Vec::with_capacity(inputs_json.len());
    for entry in inputs_json {
        let file = file_from_json(entry, &dictionaries)?;
        let mut rules = Vec::new();
        if let Some(raw_rules) = entry.get("rules").and_then(|v| v.as_array()) {
            for raw in raw_rules {
                rules.push(rule_from_json(raw).map_err(|e| {
                    set_error(e.to_string());
                    HmzStatus::Parse
                })?);
            }
        }
        inputs.push((file, rules));
    }
    Ok(HarmonizationJob {
        inputs,
        target,
        options: JobOptions {
            error_policy: policy,
            output_name: Some("integrated".into()),
        },
    })
}

// ---------------------------------------------------------------------------
// Tagged value JSON
// ---------------------------------------------------------------------------

fn value_to_json(value: &Value) -> serde_json::Value {
    match value {
        Value::Missing => serde_json::Value::Null,
        Value::Text(s) => serde_json::json!({ "string": s }),
        Value::Integer(i) => serde_json::json!({ "integer": i }),
        Value::Decimal(d) => serde_json::json!({ "decimal": d }),
        Value::Boolean(b) => serde_json::json!({ "boolean": b }),
        Value::Date(s) => serde_json::json!({ "date": s }),
        Value::EnumCode(c) => serde_json::json!({ "code": c }),
        Value::Vector(items) => {
            serde_json::json!({ "vector": items.iter().map(value_to_json).collect::<Vec<_>>() })
        }
    }
}

fn value_from_json(value: &serde_json::Value) -> Result<Value, String> {
    if value.is_null() {
        return Ok(Value::Missing);
    }
    let object = value
        .as_object()
        .ok_or_else(|| format!("expected a tagged value object, got {value}"))?;
    if object.len() != 1 {
        return Err("tagged value must have exactly one key".into());
    }
    let (tag, inner) = object.iter().next().expect("one entry");
    match tag.as_str() {
        "string" => inner
            .as_str()
            .map(Value::text)
            .ok_or_else(|| "\"string\" takes a string".into()),
        "integer" => inner
            .as_i64()
            .map(Value::Integer)
            .ok_or_else(|| "\"integer\" takes an integer".into()),
        "decimal" => inner
            .as_f64()
            .map(Value::Decimal)
            .ok_or_else(|| "\"decimal\" takes a number".into()),
        "boolean" => inner
            .as_bool()
            .map(Value::Boolean)
            .ok_or_else(|| "\"boolean\" takes a boolean".into()),
        "date" => inner
            .as_str()
            .map(Value::date)
            .ok_or_else(|| "\"date\" takes a string".into()),
        "code" => inner
            .as_i64()
            .map(Value::EnumCode)
            .ok_or_else(|| "\"code\" takes an integer".into()),
        "vector" => {
            let items = inner
                .as_array()
                .ok_or_else(|| "\"vector\" takes an array".to_string())?;
            items
                .iter()
                .map(value_from_json)
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Vector)
        }
        other => Err(format!("unknown value tag {other:?}")),
    }
}
