//! File ingestion and canonical output.
//!
//! Data files are CSV with a header row, comma separators, double-quote
//! escaping, UTF-8 without BOM. The writer is canonical: LF line endings,
//! minimal quoting, missing rendered as an empty unquoted field (an empty
//! *quoted* field is empty text, keeping the two distinct), decimals in
//! their shortest value-preserving form unless a column's precision is
//! pinned. Writing the same data file twice yields identical bytes, which
//! is what makes replay verification byte-exact.
//!
//! Data dictionaries are JSON documents; reading and writing round-trips
//! canonical documents bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CellViolation, DataDictionary, DataElement, DataFile, ModelError, Variable};
use crate::values::{render_decimal, CodedValue, CodedValueSet, Value, ValueType};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: header does not match dictionary {dictionary:?}: missing columns {missing:?}, unknown columns {unknown:?}")]
    HeaderMismatch {
        path: String,
        dictionary: String,
        missing: Vec<String>,
        unknown: Vec<String>,
    },
    #[error("{path}: row {row}, column {column:?}: {reason}")]
    CellParseError {
        path: String,
        row: usize,
        column: String,
        reason: String,
    },
    #[error("{path}: {reason}")]
    ParseError { path: String, reason: String },
    #[error("{path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("file does not conform to its dictionary: {0}")]
    NonConforming(CellViolation),
    #[error("{path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn storage(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> IoError {
    let path = path.into();
    move |source| IoError::Storage { path, source }
}

// ---------------------------------------------------------------------------
// Canonical writer
// ---------------------------------------------------------------------------

/// Rendering options for the canonical writer. Columns listed in
/// `column_precision` print decimals with exactly that many places (the
/// engine pins them from a chain's final Round); all other decimals use the
/// shortest value-preserving form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CanonicalWriterConfig {
    pub column_precision: std::collections::BTreeMap<String, u32>,
    /// Render enum cells as their labels instead of integer codes.
    /// Export mode for human inspection; excluded from replay comparison.
    pub labels: bool,
}

fn needs_quoting(text: &str) -> bool {
    text.contains(',') || text.contains('"') || text.contains('\n') || text.contains('\r')
}

fn push_field(out: &mut String, text: &str, force_quotes: bool) {
    if force_quotes || needs_quoting(text) {
        out.push('"');
        for c in text.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(text);
    }
}

fn render_cell(
    value: &Value,
    element: &DataElement,
    config: &CanonicalWriterConfig,
) -> Result<(String, bool), IoError> {
    let non_conforming = || {
        IoError::NonConforming(CellViolation {
            row: 0,
            element: element.name().to_string(),
            reason: format!("cannot render {} cell", value.kind()),
        })
    };
    let text = match value {
        Value::Missing => return Ok((String::new(), false)),
        // Quote empty text so it stays distinct from missing.
        Value::Text(s) => return Ok((s.clone(), s.is_empty())),
        Value::Decimal(d) => match config.column_precision.get(element.name()) {
            Some(p) => format!("{d:.prec$}", prec = *p as usize),
            None => render_decimal(*d),
        },
        Value::EnumCode(code) if config.labels => element
            .codes()
            .and_then(|set| set.label_of(*code))
            .map(str::to_string)
            .ok_or_else(non_conforming)?,
        other => other.to_string(),
    };
    Ok((text, false))
}

/// Render a data file to canonical CSV bytes.
pub fn write_data_to_string(
    file: &DataFile,
    config: &CanonicalWriterConfig,
) -> Result<String, IoError> {
    if let Some(violation) = crate::model::validate_file(file).into_iter().next() {
        return Err(IoError::NonConforming(violation));
    }
    let elements = file.dictionary().elements();
    let mut out = String::new();
    for (i, element) in elements.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_field(&mut out, element.name(), false);
    }
    out.push('\n');
    for row in file.rows() {
        for (i, (value, element)) in row.iter().zip(elements).enumerate() {
            if i > 0 {
                out.push(',');
            }
            let (text, force_quotes) = render_cell(value, element, config)?;
            push_field(&mut out, &text, force_quotes);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write a data file to `path` in canonical form.
pub fn write_data_file(
    file: &DataFile,
    config: &CanonicalWriterConfig,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let text = write_data_to_string(file, config)?;
    fs::write(path.as_ref(), text).map_err(storage(path.as_ref()))
}

// ---------------------------------------------------------------------------
// CSV parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct RawField {
    text: String,
    quoted: bool,
}

/// RFC 4180 tokenizer. Returns records of fields with their quoting
/// preserved; accepts LF and CRLF record breaks and quoted line breaks.
fn parse_csv(text: &str, path: &str) -> Result<Vec<Vec<RawField>>, IoError> {
    let mut records = Vec::new();
    let mut record: Vec<RawField> = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    let mut line = 1usize;

    let flush_field = |record: &mut Vec<RawField>, field: &mut String, quoted: &mut bool| {
        record.push(RawField {
            text: std::mem::take(field),
            quoted: std::mem::take(quoted),
        });
    };

    while let Some(c) = chars.next() {
        if in_quotes {
            match c {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                }
                '\n' => {
                    line += 1;
                    field.push(c);
                }
                _ => field.push(c),
            }
            continue;
        }
        match c {
            '"' => {
                if !field.is_empty() {
                    return Err(IoError::ParseError {
                        path: path.to_string(),
                        reason: format!("line {line}: quote inside unquoted field"),
                    });
                }
                in_quotes = true;
                quoted = true;
            }
            ',' => flush_field(&mut record, &mut field, &mut quoted),
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                    line += 1;
                    flush_field(&mut record, &mut field, &mut quoted);
                    records.push(std::mem::take(&mut record));
                } else {
                    return Err(IoError::ParseError {
                        path: path.to_string(),
                        reason: format!("line {line}: bare carriage return"),
                    });
                }
            }
            '\n' => {
                line += 1;
                flush_field(&mut record, &mut field, &mut quoted);
                records.push(std::mem::take(&mut record));
            }
            _ => field.push(c),
        }
    }
    if in_quotes {
        return Err(IoError::ParseError {
            path: path.to_string(),
            reason: "unterminated quoted field".to_string(),
        });
    }
    // Input not ending in a newline still yields its last record.
    if !field.is_empty() || quoted || !record.is_empty() {
        flush_field(&mut record, &mut field, &mut quoted);
        records.push(record);
    }
    Ok(records)
}

fn parse_scalar(
    field: &RawField,
    ty: &ValueType,
) -> Result<Value, String> {
    if field.text.is_empty() && !field.quoted {
        return Ok(Value::Missing);
    }
    let text = field.text.as_str();
    match ty {
        ValueType::String => Ok(Value::Text(text.to_string())),
        ValueType::Date => Ok(Value::Date(text.to_string())),
        ValueType::Integer => text
            .trim()
            .parse::<i64>()
            .map(Value::Integer)
            .map_err(|_| format!("expected an integer, got {text:?}")),
        ValueType::Decimal => text
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Value::Decimal)
            .ok_or_else(|| format!("expected a decimal number, got {text:?}")),
        ValueType::Boolean => {
            let t = text.trim();
            if t.eq_ignore_ascii_case("true") {
                Ok(Value::Boolean(true))
            } else if t.eq_ignore_ascii_case("false") {
                Ok(Value::Boolean(false))
            } else {
                Err(format!("expected true or false, got {text:?}"))
            }
        }
        ValueType::Enum(_) => text
            .trim()
            .parse::<i64>()
            .map(Value::EnumCode)
            .map_err(|_| format!("expected an integer code, got {text:?}")),
        ValueType::Vector(element) => parse_vector(text, element),
        ValueType::Unknown => Err("element has no concrete type".to_string()),
    }
}

/// Parse the bracketed comma-separated vector form, e.g. `[0,0,1,0]`.
/// String elements are JSON-quoted.
fn parse_vector(text: &str, element: &ValueType) -> Result<Value, String> {
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("expected a [..] vector, got {text:?}"))?;
    if inner.trim().is_empty() {
        return Ok(Value::Vector(Vec::new()));
    }
    let mut items = Vec::new();
    let mut current = String::new();
    let mut in_string = false;
    let mut escaped = false;
    for c in inner.chars() {
        if in_string {
            current.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                current.push(c);
            }
            ',' => items.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    if in_string {
        return Err(format!("unterminated string in vector {text:?}"));
    }
    items.push(current);

    let mut values = Vec::with_capacity(items.len());
    for item in items {
        let value = match element {
            ValueType::String | ValueType::Date => {
                let decoded: String = serde_json::from_str(item.trim())
                    .map_err(|_| format!("bad string element {item:?} in vector"))?;
                match element {
                    ValueType::String => Value::Text(decoded),
                    _ => Value::Date(decoded),
                }
            }
            other => {
                let raw = RawField {
                    text: item.trim().to_string(),
                    quoted: false,
                };
                if raw.text.is_empty() {
                    return Err(format!("empty element in vector {text:?}"));
                }
                parse_scalar(&raw, other)?
            }
        };
        values.push(value);
    }
    Ok(Value::Vector(values))
}

/// Column names of a CSV document's header row.
pub fn csv_header_from_str(text: &str, path: &str) -> Result<Vec<String>, IoError> {
    let records = parse_csv(text, path)?;
    records
        .first()
        .map(|header| header.iter().map(|f| f.text.clone()).collect())
        .ok_or_else(|| IoError::ParseError {
            path: path.to_string(),
            reason: "empty file: a header row is required".to_string(),
        })
}

/// Parse CSV text into a data file named `name` conforming to `dictionary`.
/// Header names must match the dictionary's element names exactly, in any
/// order; cells are parsed to each element's response type; an empty
/// unquoted field is the missing marker.
pub fn read_data_from_str(
    name: impl Into<String>,
    text: &str,
    dictionary: &Arc<DataDictionary>,
    path: &str,
) -> Result<DataFile, IoError> {
    let records = parse_csv(text, path)?;
    let Some((header, body)) = records.split_first() else {
        return Err(IoError::ParseError {
            path: path.to_string(),
            reason: "empty file: a header row is required".to_string(),
        });
    };

    let header_names: Vec<&str> = header.iter().map(|f| f.text.as_str()).collect();
    let mut missing: Vec<String> = dictionary
        .elements()
        .iter()
        .map(|e| e.name().to_string())
        .filter(|n| !header_names.contains(&n.as_str()))
        .collect();
    let unknown: Vec<String> = header_names
        .iter()
        .filter(|n| dictionary.position_of(n).is_none())
        .map(|n| n.to_string())
        .collect();
    for (i, n) in header_names.iter().enumerate() {
        if header_names[..i].contains(n) {
            return Err(IoError::ParseError {
                path: path.to_string(),
                reason: format!("duplicate column {n:?} in header"),
            });
        }
    }
    if !missing.is_empty() || !unknown.is_empty() {
        missing.sort();
        return Err(IoError::HeaderMismatch {
            path: path.to_string(),
            dictionary: dictionary.name().to_string(),
            missing,
            unknown,
        });
    }

    // Column i of the file feeds dictionary position `positions[i]`.
    let positions: Vec<usize> = header_names
        .iter()
        .map(|n| dictionary.position_of(n).expect("checked above"))
        .collect();

    let mut rows = Vec::with_capacity(body.len());
    for (row_idx, record) in body.iter().enumerate() {
        if record.len() != header.len() {
            return Err(IoError::ParseError {
                path: path.to_string(),
                reason: format!(
                    "row {}: {} fields, header has {}",
                    row_idx + 1,
                    record.len(),
                    header.len()
                ),
            });
        }
        let mut row: Vec<Value> = vec![Value::Missing; dictionary.len()];
        for (field, &position) in record.iter().zip(&positions) {
            let element = &dictionary.elements()[position];
            row[position] = parse_scalar(field, element.response_type()).map_err(|reason| {
                IoError::CellParseError {
                    path: path.to_string(),
                    row: row_idx + 1,
                    column: element.name().to_string(),
                    reason,
                }
            })?;
        }
        rows.push(row);
    }

    DataFile::new(name, Arc::clone(dictionary), rows).map_err(|e| IoError::ParseError {
        path: path.to_string(),
        reason: e.to_string(),
    })
}

/// Read a CSV data file from `path`. The file's dataset name is the path's
/// file stem.
pub fn read_data_file(
    path: impl AsRef<Path>,
    dictionary: &Arc<DataDictionary>,
) -> Result<DataFile, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(storage(path))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_data_from_str(name, &text, dictionary, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Dictionary JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ElementDoc {
    name: String,
    variable: String,
    prompt: String,
    #[serde(rename = "type")]
    type_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    codes: Option<Vec<CodedValue>>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryDoc {
    name: String,
    elements: Vec<ElementDoc>,
}

/// Parse a type name: a scalar name or `vector<scalar>`. Enum types receive
/// their coded set from the element's `codes` key.
fn parse_type_name(
    text: &str,
    codes: Option<CodedValueSet>,
) -> Result<ValueType, String> {
    if let Some(inner) = text.strip_prefix("vector<").and_then(|t| t.strip_suffix('>')) {
        let element = parse_type_name(inner, codes)?;
        return ValueType::vector_of(element).map_err(|e| e.to_string());
    }
    let ty = match text {
        "string" => ValueType::String,
        "integer" => ValueType::Integer,
        "decimal" => ValueType::Decimal,
        "boolean" => ValueType::Boolean,
        "date" => ValueType::Date,
        "enum" => {
            let codes = codes.ok_or_else(|| "enum element requires \"codes\"".to_string())?;
            return Ok(ValueType::Enum(codes));
        }
        other => return Err(format!("unknown type {other:?}")),
    };
    if codes.is_some() {
        return Err(format!("type {text:?} does not take \"codes\""));
    }
    Ok(ty)
}

fn type_name_of(ty: &ValueType) -> String {
    ty.to_string()
}

/// Parse a dictionary document.
pub fn read_dictionary_from_str(text: &str, path: &str) -> Result<DataDictionary, IoError> {
    let doc: DictionaryDoc =
        serde_json::from_str(text).map_err(|e| IoError::ParseError {
            path: path.to_string(),
            reason: e.to_string(),
        })?;
    let schema_err = |reason: String| IoError::SchemaError {
        path: path.to_string(),
        reason,
    };
    let mut elements = Vec::with_capacity(doc.elements.len());
    for (index, element) in doc.elements.into_iter().enumerate() {
        let at = format!("element {} ({:?})", index + 1, element.name);
        let codes = match element.codes {
            Some(entries) => Some(
                CodedValueSet::new(entries)
                    .map_err(|e| schema_err(format!("{at}: {e}")))?,
            ),
            None => None,
        };
        let response_type = parse_type_name(&element.type_name, codes)
            .map_err(|reason| schema_err(format!("{at}: {reason}")))?;
        let variable = Variable::new(element.variable)
            .map_err(|e| schema_err(format!("{at}: {e}")))?;
        elements.push(
            DataElement::new(element.name, variable, element.prompt, response_type)
                .map_err(|e| schema_err(format!("{at}: {e}")))?,
        );
    }
    DataDictionary::new(doc.name, elements).map_err(|e: ModelError| schema_err(e.to_string()))
}

/// Read a dictionary document from `path`.
pub fn read_dictionary(path: impl AsRef<Path>) -> Result<DataDictionary, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(storage(path))?;
    read_dictionary_from_str(&text, &path.display().to_string())
}

/// Canonical JSON text of a dictionary: fixed key order, two-space indent,
/// trailing newline. Reading it back yields an equal dictionary, and
/// re-writing that yields identical bytes.
pub fn write_dictionary_to_string(dictionary: &DataDictionary) -> String {
    let doc = DictionaryDoc {
        name: dictionary.name().to_string(),
        elements: dictionary
            .elements()
            .iter()
            .map(|e| ElementDoc {
                name: e.name().to_string(),
                variable: e.variable().name().to_string(),
                prompt: e.prompt().to_string(),
                type_name: type_name_of(e.response_type()),
                codes: e.codes().map(|set| set.entries().to_vec()),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("dictionary serialization");
    text.push('\n');
    text
}

/// Write a dictionary document to `path`.
pub fn write_dictionary(dictionary: &DataDictionary, path: impl AsRef<Path>) -> Result<(), IoError> {
    fs::write(path.as_ref(), write_dictionary_to_string(dictionary))
        .map_err(storage(path.as_ref()))
}

// ---------------------------------------------------------------------------
// Small helpers shared by CLI and engine
// ---------------------------------------------------------------------------

/// Hex SHA-256 of a byte string, used for content addressing and for
/// checksum comparisons in verification.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}
