//! Dynamic value universe and the static types used to validate
//! transformation chains.
//!
//! Every cell that flows through a primitive is a [`Value`]. The matching
//! static description is a [`ValueType`]; coded categorical answers carry
//! their allowed codes in a [`CodedValueSet`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Construction errors for types and coded sets.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValueError {
    #[error("coded value set must not be empty")]
    EmptyCodedSet,
    #[error("duplicate code {0} in coded value set")]
    DuplicateCode(i64),
    #[error("duplicate label {0:?} in coded value set")]
    DuplicateLabel(String),
    #[error("vector element type must be a scalar, got {0}")]
    NonScalarVectorElement(String),
}

// ---------------------------------------------------------------------------
// CodedValueSet
// ---------------------------------------------------------------------------

/// One allowed answer of a coded categorical element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedValue {
    pub code: i64,
    pub label: String,
}

/// Ordered set of (code, label) pairs; codes and labels are each unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CodedValue>", into = "Vec<CodedValue>")]
pub struct CodedValueSet {
    entries: Vec<CodedValue>,
}

impl CodedValueSet {
    pub fn new(entries: Vec<CodedValue>) -> Result<Self, ValueError> {
        if entries.is_empty() {
            return Err(ValueError::EmptyCodedSet);
        }
        let mut codes = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for entry in &entries {
            if !codes.insert(entry.code) {
                return Err(ValueError::DuplicateCode(entry.code));
            }
            if !labels.insert(entry.label.as_str()) {
                return Err(ValueError::DuplicateLabel(entry.label.clone()));
            }
        }
        Ok(Self { entries })
    }

    /// Convenience constructor from (code, label) pairs.
    pub fn from_pairs<L: Into<String>>(
        pairs: impl IntoIterator<Item = (i64, L)>,
    ) -> Result<Self, ValueError> {
        Self::new(
            pairs
                .into_iter()
                .map(|(code, label)| CodedValue { code, label: label.into() })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[CodedValue] {
        &self.entries
    }

    pub fn codes(&self) -> BTreeSet<i64> {
        self.entries.iter().map(|e| e.code).collect()
    }

    pub fn contains_code(&self, code: i64) -> bool {
        self.entries.iter().any(|e| e.code == code)
    }

    pub fn label_of(&self, code: i64) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.code == code)
            .map(|e| e.label.as_str())
    }

    pub fn code_of(&self, label: &str) -> Option<i64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.code)
    }
}

impl TryFrom<Vec<CodedValue>> for CodedValueSet {
    type Error = ValueError;

    fn try_from(entries: Vec<CodedValue>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<CodedValueSet> for Vec<CodedValue> {
    fn from(set: CodedValueSet) -> Self {
        set.entries
    }
}

// ---------------------------------------------------------------------------
// ValueType
// ---------------------------------------------------------------------------

/// Static type of a value.
///
/// `Enum` carries the coded set that identifies it. `Unknown` is the type of
/// the missing marker; it never appears in a data dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueType {
    String,
    Integer,
    Decimal,
    Boolean,
    Date,
    Enum(CodedValueSet),
    Vector(Box<ValueType>),
    Unknown,
}

impl ValueType {
    /// Vector of the given scalar element type.
    pub fn vector_of(element: ValueType) -> Result<Self, ValueError> {
        if !element.is_scalar() {
            return Err(ValueError::NonScalarVectorElement(element.to_string()));
        }
        Ok(ValueType::Vector(Box::new(element)))
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, ValueType::Vector(_) | ValueType::Unknown)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ValueType::Integer | ValueType::Decimal)
    }

    /// The coded set attached to this type, looking through one vector level.
    pub fn coded_set(&self) -> Option<&CodedValueSet> {
        match self {
            ValueType::Enum(set) => Some(set),
            ValueType::Vector(element) => element.coded_set(),
            _ => None,
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::String => write!(f, "string"),
            ValueType::Integer => write!(f, "integer"),
            ValueType::Decimal => write!(f, "decimal"),
            ValueType::Boolean => write!(f, "boolean"),
            ValueType::Date => write!(f, "date"),
            ValueType::Enum(_) => write!(f, "enum"),
            ValueType::Vector(element) => write!(f, "vector<{element}>"),
            ValueType::Unknown => write!(f, "unknown"),
        }
    }
}

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

/// A single dynamic value.
///
/// `Date` holds the textual form the value was ingested with; date
/// primitives parse and reformat that text. `Missing` is distinct from the
/// empty string and from zero and propagates unchanged through primitives.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Integer(i64),
    Decimal(f64),
    Boolean(bool),
    Date(String),
    EnumCode(i64),
    Vector(Vec<Value>),
    Missing,
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn date(s: impl Into<String>) -> Self {
        Value::Date(s.into())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Name of the variant, for error messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Text(_) => "string",
            Value::Integer(_) => "integer",
            Value::Decimal(_) => "decimal",
            Value::Boolean(_) => "boolean",
            Value::Date(_) => "date",
            Value::EnumCode(_) => "enum",
            Value::Vector(_) => "vector",
            Value::Missing => "missing",
        }
    }

    /// Numeric view of the value, widening integers.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Decimal(d) => Some(*d),
            _ => None,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Integer(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Decimal(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Boolean(v)
    }
}

impl fmt::Display for Value {
    /// Canonical scalar text form, used for CSV cells and messages.
    /// Missing renders as the empty string; the writer distinguishes it
    /// from empty text by quoting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write!(f, "{s}"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Decimal(d) => write!(f, "{}", render_decimal(*d)),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Date(s) => write!(f, "{s}"),
            Value::EnumCode(c) => write!(f, "{c}"),
            Value::Vector(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    match item {
                        // Strings inside vectors are JSON-quoted so commas
                        // and brackets in the content cannot split elements.
                        Value::Text(s) | Value::Date(s) => {
                            write!(f, "{}", serde_json::to_string(s).map_err(|_| fmt::Error)?)?
                        }
                        other => write!(f, "{other}")?,
                    }
                }
                write!(f, "]")
            }
            Value::Missing => Ok(()),
        }
    }
}

/// Shortest decimal text that re-parses to the same f64; negative zero is
/// normalized so equal values never render differently.
pub fn render_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{v}")
}

// ---------------------------------------------------------------------------
// type_of / conforms
// ---------------------------------------------------------------------------

/// Static type of a value's variant. Missing has no type and maps to
/// [`ValueType::Unknown`]. A bare enum code types as a singleton coded set
/// since its declaring set is not known without an element context.
pub fn type_of(value: &Value) -> ValueType {
    match value {
        Value::Text(_) => ValueType::String,
        Value::Integer(_) => ValueType::Integer,
        Value::Decimal(_) => ValueType::Decimal,
        Value::Boolean(_) => ValueType::Boolean,
        Value::Date(_) => ValueType::Date,
        Value::EnumCode(code) => ValueType::Enum(
            CodedValueSet::from_pairs([(*code, code.to_string())])
                .expect("singleton set is valid"),
        ),
        Value::Vector(items) => {
            let element = items
                .iter()
                .find(|item| !item.is_missing())
                .map(type_of)
                .unwrap_or(ValueType::Unknown);
            ValueType::Vector(Box::new(element))
        }
        Value::Missing => ValueType::Unknown,
    }
}

/// Whether `value` inhabits `ty`. Total: never fails.
///
/// Missing conforms to every type. For enum types the membership check uses
/// `codes` when given, falling back to the set carried by the type itself.
pub fn conforms(value: &Value, ty: &ValueType, codes: Option<&CodedValueSet>) -> bool {
    match (value, ty) {
        (Value::Missing, _) => true,
        (Value::Text(_), ValueType::String) => true,
        (Value::Integer(_), ValueType::Integer) => true,
        (Value::Decimal(_), ValueType::Decimal) => true,
        (Value::Boolean(_), ValueType::Boolean) => true,
        (Value::Date(_), ValueType::Date) => true,
        (Value::EnumCode(code), ValueType::Enum(set)) => {
            codes.unwrap_or(set).contains_code(*code)
        }
        (Value::Vector(items), ValueType::Vector(element)) => items
            .iter()
            .all(|item| conforms(item, element, codes)),
        _ => false,
    }
}
