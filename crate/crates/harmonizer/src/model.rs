//! Data representation model: variable, data element, data dictionary,
//! data file.
//!
//! A variable names an abstract concept ("age"); a data element is one
//! concrete implementation of it (prompt, response type, coded values); a
//! data dictionary aggregates data elements into a schema; a data file holds
//! records that conform to exactly one dictionary.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::values::{conforms, CodedValueSet, Value, ValueType};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("variable name must not be empty")]
    EmptyVariableName,
    #[error("data element name must not be empty")]
    EmptyElementName,
    #[error("dictionary name must not be empty")]
    EmptyDictionaryName,
    #[error("duplicate element name {0:?} in dictionary")]
    DuplicateElement(String),
    #[error("element {0:?} not found in dictionary {1:?}")]
    ElementNotFound(String, String),
    #[error("element {name:?}: {reason}")]
    InvalidElement { name: String, reason: String },
    #[error("row {row} has {actual} cells, dictionary {dictionary:?} defines {expected} elements")]
    RowWidth {
        row: usize,
        actual: usize,
        expected: usize,
        dictionary: String,
    },
}

// ---------------------------------------------------------------------------
// Variable
// ---------------------------------------------------------------------------

/// Abstract concept for which values are recorded, e.g. "age".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyVariableName);
        }
        Ok(Variable(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// DataElement
// ---------------------------------------------------------------------------

/// Concrete implementation of a variable: column name, prompt, response
/// type, and (for coded answers) the allowed coded values.
///
/// The coded set lives inside the `Enum` response type, so "enum if and
/// only if codes are present" holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataElement {
    name: String,
    variable: Variable,
    prompt: String,
    response_type: ValueType,
}

impl DataElement {
    pub fn new(
        name: impl Into<String>,
        variable: Variable,
        prompt: impl Into<String>,
        response_type: ValueType,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyElementName);
        }
        if matches!(response_type, ValueType::Unknown) {
            return Err(ModelError::InvalidElement {
                name,
                reason: "response type must be a concrete type".into(),
            });
        }
        Ok(Self {
            name,
            variable,
            prompt: prompt.into(),
            response_type,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variable(&self) -> &Variable {
        &self.variable
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn response_type(&self) -> &ValueType {
        &self.response_type
    }

    /// Coded values, present exactly when the response type is enum
    /// (or a vector of enum).
    pub fn codes(&self) -> Option<&CodedValueSet> {
        self.response_type.coded_set()
    }
}

// ---------------------------------------------------------------------------
// DataDictionary
// ---------------------------------------------------------------------------

/// Ordered aggregate of data elements; the schema of a data file.
/// Element order defines the canonical column order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDictionary {
    name: String,
    elements: Vec<DataElement>,
}

impl DataDictionary {
    pub fn new(name: impl Into<String>, elements: Vec<DataElement>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyDictionaryName);
        }
        for (i, element) in elements.iter().enumerate() {
            if elements[..i].iter().any(|e| e.name == element.name) {
                return Err(ModelError::DuplicateElement(element.name.clone()));
            }
        }
        Ok(Self { name, elements })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[DataElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Look up an element by its exact name.
    pub fn element_by_name(&self, name: &str) -> Result<&DataElement, ModelError> {
        self.elements
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| ModelError::ElementNotFound(name.to_string(), self.name.clone()))
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }
}

// ---------------------------------------------------------------------------
// DataFile
// ---------------------------------------------------------------------------

/// A table of records conforming to exactly one data dictionary.
/// Rows are ordered; each row holds one value per element, in element order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    name: String,
    dictionary: Arc<DataDictionary>,
    rows: Vec<Vec<Value>>,
}

impl DataFile {
    /// Build a data file, checking only row width. Cell conformance is
    /// reported by [`validate_file`], not enforced here, so that files with
    /// out-of-set codes can be loaded and diagnosed.
    pub fn new(
        name: impl Into<String>,
        dictionary: Arc<DataDictionary>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Self, ModelError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dictionary.len() {
                return Err(ModelError::RowWidth {
                    row: i + 1,
                    actual: row.len(),
                    expected: dictionary.len(),
                    dictionary: dictionary.name().to_string(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            dictionary,
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dictionary(&self) -> &Arc<DataDictionary> {
        &self.dictionary
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Cell at (row, column), both zero-based.
    pub fn cell(&self, row: usize, column: usize) -> Option<&Value> {
        self.rows.get(row).and_then(|r| r.get(column))
    }
}

// ---------------------------------------------------------------------------
// validate_file
// ---------------------------------------------------------------------------

/// One cell that does not conform to its element.
#[derive(Debug, Clone, PartialEq)]
pub struct CellViolation {
    /// 1-based record index.
    pub row: usize,
    pub element: String,
    pub reason: String,
}

impl fmt::Display for CellViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}, element {:?}: {}", self.row, self.element, self.reason)
    }
}

/// Check every cell of `file` against its dictionary. The report is ordered
/// by (row, column) and empty exactly when the file conforms. Violations are
/// data, not errors.
pub fn validate_file(file: &DataFile) -> Vec<CellViolation> {
    let mut violations = Vec::new();
    let elements = file.dictionary().elements();
    for (row_idx, row) in file.rows().iter().enumerate() {
        for (col_idx, value) in row.iter().enumerate() {
            let element = &elements[col_idx];
            if !conforms(value, element.response_type(), element.codes()) {
                let reason = match (value, element.response_type()) {
                    (Value::EnumCode(code), ValueType::Enum(_)) => {
                        format!("code {code} is not in the coded value set")
                    }
                    (v, ty) => format!("expected {ty}, got {}", v.kind()),
                };
                violations.push(CellViolation {
                    row: row_idx + 1,
                    element: element.name().to_string(),
                    reason,
                });
            }
        }
    }
    violations
}
