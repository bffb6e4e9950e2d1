//! Harmonization rules: a source data element, a target data element, and
//! an ordered list of parameterized primitives that maps values of the
//! source into values of the target.
//!
//! Rules are immutable plain data. Serialization is canonical: fixed key
//! order, two-space indentation, newline-terminated, so stored rules and
//! replay logs are byte-comparable.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DataDictionary;
use crate::primitives::{FragmentError, PrimitiveError, PrimitiveKind, PrimitiveSpec, SlotType};
use crate::values::{Value, ValueType};

// ---------------------------------------------------------------------------
// ElementRef
// ---------------------------------------------------------------------------

/// Name of a data element scoped by the name of its dictionary, which keeps
/// identically named elements from different studies apart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementRef {
    pub dictionary: String,
    pub element: String,
}

impl ElementRef {
    pub fn new(dictionary: impl Into<String>, element: impl Into<String>) -> Result<Self, RuleError> {
        let r = Self {
            dictionary: dictionary.into(),
            element: element.into(),
        };
        if r.dictionary.is_empty() || r.element.is_empty() {
            return Err(RuleError::EmptyElementRef);
        }
        Ok(r)
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.dictionary, self.element)
    }
}

// ---------------------------------------------------------------------------
// HarmonizationRule
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("element reference needs a dictionary name and an element name")]
    EmptyElementRef,
    #[error("a rule needs at least one operation")]
    NoOperations,
}

/// One-to-one mapping between a source and a target data element,
/// implemented by a non-empty chain of primitives applied left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonizationRule {
    source: ElementRef,
    target: ElementRef,
    operations: Vec<PrimitiveSpec>,
}

impl HarmonizationRule {
    pub fn new(
        source: ElementRef,
        target: ElementRef,
        operations: Vec<PrimitiveSpec>,
    ) -> Result<Self, RuleError> {
        if operations.is_empty() {
            return Err(RuleError::NoOperations);
        }
        Ok(Self {
            source,
            target,
            operations,
        })
    }

    pub fn source(&self) -> &ElementRef {
        &self.source
    }

    pub fn target(&self) -> &ElementRef {
        &self.target
    }

    pub fn operations(&self) -> &[PrimitiveSpec] {
        &self.operations
    }

    /// Printed precision pinned by the chain: set when the last primitive
    /// is a Round.
    pub fn final_round_precision(&self) -> Option<u32> {
        self.operations.last().and_then(|op| op.round_precision())
    }

    pub fn apply(&self, value: &Value) -> Result<Value, RuleApplyError> {
        compose_apply(self, value)
    }
}

/// Error from one primitive in a chain, annotated with the 1-based index of
/// the operation that raised it.
#[derive(Debug, Error, PartialEq)]
#[error("operation {op_index} ({primitive}): {error}")]
pub struct RuleApplyError {
    pub op_index: usize,
    pub primitive: PrimitiveKind,
    #[source]
    pub error: PrimitiveError,
}

/// Apply the rule's operations left to right, threading each output into
/// the next input. Missing propagates through the whole chain.
pub fn compose_apply(rule: &HarmonizationRule, value: &Value) -> Result<Value, RuleApplyError> {
    let mut current = value.clone();
    for (index, op) in rule.operations.iter().enumerate() {
        current = op.apply(&current).map_err(|error| RuleApplyError {
            op_index: index + 1,
            primitive: op.kind(),
            error,
        })?;
    }
    Ok(current)
}

// ---------------------------------------------------------------------------
// validate_rule
// ---------------------------------------------------------------------------

/// One well-formedness break in a rule. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleViolation {
    UnresolvedSource(ElementRef),
    UnresolvedTarget(ElementRef),
    /// Operation `op_index` (1-based) cannot consume what the previous
    /// stage produces.
    ChainBreak {
        op_index: usize,
        primitive: PrimitiveKind,
        expected: SlotType,
        actual: SlotType,
    },
    /// The final output does not fit the target element's response type
    /// and coded set.
    TargetBreak {
        produced: SlotType,
        expected: ValueType,
    },
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleViolation::UnresolvedSource(r) => write!(f, "source element {r} not found"),
            RuleViolation::UnresolvedTarget(r) => write!(f, "target element {r} not found"),
            RuleViolation::ChainBreak {
                op_index,
                primitive,
                expected,
                actual,
            } => write!(
                f,
                "operation {op_index} ({primitive}) expects {expected}, gets {actual}"
            ),
            RuleViolation::TargetBreak { produced, expected } => write!(
                f,
                "chain produces {produced}, target element expects {expected}"
            ),
        }
    }
}

/// Check that the rule's endpoints resolve against `dictionaries` and that
/// the primitive chain is type-correct from source to target. Empty report
/// means the rule is well-formed.
pub fn validate_rule(
    rule: &HarmonizationRule,
    dictionaries: &[Arc<DataDictionary>],
) -> Vec<RuleViolation> {
    let mut violations = Vec::new();
    let resolve = |r: &ElementRef| {
        dictionaries
            .iter()
            .find(|d| d.name() == r.dictionary)
            .and_then(|d| d.element_by_name(&r.element).ok())
    };

    let source = resolve(&rule.source);
    if source.is_none() {
        violations.push(RuleViolation::UnresolvedSource(rule.source.clone()));
    }
    let target = resolve(&rule.target);
    if target.is_none() {
        violations.push(RuleViolation::UnresolvedTarget(rule.target.clone()));
    }

    let mut state = source.map(|e| SlotType::Exact(e.response_type().clone()));
    for (index, op) in rule.operations.iter().enumerate() {
        let (input, output) = op.io_types();
        if let Some(actual) = state {
            if !input.accepts(&actual) {
                violations.push(RuleViolation::ChainBreak {
                    op_index: index + 1,
                    primitive: op.kind(),
                    expected: input,
                    actual,
                });
            }
        }
        state = Some(output);
    }

    if let (Some(element), Some(produced)) = (target, state) {
        let expected = SlotType::Exact(element.response_type().clone());
        if !expected.accepts(&produced) {
            violations.push(RuleViolation::TargetBreak {
                produced,
                expected: element.response_type().clone(),
            });
        }
    }
    violations
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum RuleParseError {
    #[error("malformed rule document: {0}")]
    Parse(String),
    #[error("unknown primitive {0:?}")]
    UnknownPrimitive(String),
    #[error("{0}")]
    InvalidParams(String),
    #[error("invalid rule: {0}")]
    Invalid(String),
}

impl From<FragmentError> for RuleParseError {
    fn from(e: FragmentError) -> Self {
        match e {
            FragmentError::UnknownPrimitive(name) => RuleParseError::UnknownPrimitive(name),
            FragmentError::Malformed => RuleParseError::Parse(e.to_string()),
            FragmentError::InvalidParams(_) | FragmentError::BadParamShape { .. } => {
                RuleParseError::InvalidParams(e.to_string())
            }
        }
    }
}

#[derive(Serialize)]
struct RuleSer<'a> {
    #[serde(rename = "Source")]
    source: &'a ElementRef,
    #[serde(rename = "Target")]
    target: &'a ElementRef,
    #[serde(rename = "Operations")]
    operations: &'a [PrimitiveSpec],
}

#[derive(Serialize)]
struct BatchSer<'a> {
    rules: Vec<RuleSer<'a>>,
}

fn rule_ser(rule: &HarmonizationRule) -> RuleSer<'_> {
    RuleSer {
        source: &rule.source,
        target: &rule.target,
        operations: &rule.operations,
    }
}

/// Canonical JSON object for a rule, for embedding in other documents.
pub fn rule_to_json(rule: &HarmonizationRule) -> serde_json::Value {
    serde_json::to_value(rule_ser(rule)).expect("rule serialization cannot fail")
}

/// Canonical text form: fixed key order, two-space indent, trailing newline.
pub fn serialize_rule(rule: &HarmonizationRule) -> String {
    let mut text = serde_json::to_string_pretty(&rule_ser(rule))
        .expect("rule serialization cannot fail");
    text.push('\n');
    text
}

/// Canonical text form of a batch document: {"rules": [ ... ]}.
pub fn serialize_rules(rules: &[HarmonizationRule]) -> String {
    let batch = BatchSer {
        rules: rules.iter().map(rule_ser).collect(),
    };
    let mut text = serde_json::to_string_pretty(&batch).expect("rule serialization cannot fail");
    text.push('\n');
    text
}

/// Reconstruct a rule from a JSON object.
pub fn rule_from_json(value: &serde_json::Value) -> Result<HarmonizationRule, RuleParseError> {
    let object = value
        .as_object()
        .ok_or_else(|| RuleParseError::Parse("rule must be a JSON object".into()))?;
    let endpoint = |key: &str| -> Result<ElementRef, RuleParseError> {
        let raw = object
            .get(key)
            .ok_or_else(|| RuleParseError::Parse(format!("missing {key:?} key")))?;
        let r: ElementRef = serde_json::from_value(raw.clone())
            .map_err(|e| RuleParseError::Parse(format!("bad {key:?}: {e}")))?;
        ElementRef::new(r.dictionary, r.element)
            .map_err(|e| RuleParseError::Invalid(e.to_string()))
    };
    let source = endpoint("Source")?;
    let target = endpoint("Target")?;
    let raw_ops = object
        .get("Operations")
        .and_then(|v| v.as_array())
        .ok_or_else(|| RuleParseError::Parse("missing or non-array \"Operations\" key".into()))?;
    let mut operations = Vec::with_capacity(raw_ops.len());
    for fragment in raw_ops {
        operations.push(PrimitiveSpec::from_fragment(fragment)?);
    }
    HarmonizationRule::new(source, target, operations)
        .map_err(|e| RuleParseError::Invalid(e.to_string()))
}

/// Parse a single-rule document.
pub fn deserialize_rule(text: &str) -> Result<HarmonizationRule, RuleParseError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| RuleParseError::Parse(e.to_string()))?;
    rule_from_json(&value)
}

/// Parse a rule document holding either a single rule or a batch under a
/// top-level "rules" array.
pub fn deserialize_rules(text: &str) -> Result<Vec<HarmonizationRule>, RuleParseError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| RuleParseError::Parse(e.to_string()))?;
    match value.get("rules") {
        Some(serde_json::Value::Array(items)) => items.iter().map(rule_from_json).collect(),
        Some(_) => Err(RuleParseError::Parse("\"rules\" must be an array".into())),
        None => Ok(vec![rule_from_json(&value)?]),
    }
}
