//! The nine parameterizable primitive operations that mapping functions are
//! composed from.
//!
//! Every primitive is a pure function of (parameters, input value). The
//! missing marker passes through every primitive unchanged. Parameters are
//! validated at construction, so a held [`PrimitiveSpec`] is always
//! internally consistent.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::units::{self, Unit, UnitError};
use crate::values::{conforms, Value, ValueType};

#[derive(Debug, Error, PartialEq)]
pub enum PrimitiveError {
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch { expected: String, got: String },
    #[error("cannot cast {text:?} to {target}")]
    CastError { text: String, target: CastType },
    #[error("source code {0} has no mapping")]
    UnmappedCode(i64),
    #[error("value {0} falls in no bin")]
    UnbinnedValue(String),
    #[error("bad vector for {operation}: {reason}")]
    BadVector { operation: ReduceOp, reason: String },
    #[error("cannot parse {text:?} with date format {format:?}")]
    DateParseError { text: String, format: String },
    #[error(transparent)]
    DimensionMismatch(#[from] UnitError),
    #[error("invalid parameters for {primitive}: {reason}")]
    InvalidParams { primitive: PrimitiveKind, reason: String },
}

// ---------------------------------------------------------------------------
// Parameter vocabulary
// ---------------------------------------------------------------------------

/// The nine primitive kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    ConvertUnits,
    Truncate,
    Cast,
    EnumToEnum,
    Bin,
    Reduce,
    ConvertDate,
    Round,
    Threshold,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 9] = [
        PrimitiveKind::ConvertUnits,
        PrimitiveKind::Truncate,
        PrimitiveKind::Cast,
        PrimitiveKind::EnumToEnum,
        PrimitiveKind::Bin,
        PrimitiveKind::Reduce,
        PrimitiveKind::ConvertDate,
        PrimitiveKind::Round,
        PrimitiveKind::Threshold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::ConvertUnits => "ConvertUnits",
            PrimitiveKind::Truncate => "Truncate",
            PrimitiveKind::Cast => "Cast",
            PrimitiveKind::EnumToEnum => "EnumToEnum",
            PrimitiveKind::Bin => "Bin",
            PrimitiveKind::Reduce => "Reduce",
            PrimitiveKind::ConvertDate => "ConvertDate",
            PrimitiveKind::Round => "Round",
            PrimitiveKind::Threshold => "Threshold",
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl FromStr for PrimitiveKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PrimitiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(())
    }
}

/// Data types a cast can move between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CastType {
    String,
    Integer,
    Decimal,
    Boolean,
}

impl CastType {
    pub fn as_value_type(self) -> ValueType {
        match self {
            CastType::String => ValueType::String,
            CastType::Integer => ValueType::Integer,
            CastType::Decimal => ValueType::Decimal,
            CastType::Boolean => ValueType::Boolean,
        }
    }
}

impl fmt::Display for CastType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_value_type())
    }
}

/// Vector summarization carried out by Reduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReduceOp {
    #[serde(rename = "sum")]
    Sum,
    #[serde(rename = "any")]
    Any,
    #[serde(rename = "none")]
    None,
    #[serde(rename = "all")]
    All,
    #[serde(rename = "one-hot")]
    OneHot,
}

impl fmt::Display for ReduceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ReduceOp::Sum => "sum",
            ReduceOp::Any => "any",
            ReduceOp::None => "none",
            ReduceOp::All => "all",
            ReduceOp::OneHot => "one-hot",
        };
        write!(f, "{name}")
    }
}

/// One endpoint of a bin interval. Bins are closed on both ends; `Min` and
/// `Max` extend an interval to negative or positive infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinBound {
    Min,
    Max,
    Value(f64),
}

impl BinBound {
    fn effective(self) -> f64 {
        match self {
            BinBound::Min => f64::NEG_INFINITY,
            BinBound::Max => f64::INFINITY,
            BinBound::Value(v) => v,
        }
    }
}

/// A labeled closed interval `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinInterval {
    pub lower: BinBound,
    pub upper: BinBound,
    pub label: String,
}

impl BinInterval {
    pub fn new(lower: BinBound, upper: BinBound, label: impl Into<String>) -> Self {
        Self {
            lower,
            upper,
            label: label.into(),
        }
    }

    fn contains(&self, x: f64) -> bool {
        self.lower.effective() <= x && x <= self.upper.effective()
    }
}

/// A validated date format built from the tokens %Y %m %d %H %M %S.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateFormat {
    pattern: String,
    has_time: bool,
}

impl DateFormat {
    pub fn new(pattern: impl Into<String>) -> Result<Self, PrimitiveError> {
        let pattern = pattern.into();
        let invalid = |reason: String| PrimitiveError::InvalidParams {
            primitive: PrimitiveKind::ConvertDate,
            reason,
        };
        let mut chars = pattern.chars();
        let mut tokens = Vec::new();
        while let Some(c) = chars.next() {
            if c != '%' {
                continue;
            }
            match chars.next() {
                Some(t @ ('Y' | 'm' | 'd' | 'H' | 'M' | 'S')) => tokens.push(t),
                Some(other) => {
                    return Err(invalid(format!("unsupported token %{other} in {pattern:?}")))
                }
                None => return Err(invalid(format!("dangling % in {pattern:?}"))),
            }
        }
        if tokens.is_empty() {
            return Err(invalid(format!("format {pattern:?} contains no date tokens")));
        }
        let has_time = tokens.iter().any(|t| matches!(t, 'H' | 'M' | 'S'));
        Ok(Self { pattern, has_time })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    fn parse(&self, text: &str) -> Result<NaiveDateTime, PrimitiveError> {
        let err = || PrimitiveError::DateParseError {
            text: text.to_string(),
            format: self.pattern.clone(),
        };
        if self.has_time {
            NaiveDateTime::parse_from_str(text, &self.pattern).map_err(|_| err())
        } else {
            let date = NaiveDate::parse_from_str(text, &self.pattern).map_err(|_| err())?;
            date.and_hms_opt(0, 0, 0).ok_or_else(err)
        }
    }

    fn render(&self, moment: NaiveDateTime) -> String {
        moment.format(&self.pattern).to_string()
    }
}

// ---------------------------------------------------------------------------
// PrimitiveSpec
// ---------------------------------------------------------------------------

/// A parameterized primitive operation.
///
/// Construct through the per-kind constructors; parameters are validated
/// there, which keeps every held spec applicable and serializable.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSpec(Params);

#[derive(Debug, Clone, PartialEq)]
enum Params {
    ConvertUnits { source: Unit, target: Unit },
    Truncate { length: usize },
    Cast { source: CastType, target: CastType },
    EnumToEnum { mapping: Vec<(i64, i64)> },
    Bin { bins: Vec<BinInterval> },
    Reduce { operation: ReduceOp },
    ConvertDate { source: DateFormat, target: DateFormat },
    Round { precision: u32 },
    Threshold { lower: f64, upper: f64 },
}

fn invalid(primitive: PrimitiveKind, reason: impl Into<String>) -> PrimitiveError {
    PrimitiveError::InvalidParams {
        primitive,
        reason: reason.into(),
    }
}

impl PrimitiveSpec {
    /// Convert a numerical value between two units of one dimension.
    pub fn convert_units(source: Unit, target: Unit) -> Result<Self, PrimitiveError> {
        units::check_same_dimension(source, target)?;
        Ok(Self(Params::ConvertUnits { source, target }))
    }

    /// Keep only the first `length` characters of a text value.
    pub fn truncate(length: usize) -> Result<Self, PrimitiveError> {
        Ok(Self(Params::Truncate { length }))
    }

    /// Convert between data types. Supported pairs: string <-> integer,
    /// string <-> decimal, integer -> decimal, decimal -> string,
    /// integer <-> boolean (0/1), string <-> boolean ("true"/"false").
    pub fn cast(source: CastType, target: CastType) -> Result<Self, PrimitiveError> {
        use CastType::*;
        let supported = matches!(
            (source, target),
            (String, Integer)
                | (Integer, String)
                | (String, Decimal)
                | (Decimal, String)
                | (Integer, Decimal)
                | (Integer, Boolean)
                | (Boolean, Integer)
                | (String, Boolean)
                | (Boolean, String)
        );
        if !supported {
            return Err(invalid(
                PrimitiveKind::Cast,
                format!("unsupported cast {source} -> {target}"),
            ));
        }
        Ok(Self(Params::Cast { source, target }))
    }

    /// Re-code a coded value under another coding scheme. The mapping is
    /// stored sorted by source code; source codes must be unique.
    pub fn enum_to_enum(mapping: impl IntoIterator<Item = (i64, i64)>) -> Result<Self, PrimitiveError> {
        let mut mapping: Vec<(i64, i64)> = mapping.into_iter().collect();
        if mapping.is_empty() {
            return Err(invalid(PrimitiveKind::EnumToEnum, "mapping must not be empty"));
        }
        mapping.sort_by_key(|(from, _)| *from);
        for pair in mapping.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(invalid(
                    PrimitiveKind::EnumToEnum,
                    format!("duplicate source code {}", pair[0].0),
                ));
            }
        }
        Ok(Self(Params::EnumToEnum { mapping }))
    }

    /// Assign a numerical value to a labeled interval. Intervals are closed
    /// on both ends and must be pairwise disjoint; gaps are allowed and hit
    /// [`PrimitiveError::UnbinnedValue`] at application time.
    pub fn bin(bins: Vec<BinInterval>) -> Result<Self, PrimitiveError> {
        let err = |reason: String| invalid(PrimitiveKind::Bin, reason);
        if bins.is_empty() {
            return Err(err("at least one bin is required".into()));
        }
        for bin in &bins {
            if matches!(bin.lower, BinBound::Max) {
                return Err(err(format!("bin {:?} uses MAX as a lower bound", bin.label)));
            }
            if matches!(bin.upper, BinBound::Min) {
                return Err(err(format!("bin {:?} uses MIN as an upper bound", bin.label)));
            }
            if let (BinBound::Value(lo), BinBound::Value(hi)) = (bin.lower, bin.upper) {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(err(format!("bin {:?} has a non-finite bound", bin.label)));
                }
                if lo > hi {
                    return Err(err(format!(
                        "bin {:?} has lower {lo} above upper {hi}",
                        bin.label
                    )));
                }
            }
        }
        for (i, a) in bins.iter().enumerate() {
            for b in &bins[i + 1..] {
                let overlap = a.lower.effective() <= b.upper.effective()
                    && b.lower.effective() <= a.upper.effective();
                if overlap {
                    return Err(err(format!(
                        "bins {:?} and {:?} overlap",
                        a.label, b.label
                    )));
                }
            }
        }
        Ok(Self(Params::Bin { bins }))
    }

    /// Summarize a vector into a scalar.
    pub fn reduce(operation: ReduceOp) -> Result<Self, PrimitiveError> {
        Ok(Self(Params::Reduce { operation }))
    }

    /// Reformat a date-text value from one format into another.
    pub fn convert_date(source: DateFormat, target: DateFormat) -> Result<Self, PrimitiveError> {
        Ok(Self(Params::ConvertDate { source, target }))
    }

    /// Round a decimal half-away-from-zero at the `precision`-th decimal
    /// place. Precisions beyond 15 digits exceed what an f64 can hold.
    pub fn round(precision: u32) -> Result<Self, PrimitiveError> {
        if precision > 15 {
            return Err(invalid(
                PrimitiveKind::Round,
                format!("precision {precision} exceeds the supported maximum of 15"),
            ));
        }
        Ok(Self(Params::Round { precision }))
    }

    /// Clamp a numerical value into `[lower, upper]`.
    pub fn threshold(lower: f64, upper: f64) -> Result<Self, PrimitiveError> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(invalid(PrimitiveKind::Threshold, "bounds must be finite"));
        }
        if lower > upper {
            return Err(invalid(
                PrimitiveKind::Threshold,
                format!("lower {lower} is above upper {upper}"),
            ));
        }
        Ok(Self(Params::Threshold { lower, upper }))
    }

    pub fn kind(&self) -> PrimitiveKind {
        match &self.0 {
            Params::ConvertUnits { .. } => PrimitiveKind::ConvertUnits,
            Params::Truncate { .. } => PrimitiveKind::Truncate,
            Params::Cast { .. } => PrimitiveKind::Cast,
            Params::EnumToEnum { .. } => PrimitiveKind::EnumToEnum,
            Params::Bin { .. } => PrimitiveKind::Bin,
            Params::Reduce { .. } => PrimitiveKind::Reduce,
            Params::ConvertDate { .. } => PrimitiveKind::ConvertDate,
            Params::Round { .. } => PrimitiveKind::Round,
            Params::Threshold { .. } => PrimitiveKind::Threshold,
        }
    }

    /// Rounding precision, when this spec is a Round. The canonical writer
    /// uses it to pin the printed precision of rounded columns.
    pub fn round_precision(&self) -> Option<u32> {
        match &self.0 {
            Params::Round { precision } => Some(*precision),
            _ => None,
        }
    }

    // -----------------------------------------------------------------
    // Application
    // -----------------------------------------------------------------

    /// Apply this primitive to a single value. Missing propagates
    /// unchanged. Purely a function of (self, value).
    pub fn apply(&self, value: &Value) -> Result<Value, PrimitiveError> {
        if value.is_missing() {
            return Ok(Value::Missing);
        }
        match &self.0 {
            Params::ConvertUnits { source, target } => {
                let x = expect_numeric(value, "ConvertUnits")?;
                Ok(Value::Decimal(units::convert(x, *source, *target)?))
            }
            Params::Truncate { length } => {
                let text = expect_text(value, "Truncate")?;
                Ok(Value::Text(text.chars().take(*length).collect()))
            }
            Params::Cast { source, target } => apply_cast(*source, *target, value),
            Params::EnumToEnum { mapping } => {
                let code = match value {
                    Value::EnumCode(code) => *code,
                    other => {
                        return Err(PrimitiveError::TypeMismatch {
                            expected: "enum code".into(),
                            got: other.kind().into(),
                        })
                    }
                };
                mapping
                    .iter()
                    .find(|(from, _)| *from == code)
                    .map(|(_, to)| Value::EnumCode(*to))
                    .ok_or(PrimitiveError::UnmappedCode(code))
            }
            Params::Bin { bins } => {
                let x = expect_numeric(value, "Bin")?;
                bins.iter()
                    .find(|bin| bin.contains(x))
                    .map(|bin| Value::Text(bin.label.clone()))
                    .ok_or_else(|| PrimitiveError::UnbinnedValue(value.to_string()))
            }
            Params::Reduce { operation } => apply_reduce(*operation, value),
            Params::ConvertDate { source, target } => {
                let (text, was_date) = match value {
                    Value::Date(t) => (t.as_str(), true),
                    Value::Text(t) => (t.as_str(), false),
                    other => {
                        return Err(PrimitiveError::TypeMismatch {
                            expected: "date or string".into(),
                            got: other.kind().into(),
                        })
                    }
                };
                let rendered = target.render(source.parse(text)?);
                Ok(if was_date {
                    Value::Date(rendered)
                } else {
                    Value::Text(rendered)
                })
            }
            Params::Round { precision } => {
                let x = expect_numeric(value, "Round")?;
                Ok(Value::Decimal(round_half_away(x, *precision)))
            }
            Params::Threshold { lower, upper } => apply_threshold(*lower, *upper, value),
        }
    }

    // -----------------------------------------------------------------
    // Static typing
    // -----------------------------------------------------------------

    /// Input and output slot types, used to validate rule chains.
    pub fn io_types(&self) -> (SlotType, SlotType) {
        match &self.0 {
            Params::ConvertUnits { .. } => (SlotType::Numeric, SlotType::Exact(ValueType::Decimal)),
            Params::Truncate { .. } => (
                SlotType::Exact(ValueType::String),
                SlotType::Exact(ValueType::String),
            ),
            Params::Cast { source, target } => (
                SlotType::Exact(source.as_value_type()),
                SlotType::Exact(target.as_value_type()),
            ),
            Params::EnumToEnum { mapping } => (
                SlotType::EnumIn(mapping.iter().map(|(from, _)| *from).collect()),
                SlotType::EnumOut(mapping.iter().map(|(_, to)| *to).collect()),
            ),
            Params::Bin { bins } => (
                SlotType::Numeric,
                SlotType::Labeled(bins.iter().map(|b| b.label.clone()).collect()),
            ),
            Params::Reduce { operation } => match operation {
                ReduceOp::Sum => (SlotType::NumericVector, SlotType::Numeric),
                ReduceOp::Any | ReduceOp::None | ReduceOp::All => {
                    (SlotType::TruthyVector, SlotType::Exact(ValueType::Boolean))
                }
                ReduceOp::OneHot => (SlotType::OneHotVector, SlotType::Exact(ValueType::Integer)),
            },
            Params::ConvertDate { .. } => (SlotType::DateText, SlotType::DateText),
            Params::Round { .. } => (
                SlotType::Exact(ValueType::Decimal),
                SlotType::Exact(ValueType::Decimal),
            ),
            Params::Threshold { .. } => (SlotType::Numeric, SlotType::Numeric),
        }
    }
}

/// Free-function form of [`PrimitiveSpec::apply`].
pub fn apply_primitive(spec: &PrimitiveSpec, value: &Value) -> Result<Value, PrimitiveError> {
    spec.apply(value)
}

fn expect_numeric(value: &Value, op: &str) -> Result<f64, PrimitiveError> {
    value.as_f64().ok_or_else(|| PrimitiveError::TypeMismatch {
        expected: format!("numeric input for {op}"),
        got: value.kind().into(),
    })
}

fn expect_text<'v>(value: &'v Value, op: &str) -> Result<&'v str, PrimitiveError> {
    match value {
        Value::Text(t) | Value::Date(t) => Ok(t),
        other => Err(PrimitiveError::TypeMismatch {
            expected: format!("text input for {op}"),
            got: other.kind().into(),
        }),
    }
}

fn apply_cast(source: CastType, target: CastType, value: &Value) -> Result<Value, PrimitiveError> {
    let mismatch = || PrimitiveError::TypeMismatch {
        expected: source.to_string(),
        got: value.kind().into(),
    };
    let cast_err = |text: &str| PrimitiveError::CastError {
        text: text.to_string(),
        target,
    };
    match (source, value) {
        // Date-text is accepted wherever string input is declared.
        (CastType::String, Value::Text(t)) | (CastType::String, Value::Date(t)) => {
            let trimmed = t.trim();
            match target {
                CastType::Integer => trimmed
                    .parse::<i64>()
                    .map(Value::Integer)
                    .map_err(|_| cast_err(t)),
                CastType::Decimal => trimmed
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Value::Decimal)
                    .ok_or_else(|| cast_err(t)),
                CastType::Boolean => {
                    if trimmed.eq_ignore_ascii_case("true") {
                        Ok(Value::Boolean(true))
                    } else if trimmed.eq_ignore_ascii_case("false") {
                        Ok(Value::Boolean(false))
                    } else {
                        Err(cast_err(t))
                    }
                }
                CastType::String => unreachable!("rejected at construction"),
            }
        }
        (CastType::Integer, Value::Integer(i)) => match target {
            CastType::String => Ok(Value::Text(i.to_string())),
            CastType::Decimal => Ok(Value::Decimal(*i as f64)),
            CastType::Boolean => match i {
                0 => Ok(Value::Boolean(false)),
                1 => Ok(Value::Boolean(true)),
                _ => Err(cast_err(&i.to_string())),
            },
            CastType::Integer => unreachable!("rejected at construction"),
        },
        (CastType::Decimal, Value::Decimal(_)) | (CastType::Decimal, Value::Integer(_)) => {
            // Integer widens to decimal on input.
            match target {
                CastType::String => Ok(Value::Text(value.to_string())),
                _ => unreachable!("rejected at construction"),
            }
        }
        (CastType::Boolean, Value::Boolean(b)) => match target {
            CastType::Integer => Ok(Value::Integer(i64::from(*b))),
            CastType::String => Ok(Value::Text(b.to_string())),
            _ => unreachable!("rejected at construction"),
        },
        _ => Err(mismatch()),
    }
}

/// Truthiness used by the boolean reductions: nonzero numbers and codes,
/// true booleans. Text and dates have no truth value.
fn truthy(value: &Value) -> Option<bool> {
    match value {
        Value::Integer(i) => Some(*i != 0),
        Value::Decimal(d) => Some(*d != 0.0),
        Value::Boolean(b) => Some(*b),
        Value::EnumCode(c) => Some(*c != 0),
        _ => Option::None,
    }
}

fn apply_reduce(operation: ReduceOp, value: &Value) -> Result<Value, PrimitiveError> {
    let items = match value {
        Value::Vector(items) => items,
        other => {
            return Err(PrimitiveError::TypeMismatch {
                expected: "vector".into(),
                got: other.kind().into(),
            })
        }
    };
    let truths = || -> Result<Vec<bool>, PrimitiveError> {
        items
            .iter()
            .map(|item| {
                truthy(item).ok_or_else(|| PrimitiveError::BadVector {
                    operation,
                    reason: format!("element of kind {} has no truth value", item.kind()),
                })
            })
            .collect()
    };
    match operation {
        ReduceOp::Sum => {
            let mut int_sum: i128 = 0;
            let mut float_sum = 0.0f64;
            let mut saw_decimal = false;
            for item in items {
                match item {
                    Value::Integer(i) => {
                        int_sum += i128::from(*i);
                        float_sum += *i as f64;
                    }
                    Value::Decimal(d) => {
                        saw_decimal = true;
                        float_sum += *d;
                    }
                    other => {
                        return Err(PrimitiveError::BadVector {
                            operation,
                            reason: format!("non-numeric element of kind {}", other.kind()),
                        })
                    }
                }
            }
            if saw_decimal {
                Ok(Value::Decimal(float_sum))
            } else {
                Ok(i64::try_from(int_sum)
                    .map(Value::Integer)
                    .unwrap_or(Value::Decimal(float_sum)))
            }
        }
        ReduceOp::Any => Ok(Value::Boolean(truths()?.into_iter().any(|t| t))),
        ReduceOp::None => Ok(Value::Boolean(!truths()?.into_iter().any(|t| t))),
        ReduceOp::All => Ok(Value::Boolean(truths()?.into_iter().all(|t| t))),
        ReduceOp::OneHot => {
            let flags = truths()?;
            let hot: Vec<usize> = flags
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.then_some(i))
                .collect();
            match hot.as_slice() {
                [index] => Ok(Value::Integer(*index as i64)),
                _ => Err(PrimitiveError::BadVector {
                    operation,
                    reason: format!("expected exactly 1 hot element, found {}", hot.len()),
                }),
            }
        }
    }
}

/// Half-away-from-zero rounding at the p-th decimal place. Values too large
/// for the scaling to stay finite are already integral at that precision
/// and pass through unchanged.
fn round_half_away(x: f64, precision: u32) -> f64 {
    let factor = 10f64.powi(precision as i32);
    let scaled = x * factor;
    if !scaled.is_finite() {
        return x;
    }
    scaled.round() / factor
}

fn apply_threshold(lower: f64, upper: f64, value: &Value) -> Result<Value, PrimitiveError> {
    let x = expect_numeric(value, "Threshold")?;
    let clamped = x.clamp(lower, upper);
    match value {
        // Integers stay integers unless clamping lands on a fractional bound.
        Value::Integer(i) if clamped == x => Ok(Value::Integer(*i)),
        Value::Integer(_) if clamped.fract() == 0.0 && clamped.abs() <= i64::MAX as f64 => {
            Ok(Value::Integer(clamped as i64))
        }
        _ => Ok(Value::Decimal(clamped)),
    }
}

// ---------------------------------------------------------------------------
// Slot typing
// ---------------------------------------------------------------------------

/// Static description of what a primitive consumes or produces.
///
/// Besides exact value types, slots can describe type classes ("integer or
/// decimal"), enum values constrained by codes, and categorical values
/// identified by label whose codes are resolved against the target element.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotType {
    Exact(ValueType),
    /// Integer or decimal.
    Numeric,
    /// Date or string holding date text.
    DateText,
    /// Vector of integers or decimals.
    NumericVector,
    /// Vector of values with a truth value (numbers, booleans, codes).
    TruthyVector,
    /// Vector of integers or booleans with exactly one hot element.
    OneHotVector,
    /// Enum input accepted when its codes are covered by this set.
    EnumIn(BTreeSet<i64>),
    /// Enum output producing codes from this set.
    EnumOut(BTreeSet<i64>),
    /// Categorical output identified by these labels.
    Labeled(BTreeSet<String>),
}

impl SlotType {
    /// Whether a value produced with slot type `produced` can feed a slot
    /// expecting `self`. Integer widens to decimal; date and string
    /// interchange as date-text; enums check code containment.
    pub fn accepts(&self, produced: &SlotType) -> bool {
        use SlotType::*;
        match (self, produced) {
            (Exact(ValueType::String), Exact(ValueType::String | ValueType::Date) | DateText) => {
                true
            }
            (Exact(ValueType::Date), Exact(ValueType::Date | ValueType::String) | DateText) => true,
            (Exact(ValueType::Integer), Exact(ValueType::Integer)) => true,
            (Exact(ValueType::Decimal), Exact(ValueType::Integer | ValueType::Decimal) | Numeric) => {
                true
            }
            (Exact(ValueType::Boolean), Exact(ValueType::Boolean)) => true,
            (Exact(ValueType::Enum(set)), produced) => {
                let codes = set.codes();
                match produced {
                    Exact(ValueType::Enum(s)) => s.codes().is_subset(&codes),
                    EnumOut(s) => s.is_subset(&codes),
                    Labeled(labels) => {
                        let known: BTreeSet<&str> =
                            set.entries().iter().map(|e| e.label.as_str()).collect();
                        labels.iter().all(|l| known.contains(l.as_str()))
                    }
                    _ => false,
                }
            }
            (Exact(ValueType::Vector(want)), Exact(ValueType::Vector(have))) => {
                want == have
                    || (**want == ValueType::Decimal && **have == ValueType::Integer)
            }
            (Numeric, Exact(ValueType::Integer | ValueType::Decimal) | Numeric) => true,
            (DateText, Exact(ValueType::String | ValueType::Date) | DateText) => true,
            (NumericVector, Exact(ValueType::Vector(el))) => el.is_numeric(),
            (TruthyVector, Exact(ValueType::Vector(el))) => matches!(
                **el,
                ValueType::Integer | ValueType::Decimal | ValueType::Boolean | ValueType::Enum(_)
            ),
            (OneHotVector, Exact(ValueType::Vector(el))) => {
                matches!(**el, ValueType::Integer | ValueType::Boolean)
            }
            (EnumIn(allowed), Exact(ValueType::Enum(s))) => s.codes().is_subset(allowed),
            (EnumIn(allowed), EnumOut(s)) => s.is_subset(allowed),
            _ => false,
        }
    }

    /// Whether a runtime value inhabits this slot. Missing always fits.
    pub fn fits_value(&self, value: &Value) -> bool {
        use SlotType::*;
        if value.is_missing() {
            return true;
        }
        match self {
            Exact(ty) => conforms(value, ty, Option::None),
            Numeric => matches!(value, Value::Integer(_) | Value::Decimal(_)),
            DateText => matches!(value, Value::Text(_) | Value::Date(_)),
            NumericVector => vector_of(value, |v| {
                matches!(v, Value::Integer(_) | Value::Decimal(_))
            }),
            TruthyVector => vector_of(value, |v| truthy(v).is_some()),
            OneHotVector => vector_of(value, |v| {
                matches!(v, Value::Integer(_) | Value::Boolean(_))
            }),
            EnumIn(codes) | EnumOut(codes) => {
                matches!(value, Value::EnumCode(c) if codes.contains(c))
            }
            Labeled(labels) => matches!(value, Value::Text(t) if labels.contains(t)),
        }
    }
}

fn vector_of(value: &Value, element_ok: impl Fn(&Value) -> bool) -> bool {
    matches!(value, Value::Vector(items) if items.iter().all(element_ok))
}

impl fmt::Display for SlotType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotType::Exact(ty) => write!(f, "{ty}"),
            SlotType::Numeric => write!(f, "integer or decimal"),
            SlotType::DateText => write!(f, "date or string"),
            SlotType::NumericVector => write!(f, "vector of numbers"),
            SlotType::TruthyVector => write!(f, "vector of numbers, booleans, or codes"),
            SlotType::OneHotVector => write!(f, "vector of integers or booleans"),
            SlotType::EnumIn(codes) => write!(f, "enum with codes within {codes:?}"),
            SlotType::EnumOut(codes) => write!(f, "enum producing codes {codes:?}"),
            SlotType::Labeled(labels) => write!(f, "categorical labels {labels:?}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization fragment: {"primitive": <Kind>, "params": {...}}
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum FragmentError {
    #[error("operation fragment must be an object with \"primitive\" and \"params\" keys")]
    Malformed,
    #[error("unknown primitive {0:?}")]
    UnknownPrimitive(String),
    #[error(transparent)]
    InvalidParams(#[from] PrimitiveError),
    #[error("invalid parameters for {primitive}: {reason}")]
    BadParamShape { primitive: PrimitiveKind, reason: String },
}

#[derive(Serialize, Deserialize)]
struct UnitPairSer {
    source: String,
    target: String,
}

#[derive(Serialize, Deserialize)]
struct LengthSer {
    length: usize,
}

#[derive(Serialize, Deserialize)]
struct CastSer {
    source: CastType,
    target: CastType,
}

#[derive(Serialize, Deserialize)]
struct MappingEntrySer {
    from: i64,
    to: i64,
}

#[derive(Serialize, Deserialize)]
struct MappingSer {
    mapping: Vec<MappingEntrySer>,
}

#[derive(Serialize, Deserialize)]
struct BinEntrySer {
    lower: BoundSer,
    upper: BoundSer,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct BinsSer {
    bins: Vec<BinEntrySer>,
}

#[derive(Serialize, Deserialize)]
struct ReduceSer {
    operation: ReduceOp,
}

#[derive(Serialize, Deserialize)]
struct PrecisionSer {
    precision: u32,
}

#[derive(Serialize, Deserialize)]
struct ThresholdSer {
    lower: CanonNumber,
    upper: CanonNumber,
}

/// Bin bound on the wire: a number, or the sentinels "MIN"/"MAX".
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BoundSer {
    Sentinel(Sentinel),
    Number(CanonNumber),
}

#[derive(Serialize, Deserialize)]
enum Sentinel {
    #[serde(rename = "MIN")]
    Min,
    #[serde(rename = "MAX")]
    Max,
}

impl From<BinBound> for BoundSer {
    fn from(bound: BinBound) -> Self {
        match bound {
            BinBound::Min => BoundSer::Sentinel(Sentinel::Min),
            BinBound::Max => BoundSer::Sentinel(Sentinel::Max),
            BinBound::Value(v) => BoundSer::Number(CanonNumber(v)),
        }
    }
}

impl From<BoundSer> for BinBound {
    fn from(bound: BoundSer) -> Self {
        match bound {
            BoundSer::Sentinel(Sentinel::Min) => BinBound::Min,
            BoundSer::Sentinel(Sentinel::Max) => BinBound::Max,
            BoundSer::Number(CanonNumber(v)) => BinBound::Value(v),
        }
    }
}

/// JSON number that writes integral values without a fraction part, so the
/// canonical form of `100.0` is `100`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CanonNumber(f64);

impl Serialize for CanonNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.fract() == 0.0 && v.abs() <= 9007199254740992.0 {
            serializer.serialize_i64(v as i64)
        } else {
            serializer.serialize_f64(v)
        }
    }
}

impl<'de> Deserialize<'de> for CanonNumber {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        if !v.is_finite() {
            return Err(serde::de::Error::custom("number must be finite"));
        }
        Ok(CanonNumber(v))
    }
}

impl Serialize for PrimitiveSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut op = serializer.serialize_struct("Operation", 2)?;
        op.serialize_field("primitive", self.kind().name())?;
        match &self.0 {
            Params::ConvertUnits { source, target } => op.serialize_field(
                "params",
                &UnitPairSer {
                    source: source.id().to_string(),
                    target: target.id().to_string(),
                },
            )?,
            Params::Truncate { length } => {
                op.serialize_field("params", &LengthSer { length: *length })?
            }
            Params::Cast { source, target } => op.serialize_field(
                "params",
                &CastSer {
                    source: *source,
                    target: *target,
                },
            )?,
            Params::EnumToEnum { mapping } => op.serialize_field(
                "params",
                &MappingSer {
                    mapping: mapping
                        .iter()
                        .map(|(from, to)| MappingEntrySer { from: *from, to: *to })
                        .collect(),
                },
            )?,
            Params::Bin { bins } => op.serialize_field(
                "params",
                &BinsSer {
                    bins: bins
                        .iter()
                        .map(|b| BinEntrySer {
                            lower: b.lower.into(),
                            upper: b.upper.into(),
                            label: b.label.clone(),
                        })
                        .collect(),
                },
            )?,
            Params::Reduce { operation } => {
                op.serialize_field("params", &ReduceSer { operation: *operation })?
            }
            Params::ConvertDate { source, target } => op.serialize_field(
                "params",
                &UnitPairSer {
                    source: source.pattern().to_string(),
                    target: target.pattern().to_string(),
                },
            )?,
            Params::Round { precision } => {
                op.serialize_field("params", &PrecisionSer { precision: *precision })?
            }
            Params::Threshold { lower, upper } => op.serialize_field(
                "params",
                &ThresholdSer {
                    lower: CanonNumber(*lower),
                    upper: CanonNumber(*upper),
                },
            )?,
        }
        op.end()
    }
}

impl PrimitiveSpec {
    /// Parse one operation fragment. Unknown primitive names and invalid
    /// parameters are reported distinctly from malformed JSON.
    pub fn from_fragment(fragment: &serde_json::Value) -> Result<Self, FragmentError> {
        let object = fragment.as_object().ok_or(FragmentError::Malformed)?;
        let name = object
            .get("primitive")
            .and_then(|v| v.as_str())
            .ok_or(FragmentError::Malformed)?;
        let kind = PrimitiveKind::from_str(name)
            .map_err(|()| FragmentError::UnknownPrimitive(name.to_string()))?;
        let params = object.get("params").ok_or(FragmentError::Malformed)?;
        let shape_err = |e: serde_json::Error| FragmentError::BadParamShape {
            primitive: kind,
            reason: e.to_string(),
        };
        match kind {
            PrimitiveKind::ConvertUnits => {
                let p: UnitPairSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                let source = Unit::parse(&p.source).map_err(|e| {
                    FragmentError::InvalidParams(invalid(kind, e.to_string()))
                })?;
                let target = Unit::parse(&p.target).map_err(|e| {
                    FragmentError::InvalidParams(invalid(kind, e.to_string()))
                })?;
                Ok(Self::convert_units(source, target)?)
            }
            PrimitiveKind::Truncate => {
                let p: LengthSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::truncate(p.length)?)
            }
            PrimitiveKind::Cast => {
                let p: CastSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::cast(p.source, p.target)?)
            }
            PrimitiveKind::EnumToEnum => {
                let p: MappingSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::enum_to_enum(p.mapping.into_iter().map(|e| (e.from, e.to)))?)
            }
            PrimitiveKind::Bin => {
                let p: BinsSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::bin(
                    p.bins
                        .into_iter()
                        .map(|b| BinInterval::new(b.lower.into(), b.upper.into(), b.label))
                        .collect(),
                )?)
            }
            PrimitiveKind::Reduce => {
                let p: ReduceSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::reduce(p.operation)?)
            }
            PrimitiveKind::ConvertDate => {
                let p: UnitPairSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::convert_date(DateFormat::new(p.source)?, DateFormat::new(p.target)?)?)
            }
            PrimitiveKind::Round => {
                let p: PrecisionSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::round(p.precision)?)
            }
            PrimitiveKind::Threshold => {
                let p: ThresholdSer = serde_json::from_value(params.clone()).map_err(shape_err)?;
                Ok(Self::threshold(p.lower.0, p.upper.0)?)
            }
        }
    }
}

impl<'de> Deserialize<'de> for PrimitiveSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        PrimitiveSpec::from_fragment(&value).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glucose_bins() -> PrimitiveSpec {
        PrimitiveSpec::bin(vec![
            BinInterval::new(BinBound::Min, BinBound::Value(99.0), "normal"),
            BinInterval::new(BinBound::Value(100.0), BinBound::Value(125.0), "prediabetes"),
            BinInterval::new(BinBound::Value(126.0), BinBound::Max, "diabetes"),
        ])
        .unwrap()
    }

    // The nine reference examples, one per primitive.

    #[test]
    fn convert_units_meters_to_kilometers() {
        let spec = PrimitiveSpec::convert_units(Unit::Meter, Unit::Kilometer).unwrap();
        assert_eq!(spec.apply(&Value::Integer(1000)).unwrap(), Value::Decimal(1.0));
    }

    #[test]
    fn truncate_zip_code() {
        let spec = PrimitiveSpec::truncate(3).unwrap();
        assert_eq!(
            spec.apply(&Value::text("94305-2005")).unwrap(),
            Value::text("943")
        );
    }

    #[test]
    fn cast_string_to_integer() {
        let spec = PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap();
        assert_eq!(spec.apply(&Value::text("1")).unwrap(), Value::Integer(1));
    }

    #[test]
    fn enum_to_enum_recode() {
        let spec = PrimitiveSpec::enum_to_enum([(1, 0), (2, 1), (3, 2)]).unwrap();
        assert_eq!(spec.apply(&Value::EnumCode(2)).unwrap(), Value::EnumCode(1));
    }

    #[test]
    fn bin_glucose() {
        assert_eq!(
            glucose_bins().apply(&Value::Integer(137)).unwrap(),
            Value::text("diabetes")
        );
    }

    #[test]
    fn reduce_any() {
        let spec = PrimitiveSpec::reduce(ReduceOp::Any).unwrap();
        let v = Value::Vector(vec![0.into(), 0.into(), 1.into(), 0.into()]);
        assert_eq!(spec.apply(&v).unwrap(), Value::Boolean(true));
    }

    #[test]
    fn convert_date_us_to_iso() {
        let spec = PrimitiveSpec::convert_date(
            DateFormat::new("%m/%d/%Y").unwrap(),
            DateFormat::new("%Y-%m-%d").unwrap(),
        )
        .unwrap();
        assert_eq!(
            spec.apply(&Value::text("03/14/2025")).unwrap(),
            Value::text("2025-03-14")
        );
        assert_eq!(
            spec.apply(&Value::date("03/14/2025")).unwrap(),
            Value::date("2025-03-14")
        );
    }

    #[test]
    fn round_to_two_places() {
        let spec = PrimitiveSpec::round(2).unwrap();
        assert_eq!(spec.apply(&Value::Decimal(13.226)).unwrap(), Value::Decimal(13.23));
    }

    #[test]
    fn threshold_clamps() {
        let spec = PrimitiveSpec::threshold(0.0, 10.0).unwrap();
        assert_eq!(spec.apply(&Value::Integer(16)).unwrap(), Value::Integer(10));
        assert_eq!(spec.apply(&Value::Integer(5)).unwrap(), Value::Integer(5));
        assert_eq!(spec.apply(&Value::Decimal(-3.5)).unwrap(), Value::Decimal(0.0));
    }

    // Edge cases and error paths.

    #[test]
    fn missing_propagates_through_every_primitive() {
        let specs = [
            PrimitiveSpec::convert_units(Unit::Meter, Unit::Kilometer).unwrap(),
            PrimitiveSpec::truncate(3).unwrap(),
            PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap(),
            PrimitiveSpec::enum_to_enum([(1, 0)]).unwrap(),
            glucose_bins(),
            PrimitiveSpec::reduce(ReduceOp::Any).unwrap(),
            PrimitiveSpec::convert_date(
                DateFormat::new("%m/%d/%Y").unwrap(),
                DateFormat::new("%Y-%m-%d").unwrap(),
            )
            .unwrap(),
            PrimitiveSpec::round(2).unwrap(),
            PrimitiveSpec::threshold(0.0, 10.0).unwrap(),
        ];
        for spec in specs {
            assert_eq!(spec.apply(&Value::Missing).unwrap(), Value::Missing);
        }
    }

    #[test]
    fn kilometers_to_miles_derived() {
        let spec = PrimitiveSpec::convert_units(Unit::Kilometer, Unit::Mile).unwrap();
        let got = match spec.apply(&Value::Decimal(10.0)).unwrap() {
            Value::Decimal(d) => d,
            other => panic!("expected decimal, got {other:?}"),
        };
        let expected = 10.0 / 1.609344;
        assert!((got - expected).abs() <= 1e-9 * expected.abs());
    }

    #[test]
    fn unparseable_cast_is_an_error() {
        let spec = PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap();
        assert!(matches!(
            spec.apply(&Value::text("abc")),
            Err(PrimitiveError::CastError { .. })
        ));
        // whitespace is trimmed, inner signs accepted
        assert_eq!(spec.apply(&Value::text(" -42 ")).unwrap(), Value::Integer(-42));
    }

    #[test]
    fn cast_rejects_non_finite_decimals() {
        let spec = PrimitiveSpec::cast(CastType::String, CastType::Decimal).unwrap();
        assert!(spec.apply(&Value::text("inf")).is_err());
        assert!(spec.apply(&Value::text("NaN")).is_err());
        assert_eq!(spec.apply(&Value::text("2.5")).unwrap(), Value::Decimal(2.5));
    }

    #[test]
    fn unmapped_code_is_an_error() {
        let spec = PrimitiveSpec::enum_to_enum([(1, 0), (2, 1)]).unwrap();
        assert_eq!(
            spec.apply(&Value::EnumCode(9)),
            Err(PrimitiveError::UnmappedCode(9))
        );
    }

    #[test]
    fn gaps_between_bins_error_at_apply_time() {
        let spec = PrimitiveSpec::bin(vec![
            BinInterval::new(BinBound::Value(0.0), BinBound::Value(10.0), "low"),
            BinInterval::new(BinBound::Value(20.0), BinBound::Value(30.0), "high"),
        ])
        .unwrap();
        assert!(matches!(
            spec.apply(&Value::Integer(15)),
            Err(PrimitiveError::UnbinnedValue(_))
        ));
    }

    #[test]
    fn overlapping_bins_rejected_at_construction() {
        let result = PrimitiveSpec::bin(vec![
            BinInterval::new(BinBound::Value(0.0), BinBound::Value(10.0), "a"),
            BinInterval::new(BinBound::Value(10.0), BinBound::Value(20.0), "b"),
        ]);
        assert!(matches!(result, Err(PrimitiveError::InvalidParams { .. })));
    }

    #[test]
    fn one_hot_demands_exactly_one_hot_element() {
        let spec = PrimitiveSpec::reduce(ReduceOp::OneHot).unwrap();
        let one = Value::Vector(vec![0.into(), 0.into(), 1.into(), 0.into()]);
        assert_eq!(spec.apply(&one).unwrap(), Value::Integer(2));
        let two = Value::Vector(vec![1.into(), 1.into()]);
        assert!(matches!(spec.apply(&two), Err(PrimitiveError::BadVector { .. })));
        let zero = Value::Vector(vec![0.into()]);
        assert!(spec.apply(&zero).is_err());
    }

    #[test]
    fn reduce_any_none_complement() {
        let any = PrimitiveSpec::reduce(ReduceOp::Any).unwrap();
        let none = PrimitiveSpec::reduce(ReduceOp::None).unwrap();
        for items in [vec![], vec![0.into()], vec![0.into(), 2.into()], vec![Value::Boolean(true)]] {
            let v = Value::Vector(items);
            let a = any.apply(&v).unwrap();
            let n = none.apply(&v).unwrap();
            match (a, n) {
                (Value::Boolean(a), Value::Boolean(n)) => assert_eq!(a, !n),
                other => panic!("expected booleans, got {other:?}"),
            }
        }
    }

    #[test]
    fn reduce_sum_follows_element_kind() {
        let sum = PrimitiveSpec::reduce(ReduceOp::Sum).unwrap();
        let ints = Value::Vector(vec![1.into(), 2.into(), 3.into()]);
        assert_eq!(sum.apply(&ints).unwrap(), Value::Integer(6));
        let mixed = Value::Vector(vec![1.into(), Value::Decimal(0.5)]);
        assert_eq!(sum.apply(&mixed).unwrap(), Value::Decimal(1.5));
        assert_eq!(sum.apply(&Value::Vector(vec![])).unwrap(), Value::Integer(0));
    }

    #[test]
    fn date_parse_failure_is_an_error() {
        let spec = PrimitiveSpec::convert_date(
            DateFormat::new("%m/%d/%Y").unwrap(),
            DateFormat::new("%Y-%m-%d").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            spec.apply(&Value::text("2025-03-14")),
            Err(PrimitiveError::DateParseError { .. })
        ));
    }

    #[test]
    fn bad_date_format_tokens_rejected() {
        assert!(DateFormat::new("%m/%d/%y").is_err());
        assert!(DateFormat::new("no tokens").is_err());
        assert!(DateFormat::new("%m/%d/%").is_err());
        assert!(DateFormat::new("%Y-%m-%d %H:%M:%S").is_ok());
    }

    #[test]
    fn round_half_away_from_zero_at_ties() {
        let spec = PrimitiveSpec::round(0).unwrap();
        assert_eq!(spec.apply(&Value::Decimal(2.5)).unwrap(), Value::Decimal(3.0));
        assert_eq!(spec.apply(&Value::Decimal(-2.5)).unwrap(), Value::Decimal(-3.0));
        let one = PrimitiveSpec::round(1).unwrap();
        assert_eq!(one.apply(&Value::Decimal(0.25)).unwrap(), Value::Decimal(0.3));
    }

    #[test]
    fn round_and_threshold_are_idempotent() {
        let round = PrimitiveSpec::round(2).unwrap();
        let threshold = PrimitiveSpec::threshold(-1.5, 8.25).unwrap();
        for x in [13.226, -0.005, 99.994999, 1234.5678, -2.345] {
            let once = round.apply(&Value::Decimal(x)).unwrap();
            assert_eq!(round.apply(&once).unwrap(), once);
            let clamped = threshold.apply(&Value::Decimal(x)).unwrap();
            assert_eq!(threshold.apply(&clamped).unwrap(), clamped);
        }
    }

    #[test]
    fn truncate_length_bound() {
        let spec = PrimitiveSpec::truncate(8).unwrap();
        assert_eq!(spec.apply(&Value::text("short")).unwrap(), Value::text("short"));
        let zero = PrimitiveSpec::truncate(0).unwrap();
        assert_eq!(zero.apply(&Value::text("abc")).unwrap(), Value::text(""));
    }

    #[test]
    fn type_mismatch_reported() {
        let spec = PrimitiveSpec::round(2).unwrap();
        assert!(matches!(
            spec.apply(&Value::text("hi")),
            Err(PrimitiveError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn cross_dimension_units_rejected_at_construction() {
        assert!(matches!(
            PrimitiveSpec::convert_units(Unit::Meter, Unit::Kilogram),
            Err(PrimitiveError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn threshold_requires_ordered_bounds() {
        assert!(PrimitiveSpec::threshold(10.0, 0.0).is_err());
    }

    // io_types and slot compatibility.

    #[test]
    fn io_types_examples() {
        let cast = PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap();
        assert_eq!(
            cast.io_types(),
            (
                SlotType::Exact(ValueType::String),
                SlotType::Exact(ValueType::Integer)
            )
        );
        let round = PrimitiveSpec::round(2).unwrap();
        assert_eq!(
            round.io_types(),
            (
                SlotType::Exact(ValueType::Decimal),
                SlotType::Exact(ValueType::Decimal)
            )
        );
        let e2e = PrimitiveSpec::enum_to_enum([(1, 0), (2, 1), (3, 2)]).unwrap();
        assert_eq!(
            e2e.io_types(),
            (
                SlotType::EnumIn([1, 2, 3].into()),
                SlotType::EnumOut([0, 1, 2].into())
            )
        );
    }

    #[test]
    fn output_values_fit_declared_output_slots() {
        let cases: Vec<(PrimitiveSpec, Value)> = vec![
            (
                PrimitiveSpec::convert_units(Unit::Meter, Unit::Kilometer).unwrap(),
                Value::Integer(1000),
            ),
            (PrimitiveSpec::truncate(3).unwrap(), Value::text("94305-2005")),
            (
                PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap(),
                Value::text("1"),
            ),
            (
                PrimitiveSpec::enum_to_enum([(1, 0), (2, 1)]).unwrap(),
                Value::EnumCode(2),
            ),
            (glucose_bins(), Value::Integer(137)),
            (
                PrimitiveSpec::reduce(ReduceOp::Any).unwrap(),
                Value::Vector(vec![0.into(), 1.into()]),
            ),
            (PrimitiveSpec::round(2).unwrap(), Value::Decimal(13.226)),
            (PrimitiveSpec::threshold(0.0, 10.0).unwrap(), Value::Integer(16)),
        ];
        for (spec, input) in cases {
            let (input_slot, output_slot) = spec.io_types();
            assert!(input_slot.fits_value(&input), "{:?} input", spec.kind());
            let output = spec.apply(&input).unwrap();
            assert!(
                output_slot.fits_value(&output),
                "{:?} output {output:?} vs {output_slot:?}",
                spec.kind()
            );
        }
    }

    #[test]
    fn integer_widens_to_decimal_but_not_backwards() {
        let decimal = SlotType::Exact(ValueType::Decimal);
        let integer = SlotType::Exact(ValueType::Integer);
        assert!(decimal.accepts(&integer));
        assert!(!integer.accepts(&decimal));
        assert!(SlotType::Numeric.accepts(&integer));
    }
}
