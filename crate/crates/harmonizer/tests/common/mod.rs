//! Seeded generators for randomized dictionaries, rules, data files, and
//! whole jobs. Chains are built backward from the target element's type, so
//! every generated rule type-checks; cell data is drawn to mostly satisfy
//! the first operation with a small rate of failing values to exercise the
//! collect policy.

#![allow(dead_code)]

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use harmonizer::engine::{ErrorPolicy, HarmonizationJob, JobOptions};
use harmonizer::model::{DataDictionary, DataElement, DataFile, Variable};
use harmonizer::primitives::{BinBound, BinInterval, CastType, DateFormat, PrimitiveSpec, ReduceOp};
use harmonizer::rules::{ElementRef, HarmonizationRule};
use harmonizer::units::Unit;
use harmonizer::values::{CodedValueSet, Value, ValueType};

pub fn rng_for(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn coded_set(rng: &mut StdRng, max_len: usize) -> CodedValueSet {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut codes: Vec<i64> = (0..30).collect();
    for i in (1..codes.len()).rev() {
        codes.swap(i, rng.gen_range(0..=i));
    }
    CodedValueSet::from_pairs(
        codes
            .into_iter()
            .take(len)
            .map(|c| (c, format!("option {c}")))
    )
    .unwrap()
}

fn date_format(rng: &mut StdRng) -> DateFormat {
    let pool = [
        "%m/%d/%Y",
        "%Y-%m-%d",
        "%d-%m-%Y",
        "%Y-%m-%d %H:%M:%S",
    ];
    DateFormat::new(pool[rng.gen_range(0..pool.len())]).unwrap()
}

fn render_date(rng: &mut StdRng, format: &DateFormat) -> String {
    let pattern = format.pattern().to_string();
    let mut out = pattern
        .replace("%Y", &format!("{:04}", rng.gen_range(1950..2031)))
        .replace("%m", &format!("{:02}", rng.gen_range(1..13)))
        .replace("%d", &format!("{:02}", rng.gen_range(1..29)));
    out = out
        .replace("%H", &format!("{:02}", rng.gen_range(0..24)))
        .replace("%M", &format!("{:02}", rng.gen_range(0..60)))
        .replace("%S", &format!("{:02}", rng.gen_range(0..60)));
    out
}

/// What the raw source data for a rule column must look like to mostly
/// satisfy the chain's first operation.
#[derive(Debug, Clone)]
pub enum DataHint {
    AnyText,
    Digits,
    DecimalText,
    BoolText,
    DateText(DateFormat),
    SmallInt,
    ZeroOne,
    Number,
    Codes(CodedValueSet),
    TruthyVector,
    NumericVector,
    OneHotVector,
    Conforming,
}

/// A generated rule column: the invented source element, the chain, and a
/// hint for generating its data.
pub struct GeneratedChain {
    pub source_type: ValueType,
    pub operations: Vec<PrimitiveSpec>,
    pub hint: DataHint,
}

/// Build a chain backward from the target element so that the whole rule
/// type-checks, with chain length at most `max_len`.
pub fn chain_for_target(rng: &mut StdRng, target: &DataElement, max_len: usize) -> GeneratedChain {
    match target.response_type() {
        ValueType::Integer => integer_chain(rng),
        ValueType::Decimal => numeric_chain(rng, max_len),
        ValueType::Boolean => boolean_chain(rng),
        ValueType::String => string_chain(rng, max_len),
        ValueType::Date => date_chain(rng),
        ValueType::Enum(set) => enum_chain(rng, set, max_len),
        other => panic!("no rule chain generator for {other}"),
    }
}

fn integer_chain(rng: &mut StdRng) -> GeneratedChain {
    match rng.gen_range(0..3) {
        0 => GeneratedChain {
            source_type: ValueType::String,
            operations: vec![PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap()],
            hint: DataHint::Digits,
        },
        1 => GeneratedChain {
            source_type: ValueType::Boolean,
            operations: vec![PrimitiveSpec::cast(CastType::Boolean, CastType::Integer).unwrap()],
            hint: DataHint::Conforming,
        },
        _ => GeneratedChain {
            source_type: ValueType::vector_of(ValueType::Integer).unwrap(),
            operations: vec![PrimitiveSpec::reduce(ReduceOp::OneHot).unwrap()],
            hint: DataHint::OneHotVector,
        },
    }
}

/// Chains that land on a decimal target. A numeric prefix of ConvertUnits /
/// Round / Threshold can be stacked.
fn numeric_chain(rng: &mut StdRng, max_len: usize) -> GeneratedChain {
    let mut operations = Vec::new();
    let prefix_len = rng.gen_range(1..=max_len.min(4));
    for _ in 0..prefix_len {
        operations.push(numeric_op(rng));
    }
    let (source_type, hint) = match rng.gen_range(0..3) {
        0 => (ValueType::Integer, DataHint::Number),
        1 => (ValueType::Decimal, DataHint::Number),
        _ => (
            ValueType::vector_of(if rng.gen_bool(0.5) { ValueType::Integer } else { ValueType::Decimal }).unwrap(),
            DataHint::NumericVector,
        ),
    };
    if matches!(source_type, ValueType::Vector(_)) {
        operations.insert(0, PrimitiveSpec::reduce(ReduceOp::Sum).unwrap());
    }
    GeneratedChain {
        source_type,
        operations,
        hint,
    }
}

fn numeric_op(rng: &mut StdRng) -> PrimitiveSpec {
    match rng.gen_range(0..3) {
        0 => {
            let units: [Unit; 4] = match rng.gen_range(0..3) {
                0 => [Unit::Meter, Unit::Kilometer, Unit::Mile, Unit::Foot],
                1 => [Unit::Gram, Unit::Kilogram, Unit::Pound, Unit::Ounce],
                _ => [Unit::Second, Unit::Minute, Unit::Hour, Unit::Day],
            };
            let a = units[rng.gen_range(0..4)];
            let mut b = units[rng.gen_range(0..4)];
            if a == b {
                b = units[(units.iter().position(|u| *u == a).unwrap() + 1) % 4];
            }
            PrimitiveSpec::convert_units(a, b).unwrap()
        }
        1 => PrimitiveSpec::round(rng.gen_range(0..5)).unwrap(),
        _ => {
            let lo = rng.gen_range(-50.0..0.0f64);
            let hi = rng.gen_range(0.0..5000.0f64);
            PrimitiveSpec::threshold((lo * 2.0).round() / 2.0, (hi * 2.0).round() / 2.0).unwrap()
        }
    }
}

fn boolean_chain(rng: &mut StdRng) -> GeneratedChain {
    match rng.gen_range(0..3) {
        0 => GeneratedChain {
            source_type: ValueType::String,
            operations: vec![PrimitiveSpec::cast(CastType::String, CastType::Boolean).unwrap()],
            hint: DataHint::BoolText,
        },
        1 => GeneratedChain {
            source_type: ValueType::Integer,
            operations: vec![PrimitiveSpec::cast(CastType::Integer, CastType::Boolean).unwrap()],
            hint: DataHint::ZeroOne,
        },
        _ => {
            let op = [ReduceOp::Any, ReduceOp::None, ReduceOp::All][rng.gen_range(0..3)];
            GeneratedChain {
                source_type: ValueType::vector_of(if rng.gen_bool(0.5) {
                    ValueType::Integer
                } else {
                    ValueType::Boolean
                })
                .unwrap(),
                operations: vec![PrimitiveSpec::reduce(op).unwrap()],
                hint: DataHint::TruthyVector,
            }
        }
    }
}

fn string_chain(rng: &mut StdRng, max_len: usize) -> GeneratedChain {
    match rng.gen_range(0..4) {
        0 => {
            let mut operations = vec![PrimitiveSpec::truncate(rng.gen_range(0..12)).unwrap()];
            for _ in 1..rng.gen_range(1..=max_len.min(3)) {
                operations.push(PrimitiveSpec::truncate(rng.gen_range(0..12)).unwrap());
            }
            GeneratedChain {
                source_type: ValueType::String,
                operations,
                hint: DataHint::AnyText,
            }
        }
        1 => GeneratedChain {
            source_type: ValueType::Integer,
            operations: vec![PrimitiveSpec::cast(CastType::Integer, CastType::String).unwrap()],
            hint: DataHint::SmallInt,
        },
        2 => GeneratedChain {
            source_type: ValueType::Boolean,
            operations: vec![PrimitiveSpec::cast(CastType::Boolean, CastType::String).unwrap()],
            hint: DataHint::Conforming,
        },
        _ => {
            let from = date_format(rng);
            let to = date_format(rng);
            GeneratedChain {
                source_type: ValueType::String,
                operations: vec![PrimitiveSpec::convert_date(from.clone(), to).unwrap()],
                hint: DataHint::DateText(from),
            }
        }
    }
}

fn date_chain(rng: &mut StdRng) -> GeneratedChain {
    let from = date_format(rng);
    let to = date_format(rng);
    GeneratedChain {
        source_type: ValueType::Date,
        operations: vec![PrimitiveSpec::convert_date(from.clone(), to).unwrap()],
        hint: DataHint::DateText(from),
    }
}

fn enum_chain(rng: &mut StdRng, target_set: &CodedValueSet, max_len: usize) -> GeneratedChain {
    if rng.gen_bool(0.5) {
        // Re-coding route, possibly stacked.
        let mut downstream: Vec<i64> = target_set.entries().iter().map(|e| e.code).collect();
        let mut operations = Vec::new();
        let mut upstream_set = None;
        for _ in 0..rng.gen_range(1..=max_len.min(3)) {
            let source_set = coded_set(rng, 6);
            let mapping: Vec<(i64, i64)> = source_set
                .entries()
                .iter()
                .map(|e| (e.code, downstream[rng.gen_range(0..downstream.len())]))
                .collect();
            operations.insert(0, PrimitiveSpec::enum_to_enum(mapping).unwrap());
            downstream = source_set.entries().iter().map(|e| e.code).collect();
            upstream_set = Some(source_set);
        }
        let set = upstream_set.unwrap();
        GeneratedChain {
            source_type: ValueType::Enum(set.clone()),
            operations,
            hint: DataHint::Codes(set),
        }
    } else {
        // Binning route: contiguous integer intervals labeled from the
        // target's coded set.
        let labels: Vec<&str> = target_set.entries().iter().map(|e| e.label.as_str()).collect();
        let used = rng.gen_range(1..=labels.len());
        let width = rng.gen_range(5..40);
        let mut bins = Vec::new();
        for (i, label) in labels.iter().take(used).enumerate() {
            let lower = (i as f64) * width as f64;
            let upper = lower + (width - 1) as f64;
            let lower = if i == 0 && rng.gen_bool(0.5) {
                BinBound::Min
            } else {
                BinBound::Value(lower)
            };
            let upper = if i == used - 1 && rng.gen_bool(0.5) {
                BinBound::Max
            } else {
                BinBound::Value(upper)
            };
            bins.push(BinInterval::new(lower, upper, label.to_string()));
        }
        GeneratedChain {
            source_type: if rng.gen_bool(0.5) { ValueType::Integer } else { ValueType::Decimal },
            operations: vec![PrimitiveSpec::bin(bins).unwrap()],
            hint: DataHint::Number,
        }
    }
}

// ---------------------------------------------------------------------------
// Data generation
// ---------------------------------------------------------------------------

fn junk(rng: &mut StdRng) -> bool {
    rng.gen_bool(0.03)
}

fn gen_cell(rng: &mut StdRng, ty: &ValueType, hint: &DataHint) -> Value {
    if rng.gen_bool(0.05) {
        return Value::Missing;
    }
    match hint {
        DataHint::AnyText => Value::Text(random_text(rng)),
        DataHint::Digits => {
            if junk(rng) {
                Value::Text(format!("x{}", rng.gen_range(0..100)))
            } else {
                Value::Text(rng.gen_range(-5000i64..5000).to_string())
            }
        }
        DataHint::DecimalText => {
            if junk(rng) {
                Value::Text("n/a".into())
            } else {
                Value::Text(format!("{:.2}", rng.gen_range(-100.0..100.0f64)))
            }
        }
        DataHint::BoolText => {
            if junk(rng) {
                Value::Text("maybe".into())
            } else {
                Value::Text(if rng.gen_bool(0.5) { "true" } else { "False" }.into())
            }
        }
        DataHint::DateText(format) => {
            let text = if junk(rng) {
                "not a date".to_string()
            } else {
                render_date(rng, format)
            };
            match ty {
                ValueType::Date => Value::Date(text),
                _ => Value::Text(text),
            }
        }
        DataHint::SmallInt => Value::Integer(rng.gen_range(-1000..1000)),
        DataHint::ZeroOne => Value::Integer(if junk(rng) {
            rng.gen_range(2..9)
        } else {
            rng.gen_range(0..2)
        }),
        DataHint::Number => match ty {
            ValueType::Integer => Value::Integer(rng.gen_range(-500..5000)),
            _ => Value::Decimal((rng.gen_range(-500.0..5000.0f64) * 100.0).round() / 100.0),
        },
        DataHint::Codes(set) => {
            let entries = set.entries();
            Value::EnumCode(entries[rng.gen_range(0..entries.len())].code)
        }
        DataHint::TruthyVector | DataHint::NumericVector | DataHint::OneHotVector => {
            let element = match ty {
                ValueType::Vector(el) => el.as_ref().clone(),
                _ => ValueType::Integer,
            };
            let len = rng.gen_range(0..6);
            let mut items: Vec<Value> = (0..len)
                .map(|_| match element {
                    ValueType::Boolean => Value::Boolean(rng.gen_bool(0.3)),
                    ValueType::Decimal => {
                        Value::Decimal((rng.gen_range(-5.0..5.0f64) * 4.0).round() / 4.0)
                    }
                    _ => Value::Integer(rng.gen_range(0..2)),
                })
                .collect();
            if matches!(hint, DataHint::OneHotVector) && !items.is_empty() && !junk(rng) {
                // make exactly one element hot most of the time
                for item in items.iter_mut() {
                    *item = match item {
                        Value::Boolean(_) => Value::Boolean(false),
                        _ => Value::Integer(0),
                    };
                }
                let hot = rng.gen_range(0..items.len());
                items[hot] = match items[hot] {
                    Value::Boolean(_) => Value::Boolean(true),
                    _ => Value::Integer(1),
                };
            }
            Value::Vector(items)
        }
        DataHint::Conforming => conforming_cell(rng, ty),
    }
}

fn random_text(rng: &mut StdRng) -> String {
    let words = ["alpha", "beta", "gamma", "delta", "zip 94305-2005", "x,y", "\"q\""];
    let mut out = words[rng.gen_range(0..words.len())].to_string();
    if rng.gen_bool(0.2) {
        out.push(' ');
        out.push_str(words[rng.gen_range(0..words.len())]);
    }
    out
}

/// A value that conforms to `ty`, for identity columns and io round-trips.
pub fn conforming_cell(rng: &mut StdRng, ty: &ValueType) -> Value {
    match ty {
        ValueType::String => Value::Text(random_text(rng)),
        ValueType::Integer => Value::Integer(rng.gen_range(-10_000..10_000)),
        ValueType::Decimal => Value::Decimal((rng.gen_range(-1e4..1e4f64) * 8.0).round() / 8.0),
        ValueType::Boolean => Value::Boolean(rng.gen_bool(0.5)),
        ValueType::Date => Value::Date(render_date(rng, &DateFormat::new("%Y-%m-%d").unwrap())),
        ValueType::Enum(set) => {
            let entries = set.entries();
            Value::EnumCode(entries[rng.gen_range(0..entries.len())].code)
        }
        ValueType::Vector(element) => {
            let len = rng.gen_range(0..5);
            Value::Vector((0..len).map(|_| conforming_cell(rng, element)).collect())
        }
        ValueType::Unknown => Value::Missing,
    }
}

pub fn random_scalar_type(rng: &mut StdRng) -> ValueType {
    match rng.gen_range(0..6) {
        0 => ValueType::String,
        1 => ValueType::Integer,
        2 => ValueType::Decimal,
        3 => ValueType::Boolean,
        4 => ValueType::Date,
        _ => ValueType::Enum(coded_set(rng, 6)),
    }
}

/// Random dictionary with `max_elements` at most, mixing scalars and the
/// occasional vector.
pub fn random_dictionary(rng: &mut StdRng, name: &str, max_elements: usize) -> DataDictionary {
    let count = rng.gen_range(1..=max_elements);
    let elements = (0..count)
        .map(|i| {
            let ty = if rng.gen_bool(0.15) {
                ValueType::vector_of(random_scalar_type_nonenum(rng)).unwrap()
            } else {
                random_scalar_type(rng)
            };
            DataElement::new(
                format!("{name}_el{i}"),
                Variable::new(format!("concept {i}")).unwrap(),
                format!("Prompt {i}?"),
                ty,
            )
            .unwrap()
        })
        .collect();
    DataDictionary::new(name, elements).unwrap()
}

fn random_scalar_type_nonenum(rng: &mut StdRng) -> ValueType {
    match rng.gen_range(0..5) {
        0 => ValueType::String,
        1 => ValueType::Integer,
        2 => ValueType::Decimal,
        3 => ValueType::Boolean,
        _ => ValueType::Date,
    }
}

/// Random data file conforming to `dictionary`.
pub fn random_file(
    rng: &mut StdRng,
    name: &str,
    dictionary: &Arc<DataDictionary>,
    max_rows: usize,
) -> DataFile {
    let rows = rng.gen_range(0..=max_rows);
    let data = (0..rows)
        .map(|_| {
            dictionary
                .elements()
                .iter()
                .map(|e| {
                    if rng.gen_bool(0.05) {
                        Value::Missing
                    } else {
                        conforming_cell(rng, e.response_type())
                    }
                })
                .collect()
        })
        .collect();
    DataFile::new(name, Arc::clone(dictionary), data).unwrap()
}

// ---------------------------------------------------------------------------
// Whole-job generation
// ---------------------------------------------------------------------------

/// A target element type a rule chain can land on.
fn random_target_type(rng: &mut StdRng) -> ValueType {
    match rng.gen_range(0..6) {
        0 => ValueType::String,
        1 => ValueType::Integer,
        2 => ValueType::Decimal,
        3 => ValueType::Boolean,
        4 => ValueType::Date,
        _ => ValueType::Enum(coded_set(rng, 6)),
    }
}

/// Generate a complete, well-formed job: a target dictionary of at most
/// `max_elements`, one to three input files each with its own dictionary,
/// and per-file rules (or identity pass-through) covering every target
/// element. Returns the job plus the per-column hints used to draw data.
pub fn random_job(seed: u64, max_elements: usize, max_rows: usize, max_chain: usize) -> HarmonizationJob {
    let rng = &mut rng_for(seed);
    let target_name = format!("target{seed}");
    let element_count = rng.gen_range(1..=max_elements);
    let target_elements: Vec<DataElement> = (0..element_count)
        .map(|i| {
            DataElement::new(
                format!("t{i}"),
                Variable::new(format!("concept {i}")).unwrap(),
                format!("Prompt {i}?"),
                random_target_type(rng),
            )
            .unwrap()
        })
        .collect();
    let target = Arc::new(DataDictionary::new(&target_name, target_elements).unwrap());

    let file_count = rng.gen_range(1..=3);
    let mut inputs = Vec::with_capacity(file_count);
    for f in 0..file_count {
        let dict_name = format!("src{seed}_{f}");
        let mut source_elements: Vec<DataElement> = Vec::new();
        let mut hints: Vec<DataHint> = Vec::new();
        let mut rules: Vec<HarmonizationRule> = Vec::new();

        for element in target.elements() {
            if rng.gen_bool(0.3) {
                // identity pass-through: same name, same response type
                source_elements.push(element.clone());
                hints.push(DataHint::Conforming);
            } else {
                let chain = chain_for_target(rng, element, max_chain);
                let source_name = format!("{}_{}_src", dict_name, element.name());
                source_elements.push(
                    DataElement::new(
                        &source_name,
                        Variable::new(format!("src concept {}", element.name())).unwrap(),
                        "",
                        chain.source_type.clone(),
                    )
                    .unwrap(),
                );
                hints.push(chain.hint.clone());
                rules.push(
                    HarmonizationRule::new(
                        ElementRef::new(&dict_name, &source_name).unwrap(),
                        ElementRef::new(&target_name, element.name()).unwrap(),
                        chain.operations,
                    )
                    .unwrap(),
                );
            }
        }
        // extra columns that get dropped with a warning
        for extra in 0..rng.gen_range(0..2) {
            source_elements.push(
                DataElement::new(
                    format!("{dict_name}_extra{extra}"),
                    Variable::new("extra").unwrap(),
                    "",
                    ValueType::String,
                )
                .unwrap(),
            );
            hints.push(DataHint::AnyText);
        }

        let dictionary = Arc::new(DataDictionary::new(&dict_name, source_elements).unwrap());
        let rows = rng.gen_range(0..=max_rows);
        let data: Vec<Vec<Value>> = (0..rows)
            .map(|_| {
                dictionary
                    .elements()
                    .iter()
                    .zip(&hints)
                    .map(|(e, hint)| gen_cell(rng, e.response_type(), hint))
                    .collect()
            })
            .collect();
        let file = DataFile::new(format!("data{seed}_{f}"), dictionary, data).unwrap();
        inputs.push((file, rules));
    }

    HarmonizationJob {
        inputs,
        target,
        options: JobOptions {
            error_policy: ErrorPolicy::Collect,
            output_name: Some("integrated".into()),
        },
    }
}

/// Random standalone rule (with matching source/target dictionaries not
/// materialized), for serialization round-trips.
pub fn random_rule(seed: u64) -> HarmonizationRule {
    let rng = &mut rng_for(seed);
    let target_type = random_target_type(rng);
    let element = DataElement::new(
        "t0",
        Variable::new("concept").unwrap(),
        "",
        target_type,
    )
    .unwrap();
    let chain = chain_for_target(rng, &element, 4);
    HarmonizationRule::new(
        ElementRef::new(format!("src{seed}"), "s0").unwrap(),
        ElementRef::new(format!("tgt{seed}"), "t0").unwrap(),
        chain.operations,
    )
    .unwrap()
}
