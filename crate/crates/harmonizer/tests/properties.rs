//! Property tests over randomized rules, files, and chains.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng as _;

use harmonizer::io::{
    read_data_from_str, read_dictionary_from_str, write_data_to_string,
    write_dictionary_to_string, CanonicalWriterConfig,
};
use harmonizer::model::{DataDictionary, DataElement, Variable};
use harmonizer::primitives::{BinBound, BinInterval, PrimitiveError, PrimitiveSpec};
use harmonizer::rules::{
    compose_apply, deserialize_rule, serialize_rule, validate_rule, ElementRef, HarmonizationRule,
};
use harmonizer::values::Value;

proptest! {
    /// Canonical serialization inverts structurally, and re-serialization
    /// is a byte-level fixpoint.
    #[test]
    fn rule_round_trip(seed in any::<u64>()) {
        let rule = common::random_rule(seed);
        let text = serialize_rule(&rule);
        let parsed = deserialize_rule(&text).unwrap();
        prop_assert_eq!(&parsed, &rule);
        prop_assert_eq!(serialize_rule(&parsed), text);
    }

    /// Writing a data file and reading it back reproduces the file exactly.
    #[test]
    fn data_file_round_trip(seed in any::<u64>()) {
        let rng = &mut common::rng_for(seed);
        let dictionary = Arc::new(common::random_dictionary(rng, "rt", 6));
        let file = common::random_file(rng, "rt-data", &dictionary, 50);
        let text = write_data_to_string(&file, &CanonicalWriterConfig::default()).unwrap();
        let back = read_data_from_str("rt-data", &text, &dictionary, "prop").unwrap();
        prop_assert_eq!(back, file);
    }

    /// The canonical writer is a pure function of the data file value.
    #[test]
    fn writer_is_deterministic(seed in any::<u64>()) {
        let rng = &mut common::rng_for(seed);
        let dictionary = Arc::new(common::random_dictionary(rng, "det", 4));
        let file = common::random_file(rng, "det-data", &dictionary, 20);
        let config = CanonicalWriterConfig::default();
        let a = write_data_to_string(&file, &config).unwrap();
        let b = write_data_to_string(&file, &config).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Dictionary documents round-trip losslessly and bit-exactly.
    #[test]
    fn dictionary_round_trip(seed in any::<u64>()) {
        let rng = &mut common::rng_for(seed);
        let dictionary = common::random_dictionary(rng, "dict", 6);
        let text = write_dictionary_to_string(&dictionary);
        let parsed = read_dictionary_from_str(&text, "prop").unwrap();
        prop_assert_eq!(&parsed, &dictionary);
        prop_assert_eq!(write_dictionary_to_string(&parsed), text);
    }

    /// Applying operations one at a time equals composing them.
    #[test]
    fn staging_equals_composition(seed in any::<u64>()) {
        let rng = &mut common::rng_for(seed);
        let element = DataElement::new(
            "t0",
            Variable::new("concept").unwrap(),
            "",
            match rng.gen_range(0..5) {
                0 => harmonizer::values::ValueType::String,
                1 => harmonizer::values::ValueType::Integer,
                2 => harmonizer::values::ValueType::Decimal,
                3 => harmonizer::values::ValueType::Boolean,
                _ => harmonizer::values::ValueType::Date,
            },
        )
        .unwrap();
        let chain = common::chain_for_target(rng, &element, 5);
        let rule = HarmonizationRule::new(
            ElementRef::new("s", "s0").unwrap(),
            ElementRef::new("t", "t0").unwrap(),
            chain.operations.clone(),
        )
        .unwrap();
        let input = common::conforming_cell(rng, &chain.source_type);

        let mut staged: Result<Value, PrimitiveError> = Ok(input.clone());
        for op in &chain.operations {
            staged = match staged {
                Ok(v) => op.apply(&v),
                Err(e) => Err(e),
            };
        }
        match (compose_apply(&rule, &input), staged) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(composed), Err(stagewise)) => prop_assert_eq!(composed.error, stagewise),
            (a, b) => prop_assert!(false, "composed {a:?} versus staged {b:?}"),
        }
    }

    /// If validation reports nothing, applying the rule to a conforming
    /// non-missing input never raises a mid-chain type mismatch; only the
    /// declared data errors may occur.
    #[test]
    fn validation_soundness(seed in any::<u64>()) {
        let rng = &mut common::rng_for(seed);
        let target_element = DataElement::new(
            "t0",
            Variable::new("concept").unwrap(),
            "",
            match rng.gen_range(0..6) {
                0 => harmonizer::values::ValueType::String,
                1 => harmonizer::values::ValueType::Integer,
                2 => harmonizer::values::ValueType::Decimal,
                3 => harmonizer::values::ValueType::Boolean,
                4 => harmonizer::values::ValueType::Date,
                _ => {
                    let set = harmonizer::values::CodedValueSet::from_pairs(
                        (0..rng.gen_range(1..6)).map(|c| (c, format!("option {c}")))
                    ).unwrap();
                    harmonizer::values::ValueType::Enum(set)
                }
            },
        )
        .unwrap();
        let chain = common::chain_for_target(rng, &target_element, 4);
        let source_element = DataElement::new(
            "s0",
            Variable::new("src").unwrap(),
            "",
            chain.source_type.clone(),
        )
        .unwrap();
        let source_dict = Arc::new(DataDictionary::new("s", vec![source_element]).unwrap());
        let target_dict = Arc::new(DataDictionary::new("t", vec![target_element]).unwrap());
        let rule = HarmonizationRule::new(
            ElementRef::new("s", "s0").unwrap(),
            ElementRef::new("t", "t0").unwrap(),
            chain.operations,
        )
        .unwrap();
        let report = validate_rule(&rule, &[source_dict, target_dict]);
        prop_assert!(report.is_empty(), "generated rule should validate: {report:?}");

        for _ in 0..10 {
            let input = common::conforming_cell(rng, &chain.source_type);
            if let Err(e) = compose_apply(&rule, &input) {
                prop_assert!(
                    !matches!(e.error, PrimitiveError::TypeMismatch { .. }),
                    "type mismatch after clean validation: {e} on {input:?}"
                );
            }
        }
    }

    /// With MIN/MAX sentinels and contiguous integer intervals the line is
    /// covered: no integer input is unbinned.
    #[test]
    fn covering_bins_are_total_for_integers(
        seed in any::<u64>(),
        inputs in prop::collection::vec(-1_000_000_000i64..1_000_000_000, 1..50),
    ) {
        let rng = &mut common::rng_for(seed);
        let cuts: Vec<i64> = {
            let mut c: Vec<i64> = (0..rng.gen_range(1..5))
                .map(|_| rng.gen_range(-1000..1000))
                .collect();
            c.sort();
            c.dedup();
            c
        };
        let mut bins = Vec::new();
        let mut lower = BinBound::Min;
        for (i, cut) in cuts.iter().enumerate() {
            bins.push(BinInterval::new(lower, BinBound::Value(*cut as f64), format!("b{i}")));
            lower = BinBound::Value((*cut + 1) as f64);
        }
        bins.push(BinInterval::new(lower, BinBound::Max, "top"));
        let spec = PrimitiveSpec::bin(bins).unwrap();
        for x in inputs {
            prop_assert!(spec.apply(&Value::Integer(x)).is_ok(), "unbinned {x}");
        }
    }
}
