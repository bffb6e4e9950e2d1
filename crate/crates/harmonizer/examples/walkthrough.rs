//! Programmatic walkthrough: define a rule, run a job, replay it, and
//! check byte identity — the same workflow the CLI wraps.
//!
//! Run with: cargo run --example walkthrough

use std::sync::Arc;

use harmonizer::engine::{self, ErrorPolicy, HarmonizationJob, JobOptions, ReplayLog};
use harmonizer::io::write_data_to_string;
use harmonizer::model::{DataDictionary, DataElement, DataFile, Variable};
use harmonizer::primitives::{BinBound, BinInterval, CastType, PrimitiveSpec};
use harmonizer::rules::{serialize_rule, validate_rule, ElementRef, HarmonizationRule};
use harmonizer::values::{CodedValueSet, Value, ValueType};

fn main() {
    // A survey that records age as free text.
    let survey_dict = Arc::new(
        DataDictionary::new(
            "survey",
            vec![DataElement::new(
                "age_text",
                Variable::new("age").unwrap(),
                "What is your age?",
                ValueType::String,
            )
            .unwrap()],
        )
        .unwrap(),
    );
    let survey = DataFile::new(
        "wave1",
        Arc::clone(&survey_dict),
        ["23", "47", "31", "93"]
            .into_iter()
            .map(|age| vec![Value::text(age)])
            .collect(),
    )
    .unwrap();

    // The common representation: coded age ranges.
    let ranges = CodedValueSet::from_pairs([
        (0, "30 or Under"),
        (1, "31-40"),
        (2, "41-50"),
        (3, "51-60"),
        (4, "61-70"),
        (5, "Over 70"),
    ])
    .unwrap();
    let target = Arc::new(
        DataDictionary::new(
            "survey-harmonized",
            vec![DataElement::new(
                "age_range",
                Variable::new("age").unwrap(),
                "What is your age?",
                ValueType::Enum(ranges),
            )
            .unwrap()],
        )
        .unwrap(),
    );

    // Cast the text to an integer, then bin it into a range.
    let rule = HarmonizationRule::new(
        ElementRef::new("survey", "age_text").unwrap(),
        ElementRef::new("survey-harmonized", "age_range").unwrap(),
        vec![
            PrimitiveSpec::cast(CastType::String, CastType::Integer).unwrap(),
            PrimitiveSpec::bin(vec![
                BinInterval::new(BinBound::Min, BinBound::Value(30.0), "30 or Under"),
                BinInterval::new(BinBound::Value(31.0), BinBound::Value(40.0), "31-40"),
                BinInterval::new(BinBound::Value(41.0), BinBound::Value(50.0), "41-50"),
                BinInterval::new(BinBound::Value(51.0), BinBound::Value(60.0), "51-60"),
                BinInterval::new(BinBound::Value(61.0), BinBound::Value(70.0), "61-70"),
                BinInterval::new(BinBound::Value(71.0), BinBound::Max, "Over 70"),
            ])
            .unwrap(),
        ],
    )
    .unwrap();

    let report = validate_rule(&rule, &[Arc::clone(&survey_dict), Arc::clone(&target)]);
    assert!(report.is_empty(), "rule should validate: {report:?}");
    println!("rule:\n{}", serialize_rule(&rule));

    // Run the job: harmonize, integrate, log.
    let job = HarmonizationJob {
        inputs: vec![(survey.clone(), vec![rule])],
        target: Arc::clone(&target),
        options: JobOptions {
            error_policy: ErrorPolicy::FailFast,
            output_name: Some("integrated".into()),
        },
    };
    let output = engine::run_job(&job).unwrap();
    let csv = write_data_to_string(&output.integrated, &output.writer_config).unwrap();
    println!("integrated output:\n{csv}");
    println!("replay log:\n{}", output.log.to_ndjson());

    // Anyone holding the log and the original can reproduce the output
    // byte for byte.
    let log = ReplayLog::from_ndjson(&output.log.to_ndjson()).unwrap();
    let replayed = engine::replay(&log, &[survey], &target, "integrated").unwrap();
    let replayed_csv = write_data_to_string(&replayed.integrated, &replayed.writer_config).unwrap();
    assert_eq!(replayed_csv, csv);
    println!("replay is byte-identical");
}
