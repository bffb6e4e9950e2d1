//! Regenerates the repository fixtures under `fixtures/`.
//!
//! The survey file carries a fixed set of ten records; the two cohort files
//! are synthetic, drawn from a seeded generator so regeneration is
//! reproducible. Dictionaries and rules are written through the library's
//! canonical writers.
//!
//! Run with: cargo run --example gen_fixtures

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harmonizer::io::{write_data_file, write_dictionary, CanonicalWriterConfig};
use harmonizer::model::{DataDictionary, DataElement, DataFile, Variable};
use harmonizer::primitives::{BinBound, BinInterval, CastType, PrimitiveSpec};
use harmonizer::rules::{serialize_rule, ElementRef, HarmonizationRule};
use harmonizer::units::Unit;
use harmonizer::values::{CodedValueSet, Value, ValueType};

fn element(name: &str, variable: &str, prompt: &str, ty: ValueType) -> DataElement {
    DataElement::new(name, Variable::new(variable).unwrap(), prompt, ty).unwrap()
}

fn codes(pairs: &[(i64, &str)]) -> CodedValueSet {
    CodedValueSet::from_pairs(pairs.iter().map(|(c, l)| (*c, l.to_string()))).unwrap()
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let dictionaries = root.join("dictionaries");
    let data = root.join("data");
    let rules = root.join("rules");
    for dir in [&dictionaries, &data, &rules] {
        std::fs::create_dir_all(dir).expect("create fixture directories");
    }

    // --- population health survey ------------------------------------
    let sex = codes(&[
        (0, "Female"),
        (1, "Male"),
        (2, "Intersex"),
        (3, "Prefer not to answer"),
    ]);
    let vaccination = codes(&[
        (0, "Yes"),
        (1, "No"),
        (2, "Do not know"),
        (3, "Prefer not to answer"),
    ]);
    let survey_dict = Arc::new(
        DataDictionary::new(
            "health-survey",
            vec![
                element("record_id", "record id", "Record identifier", ValueType::Integer),
                element("age_text", "age", "What is your age?", ValueType::String),
                element(
                    "sex",
                    "sex assigned at birth",
                    "What is your biological sex assigned at birth?",
                    ValueType::Enum(sex),
                ),
                element(
                    "cov19_vaccination_status",
                    "COVID-19 vaccination status",
                    "Are you vaccinated against COVID-19?",
                    ValueType::Enum(vaccination),
                ),
            ],
        )
        .unwrap(),
    );

    let age_range = codes(&[
        (0, "30 or Under"),
        (1, "31-40"),
        (2, "41-50"),
        (3, "51-60"),
        (4, "61-70"),
        (5, "Over 70"),
    ]);
    let age_target = DataDictionary::new(
        "age-harmonized",
        vec![element(
            "age_range",
            "age",
            "What is your age?",
            ValueType::Enum(age_range),
        )],
    )
    .unwrap();

    let survey_rows: Vec<(i64, &str, i64, i64)> = vec![
        (1, "23", 1, 0),
        (2, "47", 1, 0),
        (3, "31", 0, 0),
        (4, "56", 1, 1),
        (5, "23", 0, 0),
        (6, "45", 0, 3),
        (7, "68", 3, 0),
        (8, "25", 1, 0),
        (9, "34", 1, 1),
        (10, "93", 0, 0),
    ];
    let survey = DataFile::new(
        "survey",
        Arc::clone(&survey_dict),
        survey_rows
            .into_iter()
            .map(|(id, age, sex, vax)| {
                vec![
                    Value::Integer(id),
                    Value::text(age),
                    Value::EnumCode(sex),
                    Value::EnumCode(vax),
                ]
            })
            .collect(),
    )
    .unwrap();

    let age_rule = HarmonizationRule::new(
        ElementRef::new("health-survey", "age_text").unwrap(),
        ElementRef::new("age-harmonized", "age_range").unwrap(),
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

    // --- employment surveys --------------------------------------------
    let employment_a = codes(&[
        (0, "Employed full-time"),
        (1, "Employed part-time"),
        (2, "Unemployed"),
        (3, "Retired"),
        (4, "Student"),
        (5, "Prefer not to answer"),
    ]);
    let cohort_a_dict = Arc::new(
        DataDictionary::new(
            "employment-survey-a",
            vec![
                element(
                    "current_employment_status",
                    "employment status",
                    "What is your current employment status?",
                    ValueType::Enum(employment_a),
                ),
                element(
                    "commute_distance_miles",
                    "commute distance",
                    "How far is your commute, in miles?",
                    ValueType::Decimal,
                ),
            ],
        )
        .unwrap(),
    );

    let employment_b = codes(&[
        (1, "Working"),
        (2, "Not working"),
        (3, "Retired"),
        (9, "Prefer not to answer"),
    ]);
    let cohort_b_dict = Arc::new(
        DataDictionary::new(
            "employment-survey-b",
            vec![
                element(
                    "employment",
                    "employment status",
                    "Are you currently working?",
                    ValueType::Enum(employment_b),
                ),
                element(
                    "commute_distance_km",
                    "commute distance",
                    "How far is your commute, in kilometers?",
                    ValueType::Decimal,
                ),
            ],
        )
        .unwrap(),
    );

    let nih_employment = codes(&[
        (1, "Employed"),
        (2, "Unemployed"),
        (3, "Retired"),
        (4, "Student"),
        (5, "Prefer not to answer"),
    ]);
    let nih_target = DataDictionary::new(
        "nih-harmonized",
        vec![
            element(
                "nih_employment",
                "employment status",
                "What is your current employment status?",
                ValueType::Enum(nih_employment),
            ),
            element(
                "commute_distance_miles",
                "commute distance",
                "How far is your commute, in miles?",
                ValueType::Decimal,
            ),
        ],
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let tenths = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| (rng.gen_range(lo..=hi) as f64) / 10.0;

    let a_codes = [0i64, 1, 2, 3, 4, 5];
    let cohort_a_rows: Vec<Vec<Value>> = (0..8)
        .map(|_| {
            vec![
                Value::EnumCode(a_codes[rng.gen_range(0..a_codes.len())]),
                Value::Decimal(tenths(&mut rng, 5, 450)),
            ]
        })
        .collect();
    let cohort_a = DataFile::new("cohort-a", Arc::clone(&cohort_a_dict), cohort_a_rows).unwrap();

    let b_codes = [1i64, 2, 3, 9];
    let cohort_b_rows: Vec<Vec<Value>> = (0..7)
        .map(|i| {
            let distance = if i == 0 {
                // spot-check row: exactly 10 km
                Value::Decimal(10.0)
            } else {
                Value::Decimal(tenths(&mut rng, 5, 700))
            };
            vec![
                Value::EnumCode(b_codes[rng.gen_range(0..b_codes.len())]),
                distance,
            ]
        })
        .collect();
    let cohort_b = DataFile::new("cohort-b", Arc::clone(&cohort_b_dict), cohort_b_rows).unwrap();

    let rule_employment_a = HarmonizationRule::new(
        ElementRef::new("employment-survey-a", "current_employment_status").unwrap(),
        ElementRef::new("nih-harmonized", "nih_employment").unwrap(),
        vec![PrimitiveSpec::enum_to_enum([(0, 1), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5)]).unwrap()],
    )
    .unwrap();
    let rule_employment_b = HarmonizationRule::new(
        ElementRef::new("employment-survey-b", "employment").unwrap(),
        ElementRef::new("nih-harmonized", "nih_employment").unwrap(),
        vec![PrimitiveSpec::enum_to_enum([(1, 1), (2, 2), (3, 3), (9, 5)]).unwrap()],
    )
    .unwrap();
    let rule_commute = HarmonizationRule::new(
        ElementRef::new("employment-survey-b", "commute_distance_km").unwrap(),
        ElementRef::new("nih-harmonized", "commute_distance_miles").unwrap(),
        vec![
            PrimitiveSpec::convert_units(Unit::Kilometer, Unit::Mile).unwrap(),
            PrimitiveSpec::round(2).unwrap(),
        ],
    )
    .unwrap();

    // --- write everything ----------------------------------------------
    let write_dict = |dict: &DataDictionary, file: &str| {
        write_dictionary(dict, dictionaries.join(file)).expect("write dictionary");
    };
    write_dict(&survey_dict, "health-survey.dictionary.json");
    write_dict(&age_target, "age-harmonized.dictionary.json");
    write_dict(&cohort_a_dict, "employment-survey-a.dictionary.json");
    write_dict(&cohort_b_dict, "employment-survey-b.dictionary.json");
    write_dict(&nih_target, "nih-harmonized.dictionary.json");

    let config = CanonicalWriterConfig::default();
    write_data_file(&survey, &config, data.join("survey.csv")).expect("write survey");
    write_data_file(&cohort_a, &config, data.join("cohort-a.csv")).expect("write cohort-a");
    write_data_file(&cohort_b, &config, data.join("cohort-b.csv")).expect("write cohort-b");

    let write_rule = |rule: &HarmonizationRule, file: &str| {
        std::fs::write(rules.join(file), serialize_rule(rule)).expect("write rule");
    };
    write_rule(&age_rule, "age_text-to-age_range.rule.json");
    write_rule(&rule_employment_a, "employment-a-to-nih.rule.json");
    write_rule(&rule_employment_b, "employment-b-to-nih.rule.json");
    write_rule(&rule_commute, "commute-km-to-miles.rule.json");

    println!("fixtures written to {}", root.display());
}
