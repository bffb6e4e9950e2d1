//! Data-harmonization engine.
//!
//! Builds data transformations from parameterizable primitive operations,
//! composes them into harmonization rules between data elements, executes
//! them over tabular data files with automated replay logging, and replays
//! logged transformations byte-identically.
//!
//! The module layout follows the data flow:
//!
//! - [`values`]: the dynamic value universe and static types
//! - [`model`]: variables, data elements, data dictionaries, data files
//! - [`units`]: the unit catalog behind numeric unit conversion
//! - [`primitives`]: the nine parameterizable transformation primitives
//! - [`rules`]: rule anatomy, chain validation, canonical serialization
//! - [`store`]: file-backed rule storage queryable by element pair
//! - [`engine`]: batch execution, integration with provenance, replay
//! - [`io`]: CSV and dictionary ingestion, canonical byte-stable output

pub mod engine;
pub mod io;
pub mod model;
pub mod primitives;
pub mod rules;
pub mod store;
pub mod units;
pub mod values;

pub use engine::{ErrorPolicy, HarmonizationJob, JobOptions, LogEntry, ReplayLog};
pub use model::{DataDictionary, DataElement, DataFile, Variable};
pub use primitives::{PrimitiveKind, PrimitiveSpec};
pub use rules::{ElementRef, HarmonizationRule};
pub use store::RuleStore;
pub use values::{CodedValue, CodedValueSet, Value, ValueType};
