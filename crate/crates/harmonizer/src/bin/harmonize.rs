//! Command-line front end for validation, harmonization, rule storage, and
//! replay workflows.
//!
//! Exit codes: 0 on success, 1 on a domain failure (rule validation errors,
//! job configuration problems, data errors, verification mismatch), 2 on an
//! environment failure (unreadable paths, malformed documents).

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use harmonizer::engine::{
    self, EngineError, ErrorPolicy, HarmonizationJob, JobOptions, ReplayLog,
};
use harmonizer::io::{csv_header_from_str, read_dictionary, sha256_hex, write_data_to_string};
use harmonizer::model::{DataDictionary, DataFile};
use harmonizer::rules::{
    deserialize_rules, serialize_rule, validate_rule, ElementRef, HarmonizationRule,
};
use harmonizer::store::RuleStore;

#[derive(Parser)]
#[command(name = "harmonize", version, about = "Harmonize tabular data files with composable, replayable transformation rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit machine-readable JSON instead of human text.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print extra progress detail.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum PolicyArg {
    #[default]
    FailFast,
    Collect,
}

impl From<PolicyArg> for ErrorPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::FailFast => ErrorPolicy::FailFast,
            PolicyArg::Collect => ErrorPolicy::Collect,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check harmonization rules against data dictionaries.
    Validate {
        /// Dictionary JSON files or directories of them.
        #[arg(long, num_args = 1.., required = true)]
        dictionaries: Vec<PathBuf>,
        /// Rule files (single or batch documents) or directories of them.
        #[arg(long, num_args = 1.., required = true)]
        rules: Vec<PathBuf>,
    },
    /// Harmonize input files against a target dictionary and integrate
    /// them into one output with provenance columns.
    Harmonize(HarmonizeArgs),
    /// Re-execute a replay log against the original data files.
    Replay(ReplayArgs),
    /// Inspect or update a rule store.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
}

#[derive(Args)]
struct HarmonizeArgs {
    /// Input CSV files ("-" reads a single input from stdin).
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<String>,
    /// Dictionary JSON files or directories of them.
    #[arg(long, num_args = 1.., required = true)]
    dictionaries: Vec<PathBuf>,
    /// Rule files or directories of them.
    #[arg(long, num_args = 0..)]
    rules: Vec<PathBuf>,
    /// Rule store to draw rules from.
    #[arg(long, env = "HARMONIZE_STORE")]
    store: Option<PathBuf>,
    /// Target dictionary: a path or the name of a loaded dictionary.
    #[arg(long)]
    target: String,
    /// Output CSV path ("-" writes to stdout).
    #[arg(long)]
    output: String,
    /// Replay log path (newline-delimited JSON), appended to if present.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    error_policy: PolicyArg,
    /// Render enum cells as labels instead of codes (export only; label
    /// output is excluded from replay comparison).
    #[arg(long)]
    labels: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// Replay log written by a previous harmonize run.
    #[arg(long)]
    log: PathBuf,
    /// Original data files or directories of them, in the original job's
    /// input order (directories expand in lexicographic order).
    #[arg(long, num_args = 1.., required = true)]
    originals: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    dictionaries: Vec<PathBuf>,
    /// Target dictionary: a path or the name of a loaded dictionary.
    #[arg(long)]
    target: String,
    /// Where to write the replayed output.
    #[arg(long)]
    output: PathBuf,
    /// Compare the replayed output byte-for-byte against a prior output.
    #[arg(long)]
    verify: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RulesAction {
    /// List stored rules as "source -> target" pairs.
    List {
        #[arg(long, env = "HARMONIZE_STORE")]
        store: PathBuf,
        /// Filter by source: "dictionary/element" or a bare element name.
        #[arg(long)]
        source: Option<String>,
        /// Filter by target: "dictionary/element" or a bare element name.
        #[arg(long)]
        target: Option<String>,
    },
    /// Print the canonical serialization of matching rules.
    Show {
        #[arg(long, env = "HARMONIZE_STORE")]
        store: PathBuf,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Store rules from rule files.
    Put {
        #[arg(long, env = "HARMONIZE_STORE")]
        store: PathBuf,
        /// Rule files (single or batch documents).
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Failure classified by exit code.
enum Failure {
    /// Exit 1: the domain said no.
    Domain(String),
    /// Exit 2: the environment said no.
    Env(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Env(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Env(m) => m,
        }
    }
}

fn env_err(e: impl std::fmt::Display) -> Failure {
    Failure::Env(e.to_string())
}

fn engine_failure(e: EngineError) -> Failure {
    match e {
        EngineError::MissingOriginal(_) | EngineError::LogParse { .. } => {
            Failure::Env(e.to_string())
        }
        other => Failure::Domain(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let result = match cli.command {
        Command::Validate { dictionaries, rules } => cmd_validate(dictionaries, rules, format),
        Command::Harmonize(args) => cmd_harmonize(args, format, cli.verbose),
        Command::Replay(args) => cmd_replay(args, format),
        Command::Rules { action } => cmd_rules(action, format),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            if format == Format::Json {
                println!("{}", json!({ "error": failure.message() }));
            }
            ExitCode::from(failure.code())
        }
    }
}

// ---------------------------------------------------------------------------
// Shared loading helpers
// ---------------------------------------------------------------------------

/// Expand files and directories into a sorted file list. Directories
/// contribute their entries with the given suffix, sorted by name.
fn expand_paths(paths: &[PathBuf], suffix: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| env_err(format!("{}: {e}", path.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.to_string_lossy().ends_with(suffix))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

fn load_dictionaries(paths: &[PathBuf]) -> Result<Vec<Arc<DataDictionary>>, Failure> {
    let files = expand_paths(paths, ".json")?;
    if files.is_empty() {
        return Err(Failure::Env("no dictionary files found".into()));
    }
    let mut dictionaries = Vec::new();
    for file in files {
        let dict = read_dictionary(&file).map_err(env_err)?;
        if dictionaries
            .iter()
            .any(|d: &Arc<DataDictionary>| d.name() == dict.name())
        {
            return Err(Failure::Env(format!(
                "duplicate dictionary name {:?}",
                dict.name()
            )));
        }
        dictionaries.push(Arc::new(dict));
    }
    Ok(dictionaries)
}

/// Resolve the target dictionary from a path or a loaded dictionary name.
fn resolve_target(
    spec: &str,
    dictionaries: &mut Vec<Arc<DataDictionary>>,
) -> Result<Arc<DataDictionary>, Failure> {
    if Path::new(spec).is_file() {
        let dict = Arc::new(read_dictionary(spec).map_err(env_err)?);
        if let Some(existing) = dictionaries.iter().find(|d| d.name() == dict.name()) {
            return Ok(Arc::clone(existing));
        }
        dictionaries.push(Arc::clone(&dict));
        return Ok(dict);
    }
    dictionaries
        .iter()
        .find(|d| d.name() == spec)
        .cloned()
        .ok_or_else(|| {
            Failure::Env(format!(
                "target {spec:?} is neither a readable file nor a loaded dictionary name"
            ))
        })
}

fn load_rule_files(paths: &[PathBuf]) -> Result<Vec<(PathBuf, String)>, Failure> {
    let files = expand_paths(paths, ".json")?;
    let mut out = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file)
            .map_err(|e| env_err(format!("{}: {e}", file.display())))?;
        out.push((file, text));
    }
    Ok(out)
}

/// Pick the dictionary whose element names equal the CSV header, then read
/// the file against it.
fn read_input(
    name_hint: &str,
    text: &str,
    origin: &str,
    dictionaries: &[Arc<DataDictionary>],
) -> Result<DataFile, Failure> {
    let header = csv_header_from_str(text, origin).map_err(env_err)?;
    let header_set: BTreeSet<&str> = header.iter().map(|s| s.as_str()).collect();
    let matches: Vec<&Arc<DataDictionary>> = dictionaries
        .iter()
        .filter(|d| {
            let names: BTreeSet<&str> = d.elements().iter().map(|e| e.name()).collect();
            names == header_set
        })
        .collect();
    match matches.as_slice() {
        [dict] => {
            harmonizer::io::read_data_from_str(name_hint, text, dict, origin).map_err(env_err)
        }
        [] => Err(Failure::Env(format!(
            "{origin}: no loaded dictionary matches columns {header:?}"
        ))),
        many => Err(Failure::Env(format!(
            "{origin}: columns match more than one dictionary: {:?}",
            many.iter().map(|d| d.name()).collect::<Vec<_>>()
        ))),
    }
}

fn read_input_path(path: &Path, dictionaries: &[Arc<DataDictionary>]) -> Result<DataFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| env_err(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_input(&name, &text, &path.display().to_string(), dictionaries)
}

fn parse_ref_filter(spec: &str) -> Result<RefFilter, Failure> {
    if let Some((dictionary, element)) = spec.split_once('/') {
        let r = ElementRef::new(dictionary, element)
            .map_err(|e| Failure::Env(e.to_string()))?;
        Ok(RefFilter::Exact(r))
    } else {
        Ok(RefFilter::ElementName(spec.to_string()))
    }
}

enum RefFilter {
    Exact(ElementRef),
    ElementName(String),
}

impl RefFilter {
    fn matches(&self, r: &ElementRef) -> bool {
        match self {
            RefFilter::Exact(want) => want == r,
            RefFilter::ElementName(name) => &r.element == name,
        }
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(
    dictionaries: Vec<PathBuf>,
    rules: Vec<PathBuf>,
    format: Format,
) -> Result<ExitCode, Failure> {
    let dictionaries = load_dictionaries(&dictionaries)?;
    let rule_files = load_rule_files(&rules)?;
    if rule_files.is_empty() {
        return Err(Failure::Env("no rule files found".into()));
    }

    let mut all_valid = true;
    let mut report = Vec::new();
    for (path, text) in &rule_files {
        let parsed = deserialize_rules(text)
            .map_err(|e| env_err(format!("{}: {e}", path.display())))?;
        for (idx, rule) in parsed.iter().enumerate() {
            let violations = validate_rule(rule, &dictionaries);
            let valid = violations.is_empty();
            all_valid &= valid;
            report.push((path.clone(), idx + 1, rule.clone(), violations));
        }
    }

    match format {
        Format::Text => {
            for (path, idx, rule, violations) in &report {
                let label = format!(
                    "{}#{idx}: {} -> {}",
                    path.display(),
                    rule.source(),
                    rule.target()
                );
                if violations.is_empty() {
                    println!("ok   {label}");
                } else {
                    println!("FAIL {label}");
                    for v in violations {
                        println!("     - {v}");
                    }
                }
            }
        }
        Format::Json => {
            let rules_json: Vec<_> = report
                .iter()
                .map(|(path, idx, rule, violations)| {
                    json!({
                        "file": path.display().to_string(),
                        "rule": idx,
                        "source": rule.source().to_string(),
                        "target": rule.target().to_string(),
                        "valid": violations.is_empty(),
                        "violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!("{}", json!({ "valid": all_valid, "rules": rules_json }));
        }
    }
    Ok(if all_valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

// ---------------------------------------------------------------------------
// harmonize
// ---------------------------------------------------------------------------

fn cmd_harmonize(args: HarmonizeArgs, format: Format, verbose: bool) -> Result<ExitCode, Failure> {
    let mut dictionaries = load_dictionaries(&args.dictionaries)?;
    let target = resolve_target(&args.target, &mut dictionaries)?;

    // Gather candidate rules from files and the store.
    let mut rules: Vec<HarmonizationRule> = Vec::new();
    for (path, text) in load_rule_files(&args.rules)? {
        let parsed = deserialize_rules(&text)
            .map_err(|e| env_err(format!("{}: {e}", path.display())))?;
        rules.extend(parsed);
    }
    if let Some(store_path) = &args.store {
        let store = RuleStore::open(store_path).map_err(env_err)?;
        rules.extend(store.all().map_err(env_err)?);
    }
    // The same rule may arrive from both a file and the store.
    let mut unique: Vec<HarmonizationRule> = Vec::new();
    for rule in rules {
        if !unique.contains(&rule) {
            unique.push(rule);
        }
    }
    let rules = unique;

    // Read inputs, matching each to its dictionary by header.
    if args.inputs.iter().filter(|p| p.as_str() == "-").count() > 1 {
        return Err(Failure::Env("stdin (\"-\") can be used for at most one input".into()));
    }
    let mut files = Vec::new();
    for input in &args.inputs {
        let file = if input == "-" {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(env_err)?;
            read_input("stdin", &text, "stdin", &dictionaries)?
        } else {
            read_input_path(Path::new(input), &dictionaries)?
        };
        files.push(file);
    }

    // Pair each file with the rules that apply to it.
    let inputs: Vec<(DataFile, Vec<HarmonizationRule>)> = files
        .into_iter()
        .map(|file| {
            let applicable: Vec<HarmonizationRule> = rules
                .iter()
                .filter(|r| {
                    r.source().dictionary == file.dictionary().name()
                        && file.dictionary().position_of(&r.source().element).is_some()
                        && r.target().dictionary == target.name()
                })
                .cloned()
                .collect();
            (file, applicable)
        })
        .collect();

    let output_name = match args.output.as_str() {
        "-" => "integrated".to_string(),
        path => Path::new(path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "integrated".into()),
    };
    let job = HarmonizationJob {
        inputs,
        target,
        options: JobOptions {
            error_policy: args.error_policy.into(),
            output_name: Some(output_name),
        },
    };
    let output = engine::run_job(&job).map_err(engine_failure)?;

    let mut config = output.writer_config.clone();
    config.labels = args.labels;
    let text = write_data_to_string(&output.integrated, &config).map_err(env_err)?;
    if args.output == "-" {
        print!("{text}");
    } else {
        std::fs::write(&args.output, &text)
            .map_err(|e| env_err(format!("{}: {e}", args.output)))?;
    }
    if let Some(log_path) = &args.log {
        std::fs::write(log_path, output.log.to_ndjson())
            .map_err(|e| env_err(format!("{}: {e}", log_path.display())))?;
    }

    let had_cell_errors = output.reports.iter().any(|r| !r.cell_errors.is_empty());
    match format {
        Format::Text => {
            for report in &output.reports {
                eprintln!(
                    "{}: {} rows, {} rules applied{}",
                    report.dataset,
                    report.rows,
                    report.rules_applied,
                    if report.dropped_columns.is_empty() {
                        String::new()
                    } else {
                        format!(", dropped columns {:?}", report.dropped_columns)
                    }
                );
                for err in &report.cell_errors {
                    eprintln!("  cell error: {err}");
                }
            }
            if verbose {
                eprintln!(
                    "integrated {} rows into {}",
                    output.integrated.row_count(),
                    args.output
                );
            }
        }
        Format::Json => {
            let reports: Vec<_> = output
                .reports
                .iter()
                .map(|r| {
                    json!({
                        "dataset": r.dataset,
                        "rows": r.rows,
                        "rules_applied": r.rules_applied,
                        "dropped_columns": r.dropped_columns,
                        "cell_errors": r.cell_errors.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!(
                "{}",
                json!({
                    "output": args.output,
                    "rows": output.integrated.row_count(),
                    "log_entries": output.log.entries().len(),
                    "files": reports,
                })
            );
        }
    }
    Ok(if had_cell_errors {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

fn cmd_replay(args: ReplayArgs, format: Format) -> Result<ExitCode, Failure> {
    let mut dictionaries = load_dictionaries(&args.dictionaries)?;
    let target = resolve_target(&args.target, &mut dictionaries)?;
    let log_text = std::fs::read_to_string(&args.log)
        .map_err(|e| env_err(format!("{}: {e}", args.log.display())))?;
    let log = ReplayLog::from_ndjson(&log_text).map_err(engine_failure)?;

    let original_paths = expand_paths(&args.originals, ".csv")?;
    let mut originals = Vec::new();
    for path in &original_paths {
        originals.push(read_input_path(path, &dictionaries)?);
    }

    let replayed = engine::replay(&log, &originals, &target, "integrated").map_err(engine_failure)?;
    let text = write_data_to_string(&replayed.integrated, &replayed.writer_config).map_err(env_err)?;
    std::fs::write(&args.output, &text)
        .map_err(|e| env_err(format!("{}: {e}", args.output.display())))?;

    let verdict = match &args.verify {
        Some(reference) => {
            let reference_bytes = std::fs::read(reference)
                .map_err(|e| env_err(format!("{}: {e}", reference.display())))?;
            Some(reference_bytes == text.as_bytes())
        }
        None => None,
    };

    match format {
        Format::Text => {
            match verdict {
                Some(true) => println!("MATCH"),
                Some(false) => println!("MISMATCH"),
                None => println!(
                    "replayed {} rows into {}",
                    replayed.integrated.row_count(),
                    args.output.display()
                ),
            }
        }
        Format::Json => {
            println!(
                "{}",
                json!({
                    "output": args.output.display().to_string(),
                    "rows": replayed.integrated.row_count(),
                    "checksum": sha256_hex(text.as_bytes()),
                    "verify": verdict.map(|v| if v { "match" } else { "mismatch" }),
                })
            );
        }
    }
    Ok(match verdict {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

// ---------------------------------------------------------------------------
// rules
// ---------------------------------------------------------------------------

fn cmd_rules(action: RulesAction, format: Format) -> Result<ExitCode, Failure> {
    match action {
        RulesAction::List { store, source, target } => {
            let rules = query_store(&store, source.as_deref(), target.as_deref())?;
            match format {
                Format::Text => {
                    for rule in &rules {
                        println!("{} -> {}", rule.source(), rule.target());
                    }
                }
                Format::Json => {
                    let listed: Vec<_> = rules
                        .iter()
                        .map(|r| {
                            json!({
                                "source": r.source().to_string(),
                                "target": r.target().to_string(),
                                "operations": r.operations().len(),
                            })
                        })
                        .collect();
                    println!("{}", json!({ "rules": listed }));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        RulesAction::Show { store, source, target } => {
            let rules = query_store(&store, source.as_deref(), target.as_deref())?;
            match format {
                Format::Text => {
                    for rule in &rules {
                        print!("{}", serialize_rule(rule));
                    }
                }
                Format::Json => {
                    let docs: Vec<_> = rules.iter().map(harmonizer::rules::rule_to_json).collect();
                    println!("{}", json!({ "rules": docs }));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        RulesAction::Put { store, files } => {
            let mut open = RuleStore::open(&store).map_err(env_err)?;
            let mut stored = Vec::new();
            for path in &files {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| env_err(format!("{}: {e}", path.display())))?;
                let parsed = deserialize_rules(&text)
                    .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
                for rule in parsed {
                    let outcome = open.put(&rule).map_err(env_err)?;
                    stored.push((rule, outcome));
                }
            }
            match format {
                Format::Text => {
                    for (rule, outcome) in &stored {
                        println!(
                            "stored {} -> {} ({}{})",
                            rule.source(),
                            rule.target(),
                            &outcome.hash[..12],
                            if outcome.overwrote { ", replaced previous" } else { "" }
                        );
                    }
                }
                Format::Json => {
                    let entries: Vec<_> = stored
                        .iter()
                        .map(|(rule, outcome)| {
                            json!({
                                "source": rule.source().to_string(),
                                "target": rule.target().to_string(),
                                "hash": outcome.hash,
                                "overwrote": outcome.overwrote,
                            })
                        })
                        .collect();
                    println!("{}", json!({ "stored": entries }));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn query_store(
    store: &Path,
    source: Option<&str>,
    target: Option<&str>,
) -> Result<Vec<HarmonizationRule>, Failure> {
    let open = RuleStore::open(store).map_err(env_err)?;
    let source = source.map(parse_ref_filter).transpose()?;
    let target = target.map(parse_ref_filter).transpose()?;
    let rules = open
        .all()
        .map_err(env_err)?
        .into_iter()
        .filter(|r| source.as_ref().is_none_or(|f| f.matches(r.source())))
        .filter(|r| target.as_ref().is_none_or(|f| f.matches(r.target())))
        .collect();
    Ok(rules)
}
