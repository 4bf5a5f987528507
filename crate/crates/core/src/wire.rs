//! On-disk bundle format: one directory per bug.
//!
//! | file                    | content                                          |
//! |-------------------------|--------------------------------------------------|
//! | `program.json`          | `{locations, scopes, entity_count_by_granularity?}` |
//! | `tests.json`            | `{outcomes: [{test_id, outcome, crashed}]}`      |
//! | `coverage.jsonl`        | `{test_id, locations: ["path:line", ...]}` per line |
//! | `mutants.jsonl`         | `{mutant_id, mutated_location, relations}` per line |
//! | `predicate_trials.jsonl`| one `PredicateTrial` per line                    |
//! | `stack_traces.jsonl`    | `{test_id, frames: [scope_id, ...]}` per line    |
//! | `edits.json`            | `{edits: [...]}`                                 |
//! | `meta.json`             | `{bug_id?, project?, category?}`                 |
//! | `timings.json`          | `{technique-or-family: seconds}`                 |
//!
//! The first three files are required. A missing optional evidence file makes
//! the techniques that need it unavailable; an empty one is valid evidence of
//! nothing. Unknown fields are ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::ground_truth::EditScript;
use crate::model::{
    CoverageRecord, CoverageSpectrum, Granularity, KillMatrix, Location, MutantRecord,
    PredicateTrial, ProgramModel, Scope, StackTrace, TestEvidence, TestOutcome,
};

pub const PROGRAM_FILE: &str = "program.json";
pub const TESTS_FILE: &str = "tests.json";
pub const COVERAGE_FILE: &str = "coverage.jsonl";
pub const MUTANTS_FILE: &str = "mutants.jsonl";
pub const TRIALS_FILE: &str = "predicate_trials.jsonl";
pub const TRACES_FILE: &str = "stack_traces.jsonl";
pub const EDITS_FILE: &str = "edits.json";
pub const META_FILE: &str = "meta.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// Free-form bug metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bug_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<String>,
    /// Project category label such as `cl`, `dev`, `ds` or `web`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

/// Everything stored in one bug directory.
#[derive(Debug, Clone, PartialEq)]
pub struct BugBundle {
    pub bug_id: String,
    pub evidence: TestEvidence,
    pub edits: Option<EditScript>,
    pub meta: Option<BugMeta>,
    /// Recorded analysis wall-clock seconds, keyed by technique or family id.
    pub timings: Option<BTreeMap<String, f64>>,
}

#[derive(Serialize, Deserialize)]
struct ProgramFile {
    locations: Vec<Location>,
    scopes: Vec<Scope>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    entity_count_by_granularity: BTreeMap<Granularity, u64>,
}

#[derive(Deserialize)]
struct TestsFileIn {
    outcomes: Vec<TestOutcome>,
}

#[derive(Serialize)]
struct TestsFileOut<'a> {
    outcomes: &'a [TestOutcome],
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Parses a whole-file JSON document.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, IngestError> {
    serde_json::from_str(text).map_err(|e| parse_error(path, e.line(), e.column(), e.to_string()))
}

/// Parses newline-delimited JSON, skipping blank lines. Errors report the
/// 1-based line of the offending record.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>, IngestError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| parse_error(path, i + 1, e.column(), e.to_string()))
        })
        .collect()
}

pub fn parse_program(text: &str, path: &Path) -> Result<ProgramModel, IngestError> {
    let file: ProgramFile = parse_json(text, path)?;
    Ok(ProgramModel::new(
        file.locations,
        file.scopes,
        file.entity_count_by_granularity,
    ))
}

pub fn parse_tests(text: &str, path: &Path) -> Result<Vec<TestOutcome>, IngestError> {
    if text.trim_start().starts_with('[') {
        parse_json(text, path)
    } else {
        parse_json::<TestsFileIn>(text, path).map(|file| file.outcomes)
    }
}

pub fn program_to_json(program: &ProgramModel) -> String {
    let file = ProgramFile {
        locations: program.locations().to_vec(),
        scopes: program.scopes().to_vec(),
        entity_count_by_granularity: program.declared_counts().clone(),
    };
    serde_json::to_string_pretty(&file).expect("program serializes")
}

pub fn tests_to_json(outcomes: &[TestOutcome]) -> String {
    serde_json::to_string_pretty(&TestsFileOut { outcomes }).expect("tests serialize")
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn read_text(path: &Path) -> Result<Option<String>, IngestError> {
    match fs::read(path) {
        Ok(bytes) => String::from_utf8(bytes).map(Some).map_err(|e| {
            let offset = e.utf8_error().valid_up_to();
            let prefix = &e.as_bytes()[..offset];
            let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = prefix.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            parse_error(path, line, offset - line_start + 1, format!("invalid UTF-8 at byte {offset}"))
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(IngestError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn read_required(path: PathBuf) -> Result<(String, PathBuf), IngestError> {
    match read_text(&path)? {
        Some(text) => Ok((text, path)),
        None => Err(IngestError::Missing { path }),
    }
}

fn read_optional<T>(
    path: PathBuf,
    parse: impl FnOnce(&str, &Path) -> Result<T, IngestError>,
) -> Result<Option<T>, IngestError> {
    read_text(&path)?.map(|text| parse(&text, &path)).transpose()
}

/// Reads a bundle directory. The bug id comes from `meta.json` when present,
/// otherwise from the directory name.
pub fn read_bundle(dir: &Path) -> Result<BugBundle, IngestError> {
    let (text, path) = read_required(dir.join(PROGRAM_FILE))?;
    let program = parse_program(&text, &path)?;
    let (text, path) = read_required(dir.join(TESTS_FILE))?;
    let outcomes = parse_tests(&text, &path)?;
    let (text, path) = read_required(dir.join(COVERAGE_FILE))?;
    let records: Vec<CoverageRecord> = parse_jsonl(&text, &path)?;

    let kill_matrix = read_optional(dir.join(MUTANTS_FILE), |t, p| {
        parse_jsonl::<MutantRecord>(t, p).map(|mutants| KillMatrix { mutants })
    })?;
    let predicate_trials = read_optional(dir.join(TRIALS_FILE), parse_jsonl::<PredicateTrial>)?;
    let stack_traces = read_optional(dir.join(TRACES_FILE), parse_jsonl::<StackTrace>)?;
    let edits = read_optional(dir.join(EDITS_FILE), parse_json::<EditScript>)?;
    let meta = read_optional(dir.join(META_FILE), parse_json::<BugMeta>)?;
    let timings = read_optional(dir.join(TIMINGS_FILE), parse_json::<BTreeMap<String, f64>>)?;

    let bug_id = meta
        .as_ref()
        .and_then(|m| m.bug_id.clone())
        .unwrap_or_else(|| {
            dir.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string())
        });

    Ok(BugBundle {
        bug_id,
        evidence: TestEvidence {
            program,
            outcomes,
            spectrum: CoverageSpectrum { records },
            kill_matrix,
            predicate_trials,
            stack_traces,
        },
        edits,
        meta,
        timings,
    })
}

/// Writes a bundle directory, creating it if needed. Optional parts that are
/// `None` produce no file.
pub fn write_bundle(bundle: &BugBundle, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let ev = &bundle.evidence;
    fs::write(dir.join(PROGRAM_FILE), program_to_json(&ev.program))?;
    fs::write(dir.join(TESTS_FILE), tests_to_json(&ev.outcomes))?;
    fs::write(dir.join(COVERAGE_FILE), to_jsonl(&ev.spectrum.records))?;
    if let Some(km) = &ev.kill_matrix {
        fs::write(dir.join(MUTANTS_FILE), to_jsonl(&km.mutants))?;
    }
    if let Some(trials) = &ev.predicate_trials {
        fs::write(dir.join(TRIALS_FILE), to_jsonl(trials))?;
    }
    if let Some(traces) = &ev.stack_traces {
        fs::write(dir.join(TRACES_FILE), to_jsonl(traces))?;
    }
    if let Some(edits) = &bundle.edits {
        fs::write(
            dir.join(EDITS_FILE),
            serde_json::to_string_pretty(edits).expect("edits serialize"),
        )?;
    }
    if let Some(meta) = &bundle.meta {
        fs::write(
            dir.join(META_FILE),
            serde_json::to_string_pretty(meta).expect("meta serializes"),
        )?;
    }
    if let Some(timings) = &bundle.timings {
        fs::write(
            dir.join(TIMINGS_FILE),
            serde_json::to_string_pretty(timings).expect("timings serialize"),
        )?;
    }
    Ok(())
}
