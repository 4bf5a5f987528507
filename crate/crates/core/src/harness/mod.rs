//! Corpus driver: evaluates every technique on every bug bundle under a
//! corpus root and writes per-bug results, summaries and pairwise reports.

mod report;
mod summary;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ground_truth::{classify_bug, derive_ground_truth, BugKind};
use crate::metrics::{aggregate_granularity, evaluate, EvaluationRecord};
use crate::model::Granularity;
use crate::technique::{run_technique, Technique};
use crate::validate::validate_evidence;
use crate::wire::{read_bundle, BugBundle, PROGRAM_FILE};

pub use report::{
    compare, effectiveness_relation, efficiency_relation, pairwise_report, Comparison, Metric,
    PairwiseReport, Relation,
};
pub use summary::{subset_report, summarize, RowKind, Subset, SummaryRow};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    pub techniques: Vec<Technique>,
    pub granularities: Vec<Granularity>,
    pub output_dir: PathBuf,
    pub weights: BTreeMap<Technique, f64>,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Unavailable,
    Error(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::Unavailable => f.write_str("unavailable"),
            RowStatus::Error(msg) => write!(f, "error:{}", msg.replace(['\n', '\r'], " ")),
        }
    }
}

/// One (bug, technique, granularity) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub bug_id: String,
    pub technique: Technique,
    pub granularity: Granularity,
    pub record: Option<EvaluationRecord>,
    /// Recorded evidence-collection time for the technique.
    pub seconds: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BugResult {
    pub bug_id: String,
    pub kind: Option<BugKind>,
    pub category: Option<String>,
    pub rows: Vec<ResultRow>,
}

impl BugResult {
    pub fn has_errors(&self) -> bool {
        self.rows
            .iter()
            .any(|r| matches!(r.status, RowStatus::Error(_)))
    }
}

/// Results CSV record, also used to read results back for comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultCsvRow {
    pub bug_id: String,
    pub technique: String,
    pub granularity: String,
    pub e_inspect: Option<f64>,
    pub gen_e_inspect: Option<f64>,
    pub exam: Option<f64>,
    pub at1: Option<bool>,
    pub at3: Option<bool>,
    pub at5: Option<bool>,
    pub at10: Option<bool>,
    pub list_length: Option<usize>,
    pub seconds: Option<f64>,
    pub status: String,
}

impl From<&ResultRow> for ResultCsvRow {
    fn from(row: &ResultRow) -> Self {
        let rec = row.record.as_ref();
        Self {
            bug_id: row.bug_id.clone(),
            technique: row.technique.id().to_string(),
            granularity: row.granularity.to_string(),
            e_inspect: rec.and_then(|r| r.e_inspect),
            gen_e_inspect: rec.map(|r| r.generalized_e_inspect),
            exam: rec.and_then(|r| r.exam_score),
            at1: rec.map(|r| r.at(1)),
            at3: rec.map(|r| r.at(3)),
            at5: rec.map(|r| r.at(5)),
            at10: rec.map(|r| r.at(10)),
            list_length: rec.map(|r| r.list_length),
            seconds: row.seconds,
            status: row.status.to_string(),
        }
    }
}

/// Bundle directories under `root`, sorted by path. A root that is itself a
/// bundle yields just itself.
pub fn discover_bundles(root: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !root.is_dir() {
        bail!("corpus root {} is not a directory", root.display());
    }
    if root.join(PROGRAM_FILE).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).with_context(|| format!("reading {}", root.display()))? {
        let path = entry?.path();
        if path.is_dir() && path.join(PROGRAM_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Recorded time for `technique`: its own entry, else its family's entry.
/// A fusion technique sums its members and is unknown if any member is.
fn recorded_seconds(bundle: &BugBundle, technique: Technique) -> Option<f64> {
    let timings = bundle.timings.as_ref()?;
    let lookup = |t: Technique| {
        timings
            .get(t.id())
            .or_else(|| t.family().and_then(|f| timings.get(f.id())))
            .copied()
    };
    match technique {
        Technique::AvgflA | Technique::AvgflS => {
            let config = match technique {
                Technique::AvgflA => crate::fusion::FusionConfig::avgfl_a(),
                _ => crate::fusion::FusionConfig::avgfl_s(),
            };
            config.members.iter().map(|&m| lookup(m)).sum()
        }
        base => lookup(base),
    }
}

fn failed_rows(
    bug_id: &str,
    techniques: &[Technique],
    granularities: &[Granularity],
    status: RowStatus,
) -> Vec<ResultRow> {
    techniques
        .iter()
        .flat_map(|&technique| {
            let status = status.clone();
            granularities.iter().map(move |&granularity| ResultRow {
                bug_id: bug_id.to_string(),
                technique,
                granularity,
                record: None,
                seconds: None,
                status: status.clone(),
            })
        })
        .collect()
}

/// Evaluates one loaded bundle.
pub fn evaluate_bundle(
    bundle: &BugBundle,
    techniques: &[Technique],
    granularities: &[Granularity],
    weights: &BTreeMap<Technique, f64>,
) -> BugResult {
    let bug_id = bundle.bug_id.clone();
    let category = bundle.meta.as_ref().and_then(|m| m.category.clone());
    let fail = |msg: String| BugResult {
        bug_id: bug_id.clone(),
        kind: None,
        category: category.clone(),
        rows: failed_rows(&bug_id, techniques, granularities, RowStatus::Error(msg)),
    };

    let report = validate_evidence(&bundle.evidence);
    if let Some(first) = report.violations.first() {
        return fail(format!("invalid bundle: {first}"));
    }
    let Some(edits) = &bundle.edits else {
        return fail("no edit script".to_string());
    };
    let program = &bundle.evidence.program;
    let truth = match derive_ground_truth(edits, program) {
        Ok(truth) => truth,
        Err(e) => return fail(e.to_string()),
    };
    let kind = classify_bug(&truth, &bundle.evidence);

    let mut rows = Vec::with_capacity(techniques.len() * granularities.len());
    for &technique in techniques {
        let seconds = recorded_seconds(bundle, technique);
        let statement_list = run_technique(technique, &bundle.evidence, weights);
        for &granularity in granularities {
            let (record, status) = match &statement_list {
                Ok(list) => match aggregate_granularity(list, program, granularity) {
                    Ok(list) => (Some(evaluate(&list, &truth, program, seconds)), RowStatus::Ok),
                    Err(e) => (None, RowStatus::Error(e.to_string())),
                },
                Err(Error::TechniqueUnavailable { .. }) => (None, RowStatus::Unavailable),
                Err(e) => (None, RowStatus::Error(e.to_string())),
            };
            rows.push(ResultRow {
                bug_id: bug_id.clone(),
                technique,
                granularity,
                record,
                seconds,
                status,
            });
        }
    }
    BugResult {
        bug_id,
        kind: Some(kind),
        category,
        rows,
    }
}

fn evaluate_dir(dir: &Path, config: &RunConfig) -> BugResult {
    match read_bundle(dir) {
        Ok(bundle) => evaluate_bundle(&bundle, &config.techniques, &config.granularities, &config.weights),
        Err(e) => {
            let bug_id = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string());
            BugResult {
                rows: failed_rows(
                    &bug_id,
                    &config.techniques,
                    &config.granularities,
                    RowStatus::Error(e.to_string()),
                ),
                bug_id,
                kind: None,
                category: None,
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub bugs: Vec<BugResult>,
    pub summary: Vec<SummaryRow>,
    pub report: PairwiseReport,
}

impl CorpusRun {
    pub fn has_errors(&self) -> bool {
        self.bugs.iter().any(BugResult::has_errors)
    }

    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.bugs.iter().flat_map(|b| b.rows.iter())
    }
}

/// Evaluates the corpus. Fails only when the corpus cannot be enumerated or
/// holds no bundle; per-bug problems become error rows.
pub fn run_corpus(config: &RunConfig) -> anyhow::Result<CorpusRun> {
    if config.techniques.is_empty() {
        bail!("no techniques selected");
    }
    if config.granularities.is_empty() {
        bail!("no granularities selected");
    }
    let dirs = discover_bundles(&config.corpus_root)?;
    if dirs.is_empty() {
        bail!("no bug bundles under {}", config.corpus_root.display());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .context("building worker pool")?;
    let mut bugs: Vec<BugResult> = pool.install(|| {
        dirs.par_iter()
            .map(|dir| evaluate_dir(dir, config))
            .collect()
    });
    bugs.sort_by(|a, b| a.bug_id.cmp(&b.bug_id));
    for bug in bugs.iter().filter(|b| b.has_errors()) {
        if let Some(row) = bug.rows.iter().find(|r| matches!(r.status, RowStatus::Error(_))) {
            log::warn!("{}: {}", bug.bug_id, row.status);
        }
    }
    let summary = summarize(&bugs, &config.techniques, &config.granularities);
    let report = pairwise_report(&bugs, &summary, &config.techniques, &config.granularities);
    Ok(CorpusRun {
        bugs,
        summary,
        report,
    })
}

pub fn results_csv(run: &CorpusRun) -> anyhow::Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in run.rows() {
        writer.serialize(ResultCsvRow::from(row))?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

pub fn read_results(path: &Path) -> anyhow::Result<Vec<ResultCsvRow>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<ResultCsvRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(rows)
}

/// Writes `results.csv`, `summary.csv` and `report.json` into `out`.
pub fn write_outputs(run: &CorpusRun, out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join(RESULTS_FILE), results_csv(run)?)?;
    fs::write(out.join(SUMMARY_FILE), summary::summary_csv(&run.summary)?)?;
    let mut json = serde_json::to_string_pretty(&run.report)?;
    json.push('\n');
    fs::write(out.join(REPORT_FILE), json)?;
    Ok(())
}
