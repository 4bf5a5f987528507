use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use faultrank::fusion::{export_ltr, parse_weights};
use faultrank::ground_truth::{classify_bug, derive_ground_truth};
use faultrank::harness::{self, Metric, RunConfig};
use faultrank::metrics::aggregate_granularity;
use faultrank::technique::run_technique;
use faultrank::validate::validate_evidence;
use faultrank::wire::read_bundle;
use faultrank::{Granularity, SuspiciousnessList, Technique};

#[derive(Parser)]
#[command(name = "faultrank", version, about = "Fault localization over recorded test evidence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate techniques over every bug bundle in a corpus.
    Run {
        #[arg(long)]
        corpus: PathBuf,
        /// Technique ids or family names, comma separated.
        #[arg(long, default_value = "all")]
        techniques: String,
        #[arg(long, default_value = "statement,function,module")]
        granularity: String,
        #[arg(long)]
        out: PathBuf,
        /// Fusion weight overrides, e.g. `sbfl=3,mbfl=2,ps=1,st=1`.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, env = "FAULTRANK_JOBS")]
        jobs: Option<usize>,
    },
    /// Pairwise statistics between two techniques or families from a results directory.
    Compare {
        #[arg(long, default_value = "einspect")]
        metric: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "statement")]
        granularity: Granularity,
    },
    /// Print one technique's suspiciousness list for a bundle.
    Rank {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        technique: Technique,
        #[arg(long, default_value = "statement")]
        granularity: Granularity,
        #[arg(long)]
        weights: Option<String>,
        /// Also write the learning-to-rank feature table for the base techniques.
        #[arg(long)]
        export_ltr: Option<PathBuf>,
    },
    /// Check a bundle's internal consistency.
    Validate {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Print a bundle's ground-truth locations and bug kind.
    Truth {
        #[arg(long)]
        bundle: PathBuf,
    },
}

fn parse_granularities(spec: &str) -> anyhow::Result<Vec<Granularity>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let g: Granularity = item.parse().map_err(|e| anyhow!("{e}"))?;
        if !out.contains(&g) {
            out.push(g);
        }
    }
    if out.is_empty() {
        anyhow::bail!("no granularity given");
    }
    Ok(out)
}

fn weights(spec: Option<&str>) -> anyhow::Result<BTreeMap<Technique, f64>> {
    Ok(match spec {
        Some(s) => parse_weights(s)?,
        None => BTreeMap::new(),
    })
}

/// Writes the list as CSV to stdout. A closed pipe (`| head`) is not an error.
fn print_list(list: &SuspiciousnessList) -> anyhow::Result<()> {
    let mut text = String::from("rank,entity,score\n");
    for (i, entry) in list.entries().iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", i + 1, entry.entity, entry.score));
    }
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(
    corpus: PathBuf,
    techniques: &str,
    granularity: &str,
    out: PathBuf,
    weight_spec: Option<&str>,
    jobs: Option<usize>,
) -> anyhow::Result<ExitCode> {
    let config = RunConfig {
        corpus_root: corpus,
        techniques: Technique::parse_list(techniques)?,
        granularities: parse_granularities(granularity)?,
        output_dir: out,
        weights: weights(weight_spec)?,
        jobs: jobs
            .filter(|&j| j > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    let result = harness::run_corpus(&config)?;
    harness::write_outputs(&result, &config.output_dir)?;
    eprintln!(
        "evaluated {} bugs, wrote {}",
        result.bugs.len(),
        config.output_dir.display()
    );
    Ok(if result.has_errors() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn compare(metric: &str, a: &str, b: &str, results: &Path, granularity: Granularity) -> anyhow::Result<ExitCode> {
    let metric: Metric = metric.parse().map_err(|e| anyhow!("{e}"))?;
    let path = if results.is_dir() {
        results.join(harness::RESULTS_FILE)
    } else {
        results.to_path_buf()
    };
    let rows = harness::read_results(&path)?;
    let comparison = harness::compare(&rows, metric, a, b, granularity)?;
    println!("{}", serde_json::to_string_pretty(&comparison)?);
    Ok(ExitCode::SUCCESS)
}

fn rank(
    bundle_dir: &Path,
    technique: Technique,
    granularity: Granularity,
    weight_spec: Option<&str>,
    ltr: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let bundle = read_bundle(bundle_dir)?;
    let program = &bundle.evidence.program;
    let weights = weights(weight_spec)?;
    let list = run_technique(technique, &bundle.evidence, &weights)?;
    let ranked = aggregate_granularity(&list, program, granularity)?;

    if let Some(path) = ltr {
        let edits = bundle
            .edits
            .as_ref()
            .ok_or_else(|| anyhow!("bundle has no edit script to label features"))?;
        let truth = derive_ground_truth(edits, program)?;
        let mut lists = BTreeMap::new();
        for t in Technique::BASE {
            match run_technique(t, &bundle.evidence, &weights) {
                Ok(l) => {
                    lists.insert(t, aggregate_granularity(&l, program, granularity)?);
                }
                Err(faultrank::Error::TechniqueUnavailable { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let table = export_ltr(&lists, truth.entities(granularity))?;
        fs::write(path, table).with_context(|| format!("writing {}", path.display()))?;
    }
    print_list(&ranked)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(bundle_dir: &Path) -> anyhow::Result<ExitCode> {
    let bundle = read_bundle(bundle_dir)?;
    let report = validate_evidence(&bundle.evidence);
    for violation in &report.violations {
        println!("{violation}");
    }
    if report.is_valid() {
        println!("{}: ok", bundle.bug_id);
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn truth(bundle_dir: &Path) -> anyhow::Result<ExitCode> {
    let bundle = read_bundle(bundle_dir)?;
    let edits = bundle
        .edits
        .as_ref()
        .ok_or_else(|| anyhow!("bundle has no edit script"))?;
    let truth = derive_ground_truth(edits, &bundle.evidence.program)?;
    for key in &truth.faulty_locations {
        println!("{key}");
    }
    let kind = classify_bug(&truth, &bundle.evidence);
    eprintln!(
        "crashing={} predicate={} mutability={:.2}",
        kind.crashing, kind.predicate, kind.mutability
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            corpus,
            techniques,
            granularity,
            out,
            weights,
            jobs,
        } => run(corpus, &techniques, &granularity, out, weights.as_deref(), jobs),
        Command::Compare {
            metric,
            a,
            b,
            results,
            granularity,
        } => compare(&metric, &a, &b, &results, granularity),
        Command::Rank {
            bundle,
            technique,
            granularity,
            weights,
            export_ltr,
        } => rank(&bundle, technique, granularity, weights.as_deref(), export_ltr.as_deref()),
        Command::Validate { bundle } => validate(&bundle),
        Command::Truth { bundle } => truth(&bundle),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
