use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail};
use serde::Serialize;

use super::{BugResult, ResultCsvRow, SummaryRow};
use crate::model::Granularity;
use crate::stats::{cliffs_delta, kendall_tau, wilcoxon_signed_rank, Delta, PairedVectors, Tau};
use crate::technique::{Family, Technique};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Generalized E_inspect, defined for every evaluated bug.
    EInspect,
    Exam,
    Seconds,
    ListLength,
}

impl Metric {
    fn of(self, row: &ResultCsvRow) -> Option<f64> {
        if row.status != "ok" {
            return None;
        }
        match self {
            Metric::EInspect => row.gen_e_inspect,
            Metric::Exam => row.exam,
            Metric::Seconds => row.seconds,
            Metric::ListLength => row.list_length.map(|l| l as f64),
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "einspect" | "e_inspect" | "gen_e_inspect" => Ok(Metric::EInspect),
            "exam" => Ok(Metric::Exam),
            "seconds" => Ok(Metric::Seconds),
            "list_length" => Ok(Metric::ListLength),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Qualitative outcome of comparing A against B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    MuchBetter,
    Better,
    TendsBetter,
    Similar,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::MuchBetter => "≫",
            Relation::Better => ">",
            Relation::TendsBetter => "≥",
            Relation::Similar => "≃",
        })
    }
}

/// Compares @1/@3/@5/@10 percentages of A against B.
pub fn effectiveness_relation(a: [f64; 4], b: [f64; 4]) -> Relation {
    let pairs = || a.iter().zip(&b);
    let all_greater = pairs().all(|(x, y)| x > y);
    let gaps_at_least = |g: f64| pairs().filter(|(x, y)| *x - *y >= g).count();
    if all_greater && gaps_at_least(10.0) >= 3 {
        Relation::MuchBetter
    } else if all_greater && gaps_at_least(5.0) >= 1 {
        Relation::Better
    } else if pairs().all(|(x, y)| x >= y) && pairs().filter(|(x, y)| x > y).count() >= 3 {
        Relation::TendsBetter
    } else {
        Relation::Similar
    }
}

/// Compares mean running times: A is faster than B by more than 10x or 1.1x.
pub fn efficiency_relation(time_a: f64, time_b: f64) -> Relation {
    if time_b > 10.0 * time_a {
        Relation::MuchBetter
    } else if time_b > 1.1 * time_a {
        Relation::Better
    } else {
        Relation::Similar
    }
}

fn describe(a: &str, b: &str, forward: Relation, backward: Relation) -> String {
    if forward != Relation::Similar {
        format!("{a} {forward} {b}")
    } else if backward != Relation::Similar {
        format!("{b} {backward} {a}")
    } else {
        format!("{a} {} {b}", Relation::Similar)
    }
}

/// Statistics for one pair of techniques or families on one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    pub granularity: Granularity,
    pub n: usize,
    pub tau: Option<Tau>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_error: Option<String>,
    pub wilcoxon_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilcoxon_error: Option<String>,
    pub cliffs_delta: Option<Delta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cliffs_error: Option<String>,
}

/// Per-bug metric values of a technique, or of a family as the mean over
/// its members that have a value for the bug.
fn per_bug(
    rows: &[ResultCsvRow],
    name: &str,
    granularity: Granularity,
    metric: Metric,
) -> anyhow::Result<BTreeMap<String, f64>> {
    let members: Vec<&str> = if let Ok(family) = name.parse::<Family>() {
        family.members().iter().map(|t| t.id()).collect()
    } else if let Ok(t) = name.parse::<Technique>() {
        vec![t.id()]
    } else {
        bail!("unknown technique or family {name:?}");
    };
    let g = granularity.to_string();
    let mut collected: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in rows {
        if row.granularity == g && members.contains(&row.technique.as_str()) {
            if let Some(v) = metric.of(row) {
                collected.entry(row.bug_id.clone()).or_default().push(v);
            }
        }
    }
    Ok(collected
        .into_iter()
        .map(|(bug, vs)| (bug, vs.iter().sum::<f64>() / vs.len() as f64))
        .collect())
}

/// Paired statistics of `a` against `b` over bugs where both have a value.
pub fn compare(
    rows: &[ResultCsvRow],
    metric: Metric,
    a: &str,
    b: &str,
    granularity: Granularity,
) -> anyhow::Result<Comparison> {
    let va = per_bug(rows, a, granularity, metric)?;
    let vb = per_bug(rows, b, granularity, metric)?;
    let shared: Vec<&String> = va.keys().filter(|k| vb.contains_key(*k)).collect();
    let mut cmp = Comparison {
        a: a.to_string(),
        b: b.to_string(),
        metric,
        granularity,
        n: shared.len(),
        tau: None,
        tau_error: None,
        wilcoxon_p: None,
        wilcoxon_error: None,
        cliffs_delta: None,
        cliffs_error: None,
    };
    if shared.is_empty() {
        let msg = "no bug with values for both".to_string();
        cmp.tau_error = Some(msg.clone());
        cmp.wilcoxon_error = Some(msg.clone());
        cmp.cliffs_error = Some(msg);
        return Ok(cmp);
    }
    let pair = PairedVectors::new(
        shared.iter().map(|s| s.to_string()).collect(),
        shared.iter().map(|k| va[*k]).collect(),
        shared.iter().map(|k| vb[*k]).collect(),
    )
    .map_err(|e| anyhow!(e))?;
    match kendall_tau(&pair) {
        Ok(t) => cmp.tau = Some(t),
        Err(e) => cmp.tau_error = Some(e.to_string()),
    }
    match wilcoxon_signed_rank(&pair) {
        Ok(p) => cmp.wilcoxon_p = Some(p),
        Err(e) => cmp.wilcoxon_error = Some(e.to_string()),
    }
    match cliffs_delta(&pair) {
        Ok(d) => cmp.cliffs_delta = Some(d),
        Err(e) => cmp.cliffs_error = Some(e.to_string()),
    }
    Ok(cmp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairComparison {
    #[serde(flatten)]
    pub stats: Comparison,
    /// Qualitative @n comparison over all bugs, e.g. `sbfl > mbfl`.
    pub effectiveness: Option<String>,
    /// Qualitative running-time comparison, faster side first.
    pub efficiency: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseReport {
    pub tau_variant: &'static str,
    pub comparisons: Vec<PairComparison>,
}

/// Families with a requested member, then requested fusion techniques.
fn compared_names(techniques: &[Technique]) -> Vec<String> {
    let requested: BTreeSet<Technique> = techniques.iter().copied().collect();
    let mut names: Vec<String> = Family::ALL
        .into_iter()
        .filter(|f| f.members().iter().any(|m| requested.contains(m)))
        .map(|f| f.id().to_string())
        .collect();
    names.extend(
        techniques
            .iter()
            .filter(|t| t.is_fusion())
            .map(|t| t.id().to_string()),
    );
    names
}

pub fn pairwise_report(
    bugs: &[BugResult],
    summary: &[SummaryRow],
    techniques: &[Technique],
    granularities: &[Granularity],
) -> PairwiseReport {
    let rows: Vec<ResultCsvRow> = bugs
        .iter()
        .flat_map(|b| b.rows.iter().map(ResultCsvRow::from))
        .collect();
    let names = compared_names(techniques);
    let summary_row = |name: &str, g: Granularity| {
        summary
            .iter()
            .find(|r| r.subset == "all" && r.granularity == g && r.technique == name)
    };

    let mut comparisons = Vec::new();
    for &granularity in granularities {
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let stats = compare(&rows, Metric::EInspect, a, b, granularity)
                    .expect("names come from known techniques");
                let (sa, sb) = (summary_row(a, granularity), summary_row(b, granularity));
                let effectiveness = sa
                    .and_then(SummaryRow::at_pcts)
                    .zip(sb.and_then(SummaryRow::at_pcts))
                    .map(|(pa, pb)| {
                        describe(a, b, effectiveness_relation(pa, pb), effectiveness_relation(pb, pa))
                    });
                let efficiency = sa
                    .and_then(|r| r.mean_seconds)
                    .zip(sb.and_then(|r| r.mean_seconds))
                    .map(|(ta, tb)| describe(a, b, efficiency_relation(ta, tb), efficiency_relation(tb, ta)));
                comparisons.push(PairComparison {
                    stats,
                    effectiveness,
                    efficiency,
                });
            }
        }
    }
    PairwiseReport {
        tau_variant: "tau-b",
        comparisons,
    }
}
