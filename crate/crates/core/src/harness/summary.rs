use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{BugResult, RowStatus};
use crate::metrics::DEFAULT_AT_N;
use crate::model::Granularity;
use crate::technique::{Family, Technique};

/// Bug subsets a summary can be restricted to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subset {
    All,
    Crashing,
    Predicate,
    Mutable,
    Category(String),
}

impl Subset {
    pub fn contains(&self, bug: &BugResult) -> bool {
        match self {
            Subset::All => true,
            Subset::Crashing => bug.kind.is_some_and(|k| k.crashing),
            Subset::Predicate => bug.kind.is_some_and(|k| k.predicate),
            Subset::Mutable => bug.kind.is_some_and(|k| k.mutable),
            Subset::Category(c) => bug.category.as_deref() == Some(c.as_str()),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subset::All => f.write_str("all"),
            Subset::Crashing => f.write_str("crashing"),
            Subset::Predicate => f.write_str("predicate"),
            Subset::Mutable => f.write_str("mutable"),
            Subset::Category(c) => write!(f, "category={c}"),
        }
    }
}

impl FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Subset::All),
            "crashing" => Ok(Subset::Crashing),
            "predicate" => Ok(Subset::Predicate),
            "mutable" => Ok(Subset::Mutable),
            other => match other.strip_prefix("category=") {
                Some(c) if !c.is_empty() => Ok(Subset::Category(c.to_string())),
                _ => Err(format!("unknown subset {other:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Technique,
    Family,
}

/// Corpus-level aggregate for one technique (or family), granularity and
/// bug subset. Means are absent when there is nothing to average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub technique: String,
    pub kind: RowKind,
    pub granularity: Granularity,
    pub subset: String,
    pub n: usize,
    pub mean_gen_e_inspect: Option<f64>,
    pub at1_pct: Option<f64>,
    pub at3_pct: Option<f64>,
    pub at5_pct: Option<f64>,
    pub at10_pct: Option<f64>,
    pub mean_exam: Option<f64>,
    pub n_localized: f64,
    pub mean_list_length: Option<f64>,
    pub mean_seconds: Option<f64>,
}

impl SummaryRow {
    pub fn at_pcts(&self) -> Option<[f64; 4]> {
        Some([self.at1_pct?, self.at3_pct?, self.at5_pct?, self.at10_pct?])
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn technique_row(
    bugs: &[&BugResult],
    technique: Technique,
    granularity: Granularity,
    subset: &Subset,
) -> SummaryRow {
    let records: Vec<_> = bugs
        .iter()
        .flat_map(|b| b.rows.iter())
        .filter(|r| r.technique == technique && r.granularity == granularity && r.status == RowStatus::Ok)
        .collect();
    let n = records.len();
    let recs = || records.iter().filter_map(|r| r.record.as_ref());
    let pct = |k: u32| (n > 0).then(|| 100.0 * recs().filter(|r| r.at(k)).count() as f64 / n as f64);
    let [a1, a3, a5, a10] = DEFAULT_AT_N.map(pct);
    SummaryRow {
        technique: technique.id().to_string(),
        kind: RowKind::Technique,
        granularity,
        subset: subset.to_string(),
        n,
        mean_gen_e_inspect: mean(recs().map(|r| r.generalized_e_inspect)),
        at1_pct: a1,
        at3_pct: a3,
        at5_pct: a5,
        at10_pct: a10,
        mean_exam: mean(recs().filter_map(|r| r.exam_score)),
        n_localized: recs().filter(|r| r.e_inspect.is_some()).count() as f64,
        mean_list_length: mean(recs().map(|r| r.list_length as f64)),
        mean_seconds: mean(records.iter().filter_map(|r| r.seconds)),
    }
}

/// Mean of the member rows, field by field, over members where the field is
/// present. `n` is the smallest member `n`.
fn family_row(family: Family, members: &[&SummaryRow]) -> SummaryRow {
    let avg = |f: fn(&SummaryRow) -> Option<f64>| mean(members.iter().filter_map(|r| f(r)));
    let first = members[0];
    SummaryRow {
        technique: family.id().to_string(),
        kind: RowKind::Family,
        granularity: first.granularity,
        subset: first.subset.clone(),
        n: members.iter().map(|r| r.n).min().unwrap_or(0),
        mean_gen_e_inspect: avg(|r| r.mean_gen_e_inspect),
        at1_pct: avg(|r| r.at1_pct),
        at3_pct: avg(|r| r.at3_pct),
        at5_pct: avg(|r| r.at5_pct),
        at10_pct: avg(|r| r.at10_pct),
        mean_exam: avg(|r| r.mean_exam),
        n_localized: avg(|r| Some(r.n_localized)).unwrap_or(0.0),
        mean_list_length: avg(|r| r.mean_list_length),
        mean_seconds: avg(|r| r.mean_seconds),
    }
}

/// Technique rows followed by family rows for one subset.
pub fn subset_report(
    bugs: &[BugResult],
    subset: &Subset,
    techniques: &[Technique],
    granularities: &[Granularity],
) -> Vec<SummaryRow> {
    let members: Vec<&BugResult> = bugs.iter().filter(|b| subset.contains(b)).collect();
    let mut out = Vec::new();
    for &granularity in granularities {
        let rows: Vec<SummaryRow> = techniques
            .iter()
            .map(|&t| technique_row(&members, t, granularity, subset))
            .collect();
        let families: Vec<SummaryRow> = Family::ALL
            .into_iter()
            .filter_map(|family| {
                let member_rows: Vec<&SummaryRow> = rows
                    .iter()
                    .filter(|r| family.members().iter().any(|m| m.id() == r.technique))
                    .collect();
                (!member_rows.is_empty()).then(|| family_row(family, &member_rows))
            })
            .collect();
        out.extend(rows);
        out.extend(families);
    }
    out
}

/// Summary over the fixed subsets plus one per category seen in the corpus.
pub fn summarize(
    bugs: &[BugResult],
    techniques: &[Technique],
    granularities: &[Granularity],
) -> Vec<SummaryRow> {
    let categories: BTreeSet<&str> = bugs.iter().filter_map(|b| b.category.as_deref()).collect();
    let mut subsets = vec![Subset::All, Subset::Crashing, Subset::Predicate, Subset::Mutable];
    subsets.extend(categories.into_iter().map(|c| Subset::Category(c.to_string())));
    subsets
        .iter()
        .flat_map(|s| subset_report(bugs, s, techniques, granularities))
        .collect()
}

pub(super) fn summary_csv(rows: &[SummaryRow]) -> anyhow::Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_truth::BugKind;
    use crate::harness::ResultRow;
    use crate::metrics::EvaluationRecord;

    fn record(e: Option<f64>, gen: f64, len: usize) -> EvaluationRecord {
        EvaluationRecord {
            granularity: Granularity::Statement,
            e_inspect: e,
            generalized_e_inspect: gen,
            exam_score: e.map(|v| v / 20.0),
            at_n: DEFAULT_AT_N.iter().map(|&n| (n, e.is_some_and(|v| v <= f64::from(n)))).collect(),
            list_length: len,
            wall_clock_s: None,
        }
    }

    fn bug(id: &str, crashing: bool, category: &str, rows: Vec<(Technique, Option<EvaluationRecord>)>) -> BugResult {
        BugResult {
            bug_id: id.into(),
            kind: Some(BugKind {
                crashing,
                predicate: false,
                mutability: 0.0,
                mutable: false,
            }),
            category: Some(category.into()),
            rows: rows
                .into_iter()
                .map(|(t, rec)| ResultRow {
                    bug_id: id.into(),
                    technique: t,
                    granularity: Granularity::Statement,
                    status: if rec.is_some() { RowStatus::Ok } else { RowStatus::Unavailable },
                    record: rec,
                    seconds: Some(2.0),
                })
                .collect(),
        }
    }

    fn corpus() -> Vec<BugResult> {
        vec![
            bug("b1", true, "ds", vec![
                (Technique::Ochiai, Some(record(Some(1.0), 1.0, 4))),
                (Technique::DStar, Some(record(Some(4.0), 4.0, 4))),
            ]),
            bug("b2", true, "cli", vec![
                (Technique::Ochiai, Some(record(None, 12.0, 2))),
                (Technique::DStar, None),
            ]),
            bug("b3", false, "ds", vec![
                (Technique::Ochiai, Some(record(Some(2.5), 2.5, 6))),
                (Technique::DStar, Some(record(Some(2.0), 2.0, 6))),
            ]),
        ]
    }

    fn row<'a>(rows: &'a [SummaryRow], name: &str) -> &'a SummaryRow {
        rows.iter().find(|r| r.technique == name).unwrap()
    }

    #[test]
    fn technique_means_and_percentages() {
        let rows = subset_report(&corpus(), &Subset::All, &[Technique::Ochiai, Technique::DStar], &[Granularity::Statement]);
        let ochiai = row(&rows, "ochiai");
        assert_eq!(ochiai.n, 3);
        assert_eq!(ochiai.mean_gen_e_inspect, Some(15.5 / 3.0));
        assert_eq!(ochiai.at1_pct, Some(100.0 / 3.0));
        assert_eq!(ochiai.at3_pct, Some(200.0 / 3.0));
        assert_eq!(ochiai.n_localized, 2.0);
        assert_eq!(ochiai.mean_exam, Some(3.5 / 40.0));
        let dstar = row(&rows, "dstar");
        assert_eq!(dstar.n, 2);
        assert_eq!(dstar.at5_pct, Some(100.0));
    }

    #[test]
    fn family_row_is_mean_of_members() {
        let rows = subset_report(&corpus(), &Subset::All, &[Technique::Ochiai, Technique::DStar], &[Granularity::Statement]);
        let sbfl = row(&rows, "sbfl");
        assert_eq!(sbfl.kind, RowKind::Family);
        let (o, d) = (row(&rows, "ochiai"), row(&rows, "dstar"));
        assert_eq!(sbfl.mean_gen_e_inspect, Some((o.mean_gen_e_inspect.unwrap() + d.mean_gen_e_inspect.unwrap()) / 2.0));
        assert_eq!(sbfl.n, 2);
        assert!(!rows.iter().any(|r| r.technique == "mbfl"));
    }

    #[test]
    fn subsets_restrict_denominators() {
        let rows = subset_report(&corpus(), &Subset::Crashing, &[Technique::Ochiai], &[Granularity::Statement]);
        assert_eq!(row(&rows, "ochiai").n, 2);
        let rows = subset_report(&corpus(), &"category=ds".parse().unwrap(), &[Technique::Ochiai], &[Granularity::Statement]);
        assert_eq!(row(&rows, "ochiai").n, 2);
        assert_eq!(row(&rows, "ochiai").mean_gen_e_inspect, Some(1.75));
    }

    #[test]
    fn empty_subset_has_absent_means() {
        let rows = subset_report(&corpus(), &Subset::Mutable, &[Technique::Ochiai], &[Granularity::Statement]);
        let r = row(&rows, "ochiai");
        assert_eq!(r.n, 0);
        assert_eq!(r.mean_gen_e_inspect, None);
        assert_eq!(r.at1_pct, None);
        assert_eq!(r.mean_seconds, None);
    }

    #[test]
    fn summarize_adds_category_subsets() {
        let rows = summarize(&corpus(), &[Technique::Ochiai], &[Granularity::Statement]);
        let subsets: BTreeSet<&str> = rows.iter().map(|r| r.subset.as_str()).collect();
        assert_eq!(
            subsets,
            ["all", "category=cli", "category=ds", "crashing", "mutable", "predicate"].into()
        );
    }

    #[test]
    fn subset_parsing() {
        for s in ["all", "crashing", "predicate", "mutable", "category=ml"] {
            assert_eq!(s.parse::<Subset>().unwrap().to_string(), s);
        }
        assert!("category=".parse::<Subset>().is_err());
        assert!("flaky".parse::<Subset>().is_err());
    }
}
