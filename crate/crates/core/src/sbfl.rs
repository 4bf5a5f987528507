//! Spectrum-based suspiciousness: Tarantula, Ochiai and DStar.
//!
//! ```text
//! tarantula = (F+/|F|) / (F+/|F| + P+/|P|)
//! ochiai    = F+ / sqrt(|F| * (F+ + P+))
//! dstar     = (F+)^* / (P+ + F-)
//! ```
//!
//! A zero numerator scores 0. A positive numerator over a zero denominator
//! scores `+inf`. With no passing tests at all, `P+/|P|` is taken as 0.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CoverageCounts, Entity, Granularity, TestEvidence, TestTotals};
use crate::ranking::{Score, SuspiciousnessList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SbflVariant {
    Tarantula,
    Ochiai,
    DStar,
}

impl fmt::Display for SbflVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SbflVariant::Tarantula => "tarantula",
            SbflVariant::Ochiai => "ochiai",
            SbflVariant::DStar => "dstar",
        })
    }
}

impl FromStr for SbflVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tarantula" => Ok(SbflVariant::Tarantula),
            "ochiai" => Ok(SbflVariant::Ochiai),
            "dstar" => Ok(SbflVariant::DStar),
            other => Err(format!("unknown SBFL formula {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SbflFormula {
    pub variant: SbflVariant,
    /// Power applied to DStar's numerator.
    pub star_exponent: u32,
}

impl SbflFormula {
    pub const DEFAULT_STAR_EXPONENT: u32 = 2;

    pub fn new(variant: SbflVariant) -> Self {
        Self {
            variant,
            star_exponent: Self::DEFAULT_STAR_EXPONENT,
        }
    }

    pub fn tarantula() -> Self {
        Self::new(SbflVariant::Tarantula)
    }

    pub fn ochiai() -> Self {
        Self::new(SbflVariant::Ochiai)
    }

    pub fn dstar() -> Self {
        Self::new(SbflVariant::DStar)
    }
}

/// `numerator / denominator` with the zero-denominator rule applied.
pub(crate) fn guarded_ratio(numerator: f64, denominator: f64) -> f64 {
    if numerator == 0.0 {
        0.0
    } else if denominator == 0.0 {
        f64::INFINITY
    } else {
        numerator / denominator
    }
}

fn check_counts(counts: CoverageCounts, totals: TestTotals) -> Result<()> {
    if totals.failing == 0 {
        return Err(Error::NoFailingTest);
    }
    if counts.totals() != totals {
        return Err(Error::InconsistentCounts(format!(
            "F+={} F-={} P+={} P-={} against |F|={} |P|={}",
            counts.f_plus,
            counts.f_minus,
            counts.p_plus,
            counts.p_minus,
            totals.failing,
            totals.passing
        )));
    }
    Ok(())
}

pub fn sbfl_score(formula: SbflFormula, counts: CoverageCounts, totals: TestTotals) -> Result<Score> {
    check_counts(counts, totals)?;
    let f_plus = f64::from(counts.f_plus);
    let p_plus = f64::from(counts.p_plus);
    let failing = f64::from(totals.failing);
    let value = match formula.variant {
        SbflVariant::Tarantula => {
            let fail_ratio = f_plus / failing;
            let pass_ratio = if totals.passing == 0 {
                0.0
            } else {
                p_plus / f64::from(totals.passing)
            };
            guarded_ratio(fail_ratio, fail_ratio + pass_ratio)
        }
        SbflVariant::Ochiai => guarded_ratio(f_plus, (failing * (f_plus + p_plus)).sqrt()),
        SbflVariant::DStar => {
            let exponent = i32::try_from(formula.star_exponent).unwrap_or(i32::MAX);
            guarded_ratio(
                f_plus.powi(exponent),
                p_plus + f64::from(counts.f_minus),
            )
        }
    };
    Ok(Score::real(value))
}

/// Ranks every statement covered by at least one failing test.
pub fn sbfl_rank(bundle: &TestEvidence, formula: SbflFormula) -> Result<SuspiciousnessList> {
    let totals = bundle.totals();
    let mut scored = Vec::new();
    for (key, counts) in bundle.all_coverage_counts() {
        if counts.f_plus == 0 {
            continue;
        }
        scored.push((Entity::Statement(key), sbfl_score(formula, counts, totals)?));
    }
    SuspiciousnessList::from_scores(Granularity::Statement, scored)
}
