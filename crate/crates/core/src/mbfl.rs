//! Mutation-based suspiciousness: Metallaxis and Muse.
//!
//! Each mutant is scored from how tests react to it; an entity's score
//! aggregates the scores of the mutants that mutate it (maximum for
//! Metallaxis, mean for Muse).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Entity, Granularity, KillMatrix, KillRelation, LocationKey, MutantRecord, TestEvidence};
use crate::ranking::{Score, SuspiciousnessList};
use crate::sbfl::guarded_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MutantKillCounts {
    /// Passing tests that fail on the mutant.
    pub pk: u32,
    /// Failing tests that pass on the mutant.
    pub fk: u32,
    /// Failing tests that pass, or fail with a different trace, on the mutant.
    pub fk_weak: u32,
}

impl MutantKillCounts {
    pub fn of(mutant: &MutantRecord) -> Self {
        let mut counts = Self::default();
        for relation in mutant.relations.values() {
            match relation {
                KillRelation::Same => {}
                KillRelation::PassToFail => counts.pk += 1,
                KillRelation::FailToPass => {
                    counts.fk += 1;
                    counts.fk_weak += 1;
                }
                KillRelation::FailDifferentTrace => counts.fk_weak += 1,
            }
        }
        counts
    }
}

/// Kill totals over all mutants (`f2p`, `p2f`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MuseGlobals {
    pub f2p: u64,
    pub p2f: u64,
}

impl MuseGlobals {
    pub fn of(matrix: &KillMatrix) -> Self {
        matrix
            .mutants
            .iter()
            .map(MutantKillCounts::of)
            .fold(Self::default(), |acc, c| Self {
                f2p: acc.f2p + u64::from(c.fk),
                p2f: acc.p2f + u64::from(c.pk),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MbflModel {
    Metallaxis,
    Muse,
}

pub fn metallaxis_mutant(counts: MutantKillCounts, failing: u32) -> f64 {
    let weak = f64::from(counts.fk_weak);
    guarded_ratio(
        weak,
        (f64::from(failing) * (weak + f64::from(counts.pk))).sqrt(),
    )
}

/// Muse score of one mutant. With `p2f = 0` the passing-kill penalty is 0.
pub fn muse_mutant(counts: MutantKillCounts, globals: MuseGlobals, failing: u32) -> f64 {
    let penalty = if globals.p2f == 0 {
        0.0
    } else {
        f64::from(counts.pk) * (globals.f2p as f64 / globals.p2f as f64)
    };
    let value = (f64::from(counts.fk) - penalty) / f64::from(failing);
    if value == 0.0 {
        0.0
    } else {
        value
    }
}

/// Per-entity MBFL ranking. Entities without mutants are omitted.
pub fn mbfl_rank(bundle: &TestEvidence, model: MbflModel) -> Result<SuspiciousnessList> {
    let technique = match model {
        MbflModel::Metallaxis => "metallaxis",
        MbflModel::Muse => "muse",
    };
    let matrix = bundle
        .kill_matrix
        .as_ref()
        .ok_or_else(|| Error::TechniqueUnavailable {
            technique: technique.to_string(),
            reason: "no kill matrix".to_string(),
        })?;
    let failing = bundle.totals().failing;
    if failing == 0 {
        return Err(Error::NoFailingTest);
    }
    let globals = MuseGlobals::of(matrix);

    let mut per_entity: BTreeMap<&LocationKey, Vec<f64>> = BTreeMap::new();
    for mutant in &matrix.mutants {
        let counts = MutantKillCounts::of(mutant);
        let score = match model {
            MbflModel::Metallaxis => metallaxis_mutant(counts, failing),
            MbflModel::Muse => muse_mutant(counts, globals, failing),
        };
        per_entity
            .entry(&mutant.mutated_location)
            .or_default()
            .push(score);
    }

    let scored = per_entity.into_iter().map(|(key, scores)| {
        let value = match model {
            MbflModel::Metallaxis => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            MbflModel::Muse => scores.iter().sum::<f64>() / scores.len() as f64,
        };
        (Entity::Statement(key.clone()), Score::real(value))
    });
    SuspiciousnessList::from_scores(Granularity::Statement, scored)
}
