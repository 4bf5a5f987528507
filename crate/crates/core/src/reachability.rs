//! Predicate-switching and stack-trace suspiciousness.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{Entity, Granularity, LocationKey, TestEvidence, TrialResult};
use crate::ranking::{Score, SuspiciousnessList};

/// A switched predicate that turned a failing test green.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalPredicate {
    pub location: LocationKey,
    pub test_id: String,
    pub depth_d: u32,
}

pub fn critical_predicates(bundle: &TestEvidence) -> Vec<CriticalPredicate> {
    bundle
        .predicate_trials
        .iter()
        .flatten()
        .filter(|t| t.result == TrialResult::Passes)
        .map(|t| CriticalPredicate {
            location: t.predicate_location.clone(),
            test_id: t.test_id.clone(),
            depth_d: t.remaining_critical_count,
        })
        .collect()
}

/// Scores each critical predicate `1/10^d`, keeping the best over tests.
///
/// Scores are held as the exponent `d`, so ordering is exact at any depth.
pub fn ps_rank(bundle: &TestEvidence) -> Result<SuspiciousnessList> {
    if bundle.predicate_trials.is_none() {
        return Err(Error::TechniqueUnavailable {
            technique: "ps".to_string(),
            reason: "no predicate trials".to_string(),
        });
    }
    let mut best: BTreeMap<LocationKey, u32> = BTreeMap::new();
    for critical in critical_predicates(bundle) {
        best.entry(critical.location)
            .and_modify(|d| *d = (*d).min(critical.depth_d))
            .or_insert(critical.depth_d);
    }
    SuspiciousnessList::from_scores(
        Granularity::Statement,
        best.into_iter()
            .map(|(key, d)| (Entity::Statement(key), Score::InversePowerOfTen(d))),
    )
}

/// Scores statements by the position of their function in failing tests'
/// stack traces: `1/k` for the `k`-th project frame, best over tests.
///
/// Frames naming scopes outside the program are skipped without taking a
/// position. A function appearing in several frames keeps its smallest `k`.
pub fn st_rank(bundle: &TestEvidence) -> Result<SuspiciousnessList> {
    let traces = match &bundle.stack_traces {
        Some(traces) if !traces.is_empty() => traces,
        _ => {
            return Err(Error::TechniqueUnavailable {
                technique: "st".to_string(),
                reason: "no stack traces".to_string(),
            })
        }
    };
    let program = &bundle.program;

    // best (smallest) frame position per scope across all traces
    let mut best_position: HashMap<&str, usize> = HashMap::new();
    for trace in traces {
        let project_frames = trace
            .frames
            .iter()
            .filter(|scope_id| program.scope(scope_id).is_some());
        for (index, scope_id) in project_frames.enumerate() {
            let k = index + 1;
            best_position
                .entry(scope_id.as_str())
                .and_modify(|best| *best = (*best).min(k))
                .or_insert(k);
        }
    }

    let mut scored = Vec::new();
    for loc in program.locations() {
        let Ok(owner) = program.function_owner(&loc.scope_id) else {
            continue;
        };
        if let Some(&k) = best_position.get(owner) {
            scored.push((Entity::Statement(loc.key()), Score::real(1.0 / k as f64)));
        }
    }
    SuspiciousnessList::from_scores(Granularity::Statement, scored)
}
