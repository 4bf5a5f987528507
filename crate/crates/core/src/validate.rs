//! Structural checks on an ingested evidence bundle.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::model::{
    KillRelation, LocationKind, ScopeLevel, TestEvidence, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    NoFailingTest,
    InvalidLine,
    DuplicateLocation,
    UnknownScope,
    DuplicateScope,
    ScopeCycle,
    RootNotModule,
    ModulePathMismatch,
    EntityCountMismatch,
    DuplicateTest,
    CrashedButPassed,
    UnknownTest,
    UnknownLocation,
    DuplicateMutant,
    RelationOutcomeMismatch,
    TrialOnPassingTest,
    TrialNotPredicate,
    TraceOnPassingTest,
    EmptyTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Violations found in a bundle; empty iff the bundle is well-formed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }
}

pub fn validate_evidence(bundle: &TestEvidence) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_program(bundle, &mut report);
    check_tests(bundle, &mut report);
    check_spectrum(bundle, &mut report);
    check_kill_matrix(bundle, &mut report);
    check_trials(bundle, &mut report);
    check_traces(bundle, &mut report);
    report
}

fn check_program(bundle: &TestEvidence, report: &mut ValidationReport) {
    use ViolationKind::*;
    let program = &bundle.program;

    let mut scope_ids = HashSet::new();
    for scope in program.scopes() {
        if !scope_ids.insert(scope.scope_id.as_str()) {
            report.push(DuplicateScope, format!("duplicate scope {}", scope.scope_id));
        }
    }
    for scope in program.scopes() {
        match &scope.parent {
            None if scope.level != ScopeLevel::Module => report.push(
                RootNotModule,
                format!("root scope {} is not module-level", scope.scope_id),
            ),
            None => {}
            Some(parent_id) => match program.scope(parent_id) {
                None => report.push(
                    UnknownScope,
                    format!("scope {} has unknown parent {parent_id}", scope.scope_id),
                ),
                Some(parent) if parent.module_path != scope.module_path => report.push(
                    ModulePathMismatch,
                    format!(
                        "scope {} in {} has parent {} in {}",
                        scope.scope_id, scope.module_path, parent.scope_id, parent.module_path
                    ),
                ),
                Some(_) => {}
            },
        }
        let chain = program.scope_chain(&scope.scope_id);
        if chain.len() > program.scopes().len() {
            report.push(ScopeCycle, format!("scope {} is on a cycle", scope.scope_id));
        }
    }

    let mut seen = HashSet::new();
    for loc in program.locations() {
        let key = loc.key();
        if loc.line == 0 {
            report.push(InvalidLine, format!("location {key} has line 0"));
        }
        if !seen.insert(key.clone()) {
            report.push(DuplicateLocation, format!("duplicate location {key}"));
        }
        match program.scope(&loc.scope_id) {
            None => report.push(
                UnknownScope,
                format!("location {key} refers to unknown scope {}", loc.scope_id),
            ),
            Some(scope) if scope.module_path != loc.module_path => report.push(
                ModulePathMismatch,
                format!(
                    "location {key} lies in scope {} of module {}",
                    scope.scope_id, scope.module_path
                ),
            ),
            Some(_) => {}
        }
    }

    for (&granularity, &declared) in program.declared_counts() {
        let actual = program.entity_count(granularity) as u64;
        if declared != actual {
            report.push(
                EntityCountMismatch,
                format!("declared {declared} {granularity} entities, model has {actual}"),
            );
        }
    }
}

fn check_tests(bundle: &TestEvidence, report: &mut ValidationReport) {
    use ViolationKind::*;
    let mut ids = HashSet::new();
    let mut failing = 0;
    for outcome in &bundle.outcomes {
        if !ids.insert(outcome.test_id.as_str()) {
            report.push(DuplicateTest, format!("duplicate test {}", outcome.test_id));
        }
        if outcome.outcome == Verdict::Fail {
            failing += 1;
        } else if outcome.crashed {
            report.push(
                CrashedButPassed,
                format!("test {} is marked crashed but passed", outcome.test_id),
            );
        }
    }
    if failing == 0 {
        report.push(NoFailingTest, "no failing test".to_string());
    }
}

fn check_spectrum(bundle: &TestEvidence, report: &mut ValidationReport) {
    use ViolationKind::*;
    let outcomes = bundle.outcome_index();
    for record in &bundle.spectrum.records {
        if !outcomes.contains_key(record.test_id.as_str()) {
            report.push(
                UnknownTest,
                format!("coverage record for unknown test {}", record.test_id),
            );
        }
        for key in &record.locations {
            if !bundle.program.contains(key) {
                report.push(
                    UnknownLocation,
                    format!("unknown location {key} in coverage of {}", record.test_id),
                );
            }
        }
    }
}

fn check_kill_matrix(bundle: &TestEvidence, report: &mut ValidationReport) {
    use ViolationKind::*;
    let Some(matrix) = &bundle.kill_matrix else {
        return;
    };
    let outcomes = bundle.outcome_index();
    let mut ids = HashSet::new();
    for mutant in &matrix.mutants {
        if !ids.insert(mutant.mutant_id.as_str()) {
            report.push(DuplicateMutant, format!("duplicate mutant {}", mutant.mutant_id));
        }
        if !bundle.program.contains(&mutant.mutated_location) {
            report.push(
                UnknownLocation,
                format!(
                    "mutant {} mutates unknown location {}",
                    mutant.mutant_id, mutant.mutated_location
                ),
            );
        }
        for (test_id, relation) in &mutant.relations {
            let Some(outcome) = outcomes.get(test_id.as_str()) else {
                report.push(
                    UnknownTest,
                    format!("mutant {} relates to unknown test {test_id}", mutant.mutant_id),
                );
                continue;
            };
            let consistent = match relation {
                KillRelation::Same => true,
                KillRelation::PassToFail => outcome.outcome == Verdict::Pass,
                KillRelation::FailToPass | KillRelation::FailDifferentTrace => {
                    outcome.outcome == Verdict::Fail
                }
            };
            if !consistent {
                report.push(
                    RelationOutcomeMismatch,
                    format!(
                        "mutant {} records {relation:?} for test {test_id} whose original outcome is {:?}",
                        mutant.mutant_id, outcome.outcome
                    ),
                );
            }
        }
    }
}

fn check_trials(bundle: &TestEvidence, report: &mut ValidationReport) {
    use ViolationKind::*;
    let Some(trials) = &bundle.predicate_trials else {
        return;
    };
    let outcomes = bundle.outcome_index();
    for trial in trials {
        match outcomes.get(trial.test_id.as_str()) {
            None => report.push(
                UnknownTest,
                format!("predicate trial for unknown test {}", trial.test_id),
            ),
            Some(o) if o.outcome != Verdict::Fail => report.push(
                TrialOnPassingTest,
                format!("predicate trial on passing test {}", trial.test_id),
            ),
            Some(_) => {}
        }
        match bundle.program.location(&trial.predicate_location) {
            None => report.push(
                UnknownLocation,
                format!("predicate trial at unknown location {}", trial.predicate_location),
            ),
            Some(loc) if loc.kind != LocationKind::BranchingPredicate => report.push(
                TrialNotPredicate,
                format!(
                    "predicate trial at {} which is not a branching predicate",
                    trial.predicate_location
                ),
            ),
            Some(_) => {}
        }
    }
}

fn check_traces(bundle: &TestEvidence, report: &mut ValidationReport) {
    use ViolationKind::*;
    let Some(traces) = &bundle.stack_traces else {
        return;
    };
    let outcomes: HashMap<_, _> = bundle.outcome_index();
    for trace in traces {
        match outcomes.get(trace.test_id.as_str()) {
            None => report.push(
                UnknownTest,
                format!("stack trace for unknown test {}", trace.test_id),
            ),
            Some(o) if o.outcome != Verdict::Fail => report.push(
                TraceOnPassingTest,
                format!("stack trace for passing test {}", trace.test_id),
            ),
            Some(_) => {}
        }
        if trace.frames.is_empty() {
            report.push(EmptyTrace, format!("empty stack trace for {}", trace.test_id));
        }
    }
}
