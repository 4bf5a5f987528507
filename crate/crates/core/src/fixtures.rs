//! Small hand-built programs and evidence shared by unit, integration and
//! acceptance tests.

use std::collections::{BTreeMap, BTreeSet};

use crate::ground_truth::{Edit, EditScript};
use crate::model::{
    CoverageRecord, CoverageSpectrum, Entity, Granularity, KillMatrix, KillRelation, Location,
    LocationKey, LocationKind, MutantRecord, PredicateTrial, ProgramModel, Scope, ScopeLevel,
    StackTrace, TestEvidence, TestOutcome, TrialResult, Verdict,
};
use crate::ranking::{Score, SuspiciousnessList};

pub fn location(module: &str, line: u32, kind: LocationKind, scope: &str) -> Location {
    Location {
        module_path: module.to_string(),
        line,
        kind,
        scope_id: scope.to_string(),
    }
}

pub fn scope(id: &str, level: ScopeLevel, parent: Option<&str>, module: &str) -> Scope {
    Scope {
        scope_id: id.to_string(),
        level,
        parent: parent.map(str::to_string),
        module_path: module.to_string(),
    }
}

pub fn outcome(test_id: &str, verdict: Verdict) -> TestOutcome {
    TestOutcome {
        test_id: test_id.to_string(),
        outcome: verdict,
        crashed: false,
    }
}

fn coverage(test_id: &str, module: &str, lines: &[u32]) -> CoverageRecord {
    CoverageRecord {
        test_id: test_id.to_string(),
        locations: lines.iter().map(|&l| LocationKey::new(module, l)).collect(),
    }
}

fn mutant(id: &str, line: u32, relations: &[(&str, KillRelation)]) -> MutantRecord {
    MutantRecord {
        mutant_id: id.to_string(),
        mutated_location: LocationKey::new("toy.py", line),
        relations: relations
            .iter()
            .map(|(t, r)| (t.to_string(), *r))
            .collect(),
    }
}

/// Four-line module with one function `f`; tests f1, f2 fail and p1..p3 pass.
///
/// | line | scope | kind      | covered by        |
/// |------|-------|-----------|-------------------|
/// | 1    | toy.py| plain     | every test        |
/// | 2    | f     | plain     | f1, p1, p2        |
/// | 3    | f     | predicate | f1, f2, p2        |
/// | 4    | f     | plain     | none              |
pub fn toy_evidence() -> TestEvidence {
    let m = "toy.py";
    let f = "toy.py::f";
    let program = ProgramModel::new(
        vec![
            location(m, 1, LocationKind::Plain, m),
            location(m, 2, LocationKind::Plain, f),
            location(m, 3, LocationKind::BranchingPredicate, f),
            location(m, 4, LocationKind::Plain, f),
        ],
        vec![
            scope(m, ScopeLevel::Module, None, m),
            scope(f, ScopeLevel::Function, Some(m), m),
        ],
        BTreeMap::new(),
    );
    use KillRelation::*;
    TestEvidence {
        program,
        outcomes: vec![
            outcome("f1", Verdict::Fail),
            outcome("f2", Verdict::Fail),
            outcome("p1", Verdict::Pass),
            outcome("p2", Verdict::Pass),
            outcome("p3", Verdict::Pass),
        ],
        spectrum: CoverageSpectrum {
            records: vec![
                coverage("f1", m, &[1, 2, 3]),
                coverage("f2", m, &[1, 3]),
                coverage("p1", m, &[1, 2]),
                coverage("p2", m, &[1, 2, 3]),
                coverage("p3", m, &[1]),
            ],
        },
        kill_matrix: Some(KillMatrix {
            mutants: vec![
                mutant("m1", 2, &[("f1", FailToPass), ("f2", FailToPass)]),
                mutant("m2", 2, &[("f1", FailToPass), ("p1", PassToFail)]),
                mutant("m3", 3, &[("f1", FailDifferentTrace)]),
                mutant("m4", 3, &[("f1", Same), ("p1", Same)]),
                mutant("m5", 1, &[("p1", PassToFail), ("p2", PassToFail)]),
                mutant("m6", 1, &[("f2", FailToPass), ("p3", PassToFail)]),
            ],
        }),
        predicate_trials: Some(vec![
            PredicateTrial {
                test_id: "f1".to_string(),
                predicate_location: LocationKey::new(m, 3),
                evaluation_index: 0,
                result: TrialResult::Passes,
                remaining_critical_count: 0,
            },
            PredicateTrial {
                test_id: "f2".to_string(),
                predicate_location: LocationKey::new(m, 3),
                evaluation_index: 0,
                result: TrialResult::StillFails,
                remaining_critical_count: 0,
            },
        ]),
        stack_traces: Some(vec![
            StackTrace {
                test_id: "f1".to_string(),
                frames: vec![f.to_string(), m.to_string()],
            },
            StackTrace {
                test_id: "f2".to_string(),
                frames: vec![f.to_string()],
            },
        ]),
    }
}

/// Module `m.py` with functions foo (lines 1-3), bar (4-6) and main (7-8),
/// plus module-level line 10. One failing test per trace.
pub fn stack_fixture(traces: Vec<Vec<&str>>) -> TestEvidence {
    let m = "m.py";
    let mut locations = Vec::new();
    for (name, lines) in [("foo", 1..=3), ("bar", 4..=6), ("main", 7..=8)] {
        let id = format!("m.py::{name}");
        for line in lines {
            locations.push(location(m, line, LocationKind::Plain, &id));
        }
    }
    locations.push(location(m, 10, LocationKind::Plain, m));
    let program = ProgramModel::new(
        locations,
        vec![
            scope(m, ScopeLevel::Module, None, m),
            scope("m.py::foo", ScopeLevel::Function, Some(m), m),
            scope("m.py::bar", ScopeLevel::Function, Some(m), m),
            scope("m.py::main", ScopeLevel::Function, Some(m), m),
        ],
        BTreeMap::new(),
    );
    let mut outcomes = vec![outcome("ok", Verdict::Pass)];
    let mut records = vec![coverage("ok", m, &[10])];
    let mut stack_traces = Vec::new();
    for (i, frames) in traces.into_iter().enumerate() {
        let test_id = format!("t{i}");
        outcomes.push(outcome(&test_id, Verdict::Fail));
        records.push(coverage(&test_id, m, &[1, 4, 7, 10]));
        stack_traces.push(StackTrace {
            test_id,
            frames: frames.into_iter().map(str::to_string).collect(),
        });
    }
    TestEvidence {
        program,
        outcomes,
        spectrum: CoverageSpectrum { records },
        kill_matrix: None,
        predicate_trials: None,
        stack_traces: Some(stack_traces),
    }
}

/// The nine-line program of the ground-truth worked example.
///
/// ```text
/// 1  a = 3
/// 2  c = 5
/// 3  def foo(y):
/// 4      if y > 3:
/// 5          a = y
/// 6      y = y * 2
/// 7  def bar(z):
/// 8      z = z + 2
/// 9      return z
/// ```
pub fn example_program() -> ProgramModel {
    let m = "sample.py";
    let f_foo = "sample.py::foo";
    let f_bar = "sample.py::bar";
    let plain = LocationKind::Plain;
    ProgramModel::new(
        vec![
            location(m, 1, plain, m),
            location(m, 2, plain, m),
            location(m, 3, plain, f_foo),
            location(m, 4, LocationKind::BranchingPredicate, f_foo),
            location(m, 5, plain, f_foo),
            location(m, 6, plain, f_foo),
            location(m, 7, plain, f_bar),
            location(m, 8, plain, f_bar),
            location(m, 9, plain, f_bar),
        ],
        vec![
            scope(m, ScopeLevel::Module, None, m),
            scope(f_foo, ScopeLevel::Function, Some(m), m),
            scope(f_bar, ScopeLevel::Function, Some(m), m),
        ],
        BTreeMap::new(),
    )
}

/// Fix for [`example_program`]: a module-level line added between 1 and 2, line
/// 4 modified, a line added at the end of foo, line 8 removed.
pub fn example_edits() -> EditScript {
    EditScript {
        edits: vec![
            Edit::add("sample.py", Some(1), Some(2)),
            Edit::modify("sample.py", 4),
            Edit::add("sample.py", Some(6), Some(7)),
            Edit::remove("sample.py", 8),
        ],
    }
}

pub fn tied_entity(i: u32) -> Entity {
    Entity::Statement(LocationKey::new("ranked.py", i))
}

/// Ten statements scored 10, 7, 4, 4, 4, 3, 3, 2, 2, 2.
pub fn tied_list() -> SuspiciousnessList {
    let scores = [10.0, 7.0, 4.0, 4.0, 4.0, 3.0, 3.0, 2.0, 2.0, 2.0];
    SuspiciousnessList::from_scores(
        Granularity::Statement,
        scores
            .iter()
            .zip(1..)
            .map(|(&s, i)| (tied_entity(i), Score::real(s))),
    )
    .expect("distinct entities")
}

/// Faulty statements 2, 4, 8 and 9 of [`tied_list`].
pub fn tied_faulty() -> BTreeSet<Entity> {
    [2, 4, 8, 9].into_iter().map(tied_entity).collect()
}
