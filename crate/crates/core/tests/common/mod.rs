//! Seeded generator of synthetic bug bundles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use faultrank::ground_truth::{Edit, EditScript};
use faultrank::model::{
    CoverageRecord, CoverageSpectrum, KillMatrix, KillRelation, Location, LocationKey,
    LocationKind, MutantRecord, PredicateTrial, ProgramModel, Scope, ScopeLevel, StackTrace,
    TestEvidence, TestOutcome, TrialResult, Verdict,
};
use faultrank::wire::{BugBundle, BugMeta};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATEGORIES: [&str; 4] = ["cl", "dev", "ds", "web"];

struct Function {
    scope_id: String,
    module: String,
    def_line: u32,
    body: Vec<u32>,
}

struct Shape {
    locations: Vec<Location>,
    scopes: Vec<Scope>,
    functions: Vec<Function>,
    module_lines: BTreeMap<String, Vec<u32>>,
}

fn plain(module: &str, line: u32, scope: &str) -> Location {
    Location {
        module_path: module.to_string(),
        line,
        kind: LocationKind::Plain,
        scope_id: scope.to_string(),
    }
}

fn build_shape(rng: &mut ChaCha8Rng) -> Shape {
    let mut shape = Shape {
        locations: Vec::new(),
        scopes: Vec::new(),
        functions: Vec::new(),
        module_lines: BTreeMap::new(),
    };
    for m in 0..rng.random_range(1..=3) {
        let module = format!("pkg/mod{m}.py");
        shape.scopes.push(Scope {
            scope_id: module.clone(),
            level: ScopeLevel::Module,
            parent: None,
            module_path: module.clone(),
        });
        let mut line = 1;
        let mut top = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            shape.locations.push(plain(&module, line, &module));
            top.push(line);
            line += 1;
        }
        let class = rng.random_bool(0.3).then(|| {
            let id = format!("{module}::Widget");
            shape.scopes.push(Scope {
                scope_id: id.clone(),
                level: ScopeLevel::Class,
                parent: Some(module.clone()),
                module_path: module.clone(),
            });
            shape.locations.push(plain(&module, line, &id));
            line += 2;
            id
        });
        for f in 0..rng.random_range(1..=4) {
            let parent = match &class {
                Some(c) if f % 2 == 1 => c.clone(),
                _ => module.clone(),
            };
            let scope_id = format!("{parent}::fn{f}");
            shape.scopes.push(Scope {
                scope_id: scope_id.clone(),
                level: ScopeLevel::Function,
                parent: Some(parent),
                module_path: module.clone(),
            });
            let def_line = line;
            shape.locations.push(plain(&module, def_line, &scope_id));
            line += 1;
            let mut body = Vec::new();
            for _ in 0..rng.random_range(2..=6) {
                let kind = if rng.random_bool(0.25) {
                    LocationKind::BranchingPredicate
                } else {
                    LocationKind::Plain
                };
                shape.locations.push(Location {
                    kind,
                    ..plain(&module, line, &scope_id)
                });
                body.push(line);
                line += rng.random_range(1..=2);
            }
            shape.functions.push(Function {
                scope_id,
                module: module.clone(),
                def_line,
                body,
            });
            line += 1;
        }
        shape.module_lines.insert(module, top);
    }
    shape
}

fn edits_for(rng: &mut ChaCha8Rng, shape: &Shape, faulty_fn: usize) -> EditScript {
    let f = &shape.functions[faulty_fn];
    let mut edits = vec![Edit::modify(&f.module, *f.body.choose(rng).unwrap())];
    if rng.random_bool(0.4) {
        edits.push(Edit::modify(&f.module, *f.body.choose(rng).unwrap()));
    }
    if rng.random_bool(0.3) {
        let i = rng.random_range(0..f.body.len());
        let prev = f.body[i];
        let next = f.body.get(i + 1).copied().unwrap_or(prev + 1);
        edits.push(Edit::add(&f.module, Some(prev), Some(next)));
    }
    if rng.random_bool(0.2) {
        let other = shape.functions.choose(rng).unwrap();
        edits.push(Edit::remove(&other.module, *other.body.choose(rng).unwrap()));
    }
    EditScript { edits }
}

/// Lines a test executes: module-level and def lines of every module, plus
/// a prefix of the body of each called function.
fn covered_lines(
    rng: &mut ChaCha8Rng,
    shape: &Shape,
    called: &[usize],
    must_reach: Option<(usize, u32)>,
) -> Vec<LocationKey> {
    let mut covered = BTreeSet::new();
    for (module, lines) in &shape.module_lines {
        for &l in lines {
            covered.insert(LocationKey::new(module.as_str(), l));
        }
    }
    for loc in &shape.locations {
        if shape.scopes.iter().any(|s| s.scope_id == loc.scope_id && s.level == ScopeLevel::Class) {
            covered.insert(loc.key());
        }
    }
    for f in &shape.functions {
        covered.insert(LocationKey::new(f.module.as_str(), f.def_line));
    }
    for &i in called {
        let f = &shape.functions[i];
        let mut reach = rng.random_range(1..=f.body.len());
        if let Some((fi, line)) = must_reach {
            if fi == i {
                reach = reach.max(f.body.iter().position(|&l| l == line).unwrap() + 1);
            }
        }
        for &l in &f.body[..reach] {
            covered.insert(LocationKey::new(f.module.as_str(), l));
        }
    }
    covered.into_iter().collect()
}

/// A random but internally consistent bug bundle.
pub fn synthetic_bug(seed: u64) -> BugBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = build_shape(&mut rng);
    let n_fns = shape.functions.len();
    let faulty_fn = rng.random_range(0..n_fns);
    let edits = edits_for(&mut rng, &shape, faulty_fn);
    let fault_line = match &edits.edits[0].faulty_version_line {
        Some(l) => *l,
        None => unreachable!(),
    };
    let faulty_key = LocationKey::new(shape.functions[faulty_fn].module.as_str(), fault_line);

    let n_fail = rng.random_range(1..=3);
    let n_pass = rng.random_range(2..=8);
    let mut outcomes = Vec::new();
    let mut records = Vec::new();
    let mut calls: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for i in 0..n_fail + n_pass {
        let failing = i < n_fail;
        let test_id = if failing { format!("test_fail_{i}") } else { format!("test_ok_{i}") };
        let mut called: Vec<usize> = (0..n_fns).filter(|_| rng.random_bool(0.4)).collect();
        if failing && !called.contains(&faulty_fn) {
            called.push(faulty_fn);
        }
        called.sort_unstable();
        let reach = failing.then_some((faulty_fn, fault_line));
        records.push(CoverageRecord {
            test_id: test_id.clone(),
            locations: covered_lines(&mut rng, &shape, &called, reach),
        });
        outcomes.push(TestOutcome {
            test_id: test_id.clone(),
            outcome: if failing { Verdict::Fail } else { Verdict::Pass },
            crashed: failing && rng.random_bool(0.5),
        });
        calls.insert(test_id, called);
    }

    let coverage: BTreeMap<&str, BTreeSet<&LocationKey>> = records
        .iter()
        .map(|r| (r.test_id.as_str(), r.locations.iter().collect()))
        .collect();

    let kill_matrix = rng.random_bool(0.85).then(|| {
        let mut mutants = Vec::new();
        for f in &shape.functions {
            for &line in &f.body {
                let key = LocationKey::new(f.module.as_str(), line);
                for _ in 0..rng.random_range(0..=2) {
                    let mut relations = BTreeMap::new();
                    for o in &outcomes {
                        if !coverage[o.test_id.as_str()].contains(&key) {
                            continue;
                        }
                        let p = if key == faulty_key { 0.7 } else { 0.25 };
                        let relation = match o.outcome {
                            Verdict::Fail if rng.random_bool(p) => KillRelation::FailToPass,
                            Verdict::Fail if rng.random_bool(0.2) => KillRelation::FailDifferentTrace,
                            Verdict::Pass if rng.random_bool(0.3) => KillRelation::PassToFail,
                            _ => KillRelation::Same,
                        };
                        if relation != KillRelation::Same {
                            relations.insert(o.test_id.clone(), relation);
                        }
                    }
                    mutants.push(MutantRecord {
                        mutant_id: format!("m{}", mutants.len()),
                        mutated_location: key.clone(),
                        relations,
                    });
                }
            }
        }
        KillMatrix { mutants }
    });

    let predicate_trials = rng.random_bool(0.8).then(|| {
        let mut trials = Vec::new();
        for o in outcomes.iter().filter(|o| o.outcome == Verdict::Fail) {
            let mut index = 0;
            for loc in &shape.locations {
                if loc.kind != LocationKind::BranchingPredicate
                    || !coverage[o.test_id.as_str()].contains(&loc.key())
                {
                    continue;
                }
                let near_fault = loc.key().module_path == faulty_key.module_path
                    && loc.line.abs_diff(fault_line) <= 2;
                let passes = rng.random_bool(if near_fault { 0.6 } else { 0.15 });
                trials.push(PredicateTrial {
                    test_id: o.test_id.clone(),
                    predicate_location: loc.key(),
                    evaluation_index: index,
                    result: if passes { TrialResult::Passes } else { TrialResult::StillFails },
                    remaining_critical_count: if passes { rng.random_range(0..=2) } else { 0 },
                });
                index += 1;
            }
        }
        trials
    });

    let mut stack_traces = Vec::new();
    for o in outcomes.iter().filter(|o| o.crashed) {
        let mut frames: Vec<String> = calls[&o.test_id]
            .iter()
            .map(|&i| shape.functions[i].scope_id.clone())
            .collect();
        frames.shuffle(&mut rng);
        if rng.random_bool(0.7) {
            frames.retain(|s| *s != shape.functions[faulty_fn].scope_id);
            frames.insert(0, shape.functions[faulty_fn].scope_id.clone());
        }
        if rng.random_bool(0.3) {
            frames.insert(0, "lib/site-packages/helper.py::check".to_string());
        }
        stack_traces.push(StackTrace {
            test_id: o.test_id.clone(),
            frames,
        });
    }

    let program = ProgramModel::new(shape.locations, shape.scopes, BTreeMap::new());
    let category = CATEGORIES.choose(&mut rng).unwrap().to_string();
    let timings: BTreeMap<String, f64> = [
        ("sbfl", 0.5..2.0),
        ("mbfl", 20.0..90.0),
        ("ps", 3.0..15.0),
        ("st", 0.01..0.1),
    ]
    .into_iter()
    .map(|(k, r)| (k.to_string(), (rng.random_range(r) * 100.0f64).round() / 100.0))
    .collect();

    let bug_id = format!("synthetic-{seed}");
    BugBundle {
        bug_id: bug_id.clone(),
        evidence: TestEvidence {
            program,
            outcomes,
            spectrum: CoverageSpectrum { records },
            kill_matrix,
            predicate_trials,
            stack_traces: Some(stack_traces),
        },
        edits: Some(edits),
        meta: Some(BugMeta {
            bug_id: Some(bug_id),
            project: Some(format!("proj{}", seed % 3)),
            category: Some(category),
        }),
        timings: Some(timings),
    }
}

pub fn bundled_corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus")
}

/// The five bundles checked in under `fixtures/corpus`, varied so that one
/// lacks a kill matrix, one has only assertion failures and one lacks
/// predicate trials.
pub fn bundled_corpus() -> Vec<BugBundle> {
    (1..=5u64)
        .map(|i| {
            let mut bug = synthetic_bug(1000 + i);
            bug.bug_id = format!("bug-{i}");
            if let Some(meta) = bug.meta.as_mut() {
                meta.bug_id = Some(bug.bug_id.clone());
            }
            let ev = &mut bug.evidence;
            match i {
                2 => ev.kill_matrix = None,
                3 => {
                    for o in &mut ev.outcomes {
                        o.crashed = false;
                    }
                    ev.stack_traces = Some(Vec::new());
                }
                4 => ev.predicate_trials = None,
                _ => {}
            }
            bug
        })
        .collect()
}
