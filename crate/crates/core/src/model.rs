//! Shared data model for programs, tests and recorded dynamic evidence.
//!
//! Everything here is immutable once ingested. Program entities are addressed
//! by `(module_path, line)`; column information never enters the model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Statement-level address of a program location: `path:line`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocationKey {
    pub module_path: String,
    pub line: u32,
}

impl LocationKey {
    pub fn new(module_path: impl Into<String>, line: u32) -> Self {
        Self {
            module_path: module_path.into(),
            line,
        }
    }
}

impl fmt::Display for LocationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.module_path, self.line)
    }
}

impl FromStr for LocationKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (path, line) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected \"path:line\", got {s:?}"))?;
        if path.is_empty() {
            return Err(format!("empty module path in {s:?}"));
        }
        let line = line
            .parse::<u32>()
            .map_err(|e| format!("bad line number in {s:?}: {e}"))?;
        Ok(Self::new(path, line))
    }
}

impl Serialize for LocationKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LocationKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocationKind {
    Plain,
    BranchingPredicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub module_path: String,
    pub line: u32,
    pub kind: LocationKind,
    pub scope_id: String,
}

impl Location {
    pub fn key(&self) -> LocationKey {
        LocationKey::new(self.module_path.clone(), self.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeLevel {
    Function,
    Class,
    Module,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    pub scope_id: String,
    pub level: ScopeLevel,
    #[serde(default)]
    pub parent: Option<String>,
    pub module_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Statement,
    Function,
    Module,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [
        Granularity::Statement,
        Granularity::Function,
        Granularity::Module,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Statement => "statement",
            Granularity::Function => "function",
            Granularity::Module => "module",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "statement" => Ok(Granularity::Statement),
            "function" => Ok(Granularity::Function),
            "module" => Ok(Granularity::Module),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

/// A rankable program entity at some granularity.
///
/// Statement entities are locations; function and module entities are scopes.
/// Statements outside any function are ranked at function granularity under
/// their innermost enclosing scope (class or module body).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Statement(LocationKey),
    Scope(String),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Statement(key) => key.fmt(f),
            Entity::Scope(id) => f.write_str(id),
        }
    }
}

impl From<LocationKey> for Entity {
    fn from(key: LocationKey) -> Self {
        Entity::Statement(key)
    }
}

/// Locations and scopes of one faulty program version.
#[derive(Debug, Clone)]
pub struct ProgramModel {
    locations: Vec<Location>,
    scopes: Vec<Scope>,
    declared_counts: BTreeMap<Granularity, u64>,
    location_index: HashMap<LocationKey, usize>,
    scope_index: HashMap<String, usize>,
}

impl PartialEq for ProgramModel {
    fn eq(&self, other: &Self) -> bool {
        self.locations == other.locations
            && self.scopes == other.scopes
            && self.declared_counts == other.declared_counts
    }
}

impl ProgramModel {
    /// Builds a model, indexing locations and scopes. Duplicates keep their
    /// first occurrence in the index; validation reports them.
    pub fn new(
        locations: Vec<Location>,
        scopes: Vec<Scope>,
        declared_counts: BTreeMap<Granularity, u64>,
    ) -> Self {
        let mut location_index = HashMap::with_capacity(locations.len());
        for (i, loc) in locations.iter().enumerate() {
            location_index.entry(loc.key()).or_insert(i);
        }
        let mut scope_index = HashMap::with_capacity(scopes.len());
        for (i, scope) in scopes.iter().enumerate() {
            scope_index.entry(scope.scope_id.clone()).or_insert(i);
        }
        Self {
            locations,
            scopes,
            declared_counts,
            location_index,
            scope_index,
        }
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn scopes(&self) -> &[Scope] {
        &self.scopes
    }

    pub fn declared_counts(&self) -> &BTreeMap<Granularity, u64> {
        &self.declared_counts
    }

    pub fn location(&self, key: &LocationKey) -> Option<&Location> {
        self.location_index.get(key).map(|&i| &self.locations[i])
    }

    pub fn contains(&self, key: &LocationKey) -> bool {
        self.location_index.contains_key(key)
    }

    pub fn scope(&self, scope_id: &str) -> Option<&Scope> {
        self.scope_index.get(scope_id).map(|&i| &self.scopes[i])
    }

    /// Scope chain from `scope_id` up to its root, innermost first.
    /// Stops at unknown parents and at cycles.
    pub fn scope_chain(&self, scope_id: &str) -> Vec<&Scope> {
        let mut chain = Vec::new();
        let mut current = self.scope(scope_id);
        while let Some(scope) = current {
            if chain.len() > self.scopes.len() {
                break;
            }
            chain.push(scope);
            current = scope.parent.as_deref().and_then(|p| self.scope(p));
        }
        chain
    }

    /// Innermost function enclosing `scope_id`, falling back to `scope_id`
    /// itself when no function encloses it.
    pub fn function_owner<'a>(&'a self, scope_id: &'a str) -> Result<&'a str> {
        let chain = self.scope_chain(scope_id);
        if chain.is_empty() {
            return Err(Error::UnknownScope(scope_id.to_string()));
        }
        Ok(chain
            .iter()
            .find(|s| s.level == ScopeLevel::Function)
            .map(|s| s.scope_id.as_str())
            .unwrap_or(scope_id))
    }

    /// Root (module-level) scope of the chain starting at `scope_id`.
    pub fn module_owner(&self, scope_id: &str) -> Result<&str> {
        self.scope_chain(scope_id)
            .last()
            .map(|s| s.scope_id.as_str())
            .ok_or_else(|| Error::UnknownScope(scope_id.to_string()))
    }

    /// Maps a statement to the entity that represents it at `granularity`.
    pub fn entity_of(&self, key: &LocationKey, granularity: Granularity) -> Result<Entity> {
        let loc = self
            .location(key)
            .ok_or_else(|| Error::UnknownEntity(key.to_string()))?;
        match granularity {
            Granularity::Statement => Ok(Entity::Statement(key.clone())),
            Granularity::Function => Ok(Entity::Scope(
                self.function_owner(&loc.scope_id)?.to_string(),
            )),
            Granularity::Module => Ok(Entity::Scope(self.module_owner(&loc.scope_id)?.to_string())),
        }
    }

    /// All entities of the program at `granularity`. Locations with a broken
    /// scope chain are skipped (validation reports them).
    pub fn entities(&self, granularity: Granularity) -> BTreeSet<Entity> {
        self.locations
            .iter()
            .filter_map(|loc| self.entity_of(&loc.key(), granularity).ok())
            .collect()
    }

    /// Number of program entities at `granularity`, the exam-score denominator.
    pub fn entity_count(&self, granularity: Granularity) -> usize {
        match granularity {
            Granularity::Statement => self.location_index.len(),
            _ => self.entities(granularity).len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test_id: String,
    pub outcome: Verdict,
    /// Failing test terminated with an uncaught exception.
    #[serde(default)]
    pub crashed: bool,
}

/// Locations executed by one test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub test_id: String,
    pub locations: Vec<LocationKey>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageSpectrum {
    pub records: Vec<CoverageRecord>,
}

/// How a test's behaviour on a mutant relates to its behaviour on the
/// original program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KillRelation {
    Same,
    PassToFail,
    FailToPass,
    /// Still fails, but with a different stack trace (weak kill).
    FailDifferentTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantRecord {
    pub mutant_id: String,
    pub mutated_location: LocationKey,
    /// Per-test relation; tests not listed behave the same on the mutant.
    #[serde(default)]
    pub relations: BTreeMap<String, KillRelation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KillMatrix {
    pub mutants: Vec<MutantRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialResult {
    StillFails,
    Passes,
}

/// One switched execution of a failing test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateTrial {
    pub test_id: String,
    pub predicate_location: LocationKey,
    pub evaluation_index: u32,
    pub result: TrialResult,
    /// Critical predicates other than this one evaluated after it.
    pub remaining_critical_count: u32,
}

/// Frames of a failing test's crash, most recently called first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackTrace {
    pub test_id: String,
    pub frames: Vec<String>,
}

/// Everything recorded about one bug's dynamic behaviour.
#[derive(Debug, Clone, PartialEq)]
pub struct TestEvidence {
    pub program: ProgramModel,
    pub outcomes: Vec<TestOutcome>,
    pub spectrum: CoverageSpectrum,
    pub kill_matrix: Option<KillMatrix>,
    pub predicate_trials: Option<Vec<PredicateTrial>>,
    pub stack_traces: Option<Vec<StackTrace>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TestTotals {
    pub failing: u32,
    pub passing: u32,
}

/// Coverage of one entity split by test verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CoverageCounts {
    pub f_plus: u32,
    pub f_minus: u32,
    pub p_plus: u32,
    pub p_minus: u32,
}

impl CoverageCounts {
    pub fn totals(&self) -> TestTotals {
        TestTotals {
            failing: self.f_plus + self.f_minus,
            passing: self.p_plus + self.p_minus,
        }
    }
}

impl TestEvidence {
    /// Outcome per test id (first record wins on duplicates).
    pub fn outcome_index(&self) -> HashMap<&str, &TestOutcome> {
        let mut index = HashMap::with_capacity(self.outcomes.len());
        for outcome in &self.outcomes {
            index.entry(outcome.test_id.as_str()).or_insert(outcome);
        }
        index
    }

    pub fn totals(&self) -> TestTotals {
        let mut totals = TestTotals::default();
        for outcome in self.outcome_index().values() {
            match outcome.outcome {
                Verdict::Fail => totals.failing += 1,
                Verdict::Pass => totals.passing += 1,
            }
        }
        totals
    }

    /// Set of executed locations per known test, merging duplicate records.
    pub fn coverage_by_test(&self) -> BTreeMap<&str, BTreeSet<&LocationKey>> {
        let outcomes = self.outcome_index();
        let mut by_test: BTreeMap<&str, BTreeSet<&LocationKey>> = BTreeMap::new();
        for record in &self.spectrum.records {
            if !outcomes.contains_key(record.test_id.as_str()) {
                continue;
            }
            by_test
                .entry(record.test_id.as_str())
                .or_default()
                .extend(record.locations.iter());
        }
        by_test
    }

    /// Coverage counts for every program location in one pass.
    pub fn all_coverage_counts(&self) -> BTreeMap<LocationKey, CoverageCounts> {
        let totals = self.totals();
        let outcomes = self.outcome_index();
        let mut covered: HashMap<&LocationKey, (u32, u32)> = HashMap::new();
        for (test_id, locations) in self.coverage_by_test() {
            let verdict = outcomes[test_id].outcome;
            for key in locations {
                let entry = covered.entry(key).or_default();
                match verdict {
                    Verdict::Fail => entry.0 += 1,
                    Verdict::Pass => entry.1 += 1,
                }
            }
        }
        self.program
            .locations()
            .iter()
            .map(|loc| {
                let key = loc.key();
                let (f_plus, p_plus) = covered.get(&key).copied().unwrap_or_default();
                let counts = CoverageCounts {
                    f_plus,
                    f_minus: totals.failing - f_plus,
                    p_plus,
                    p_minus: totals.passing - p_plus,
                };
                (key, counts)
            })
            .collect()
    }
}

/// Coverage counts of a single entity.
pub fn coverage_counts(bundle: &TestEvidence, entity: &LocationKey) -> Result<CoverageCounts> {
    if !bundle.program.contains(entity) {
        return Err(Error::UnknownEntity(entity.to_string()));
    }
    let totals = bundle.totals();
    let outcomes = bundle.outcome_index();
    let mut counts = CoverageCounts::default();
    for (test_id, locations) in bundle.coverage_by_test() {
        if locations.contains(entity) {
            match outcomes[test_id].outcome {
                Verdict::Fail => counts.f_plus += 1,
                Verdict::Pass => counts.p_plus += 1,
            }
        }
    }
    counts.f_minus = totals.failing - counts.f_plus;
    counts.p_minus = totals.passing - counts.p_plus;
    Ok(counts)
}
