//! Faulty locations from a programmer-fix edit script, and bug kinds.
//!
//! Removed and modified lines are faulty as they are. An added line does not
//! exist in the faulty version, so the locations immediately before and after
//! the insertion point stand in for it, but only when they share the added
//! line's scope.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entity, Granularity, Location, LocationKey, LocationKind, ProgramModel, TestEvidence, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Add,
    Remove,
    Modify,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub module_path: String,
    /// Line in the faulty version touched by a remove or modify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faulty_version_line: Option<u32>,
    /// Faulty-version lines around an add: `[preceding, following]`, either
    /// side `null` at a file boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insertion_gap: Option<(Option<u32>, Option<u32>)>,
    /// Scope enclosing an add, when the producer knows it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_id: Option<String>,
}

impl Edit {
    pub fn modify(module_path: impl Into<String>, line: u32) -> Self {
        Self::at_line(EditKind::Modify, module_path, line)
    }

    pub fn remove(module_path: impl Into<String>, line: u32) -> Self {
        Self::at_line(EditKind::Remove, module_path, line)
    }

    pub fn add(module_path: impl Into<String>, preceding: Option<u32>, following: Option<u32>) -> Self {
        Self {
            kind: EditKind::Add,
            module_path: module_path.into(),
            faulty_version_line: None,
            insertion_gap: Some((preceding, following)),
            scope_id: None,
        }
    }

    fn at_line(kind: EditKind, module_path: impl Into<String>, line: u32) -> Self {
        Self {
            kind,
            module_path: module_path.into(),
            faulty_version_line: Some(line),
            insertion_gap: None,
            scope_id: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub edits: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub faulty_locations: BTreeSet<LocationKey>,
    pub contains_predicate: bool,
    projections: BTreeMap<Granularity, BTreeSet<Entity>>,
}

impl GroundTruth {
    /// Builds the truth and its function/module projections.
    pub fn new(faulty_locations: BTreeSet<LocationKey>, program: &ProgramModel) -> Result<Self> {
        if faulty_locations.is_empty() {
            return Err(Error::EmptyGroundTruth);
        }
        let mut contains_predicate = false;
        let mut projections: BTreeMap<Granularity, BTreeSet<Entity>> = BTreeMap::new();
        for key in &faulty_locations {
            let loc = program
                .location(key)
                .ok_or_else(|| Error::UnknownEntity(key.to_string()))?;
            contains_predicate |= loc.kind == LocationKind::BranchingPredicate;
            for granularity in Granularity::ALL {
                projections
                    .entry(granularity)
                    .or_default()
                    .insert(program.entity_of(key, granularity)?);
            }
        }
        Ok(Self {
            faulty_locations,
            contains_predicate,
            projections,
        })
    }

    /// Faulty entities at `granularity`.
    pub fn entities(&self, granularity: Granularity) -> &BTreeSet<Entity> {
        &self.projections[&granularity]
    }
}

fn module_locations<'a>(program: &'a ProgramModel, module_path: &str) -> Vec<&'a Location> {
    let mut locs: Vec<&Location> = program
        .locations()
        .iter()
        .filter(|l| l.module_path == module_path)
        .collect();
    locs.sort_by_key(|l| l.line);
    locs
}

fn add_neighbours(edit: &Edit, program: &ProgramModel) -> Result<Vec<LocationKey>> {
    let (preceding_line, following_line) = edit
        .insertion_gap
        .ok_or_else(|| Error::MalformedEdit(format!("add in {} without insertion gap", edit.module_path)))?;
    let locs = module_locations(program, &edit.module_path);
    if locs.is_empty() {
        return Err(Error::MalformedEdit(format!(
            "add in unknown module {}",
            edit.module_path
        )));
    }
    // nearest program locations on each side of the gap
    let preceding = preceding_line.and_then(|p| locs.iter().rev().find(|l| l.line <= p).copied());
    let following = following_line.and_then(|f| locs.iter().find(|l| l.line >= f).copied());

    let scope = match &edit.scope_id {
        Some(id) => {
            if program.scope(id).is_none() {
                return Err(Error::UnknownScope(id.clone()));
            }
            id.as_str()
        }
        None => match preceding.or(following) {
            Some(loc) => loc.scope_id.as_str(),
            None => return Ok(Vec::new()),
        },
    };

    Ok([preceding, following]
        .into_iter()
        .flatten()
        .filter(|loc| loc.scope_id == scope)
        .map(Location::key)
        .collect())
}

pub fn derive_ground_truth(edits: &EditScript, program: &ProgramModel) -> Result<GroundTruth> {
    let mut faulty = BTreeSet::new();
    for edit in &edits.edits {
        match edit.kind {
            EditKind::Remove | EditKind::Modify => {
                let line = edit.faulty_version_line.ok_or_else(|| {
                    Error::MalformedEdit(format!(
                        "{:?} in {} without a faulty-version line",
                        edit.kind, edit.module_path
                    ))
                })?;
                let key = LocationKey::new(edit.module_path.clone(), line);
                if !program.contains(&key) {
                    return Err(Error::UnknownLine {
                        module_path: edit.module_path.clone(),
                        line,
                    });
                }
                faulty.insert(key);
            }
            EditKind::Add => faulty.extend(add_neighbours(edit, program)?),
        }
    }
    GroundTruth::new(faulty, program)
}

/// Bug classification used to slice corpus reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BugKind {
    pub crashing: bool,
    pub predicate: bool,
    /// Percentage of all mutants that mutate a ground-truth location.
    pub mutability: f64,
    pub mutable: bool,
}

pub fn classify_bug(truth: &GroundTruth, evidence: &TestEvidence) -> BugKind {
    let crashing = evidence
        .outcomes
        .iter()
        .any(|o| o.outcome == Verdict::Fail && o.crashed);
    let mutability = match &evidence.kill_matrix {
        Some(matrix) if !matrix.mutants.is_empty() => {
            let on_truth = matrix
                .mutants
                .iter()
                .filter(|m| truth.faulty_locations.contains(&m.mutated_location))
                .count();
            100.0 * on_truth as f64 / matrix.mutants.len() as f64
        }
        _ => 0.0,
    };
    BugKind {
        crashing,
        predicate: truth.contains_predicate,
        mutability,
        mutable: mutability > 0.0,
    }
}
