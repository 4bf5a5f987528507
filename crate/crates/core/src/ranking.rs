//! Suspiciousness scores and ranked entity lists.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{Entity, Granularity};

/// A suspiciousness score. Higher is more suspicious.
///
/// `Real` holds any non-NaN value including `+inf`. `InversePowerOfTen(d)`
/// stands for `1/10^d` and orders by `d` directly, so predicate-switching
/// depths beyond the `f64` exponent range still rank correctly.
#[derive(Debug, Clone, Copy)]
pub enum Score {
    Real(f64),
    InversePowerOfTen(u32),
}

impl Score {
    /// Wraps a real score, folding `-0.0` into `0.0`.
    ///
    /// # Panics
    /// On NaN, which no scoring rule may produce.
    pub fn real(value: f64) -> Self {
        assert!(!value.is_nan(), "suspiciousness score is NaN");
        Score::Real(if value == 0.0 { 0.0 } else { value })
    }

    /// Numeric value; `InversePowerOfTen` underflows to 0 for very deep predicates.
    pub fn value(self) -> f64 {
        match self {
            Score::Real(v) => v,
            Score::InversePowerOfTen(d) => 10f64.powi(-(d.min(i32::MAX as u32) as i32)),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Score::Real(v) if v.is_infinite())
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (*self, *other) {
            (Score::Real(a), Score::Real(b)) => a.total_cmp(&b),
            (Score::InversePowerOfTen(a), Score::InversePowerOfTen(b)) => b.cmp(&a),
            (a, b) => a.value().total_cmp(&b.value()),
        }
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Real(v) => write!(f, "{v}"),
            Score::InversePowerOfTen(0) => f.write_str("1"),
            Score::InversePowerOfTen(d) => write!(f, "1e-{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntity {
    pub entity: Entity,
    pub score: Score,
}

/// Entities ordered by nonincreasing suspiciousness. Ties are exact score
/// equality and sit adjacent, ordered by entity for determinism.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspiciousnessList {
    granularity: Granularity,
    entries: Vec<RankedEntity>,
}

impl SuspiciousnessList {
    pub fn empty(granularity: Granularity) -> Self {
        Self {
            granularity,
            entries: Vec::new(),
        }
    }

    /// Sorts scored entities into a list. Fails on duplicate entities.
    pub fn from_scores(
        granularity: Granularity,
        scores: impl IntoIterator<Item = (Entity, Score)>,
    ) -> Result<Self> {
        let mut entries: Vec<RankedEntity> = scores
            .into_iter()
            .map(|(entity, score)| RankedEntity { entity, score })
            .collect();
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(&e.entity) {
                return Err(Error::DuplicateEntity(e.entity.to_string()));
            }
        }
        entries.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.entity.cmp(&b.entity)));
        Ok(Self {
            granularity,
            entries,
        })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn entries(&self) -> &[RankedEntity] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score_of(&self, entity: &Entity) -> Option<Score> {
        self.entries
            .iter()
            .find(|e| &e.entity == entity)
            .map(|e| e.score)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entries.iter().map(|e| &e.entity)
    }

    /// Index ranges of maximal runs of equal scores.
    pub fn tie_blocks(&self) -> Vec<Range<usize>> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 1..=self.entries.len() {
            if i == self.entries.len() || self.entries[i].score != self.entries[start].score {
                blocks.push(start..i);
                start = i;
            }
        }
        blocks
    }
}
