//! Rank metrics over suspiciousness lists, and granularity aggregation.
//!
//! E_inspect is the expected position of the first faulty entity when every
//! tie block is inspected in uniformly random order. For a block starting at
//! position `start` with `t` members of which `f` are faulty:
//!
//! ```text
//! start + sum_{k=1}^{t-f} k * C(t-k-1, f-1) / C(t, f)
//! ```
//!
//! evaluated exactly over big integers.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_truth::GroundTruth;
use crate::model::{Entity, Granularity, ProgramModel};
use crate::ranking::{Score, SuspiciousnessList};

pub const DEFAULT_AT_N: [u32; 4] = [1, 3, 5, 10];

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

/// Expected position of the first faulty member of a tie block.
///
/// `start` is the 1-based position of the block's first member. With no
/// faulty member the block contributes `start`.
pub fn tie_block_expectation(start: u64, ties: u64, faulty: u64) -> f64 {
    assert!(faulty <= ties, "more faulty entities than block members");
    if faulty == 0 || faulty == ties {
        return start as f64;
    }
    // sum of k * C(t-k-1, f-1), walking k downward so n = t-k-1 grows by one
    let r = faulty - 1;
    let mut c = BigUint::one(); // C(f-1, f-1) at k = t-f
    let mut sum = BigUint::zero();
    let mut k = ties - faulty;
    let mut n = r;
    loop {
        sum += &c * BigUint::from(k);
        if k == 1 {
            break;
        }
        k -= 1;
        n += 1;
        c = c * BigUint::from(n) / BigUint::from(n - r);
    }
    let offset = BigRational::new(sum.into(), binomial(ties, faulty).into());
    start as f64 + offset.to_f64().expect("finite ratio")
}

/// E_inspect of every listed entity, taken from the tie block it sits in.
pub fn e_inspect_per_entity(
    list: &SuspiciousnessList,
    faulty: &BTreeSet<Entity>,
) -> BTreeMap<Entity, f64> {
    let mut out = BTreeMap::new();
    let entries = list.entries();
    for block in list.tie_blocks() {
        let members = &entries[block.clone()];
        let f = members.iter().filter(|e| faulty.contains(&e.entity)).count();
        let value = tie_block_expectation(block.start as u64 + 1, members.len() as u64, f as u64);
        for member in members {
            out.insert(member.entity.clone(), value);
        }
    }
    out
}

/// E_inspect of the list: the smallest per-entity value over listed faulty
/// entities, or `None` when the list holds none of them.
pub fn e_inspect(list: &SuspiciousnessList, faulty: &BTreeSet<Entity>) -> Option<f64> {
    let entries = list.entries();
    list.tie_blocks().into_iter().find_map(|block| {
        let members = &entries[block.clone()];
        let f = members.iter().filter(|e| faulty.contains(&e.entity)).count();
        (f > 0).then(|| tie_block_expectation(block.start as u64 + 1, members.len() as u64, f as u64))
    })
}

/// E_inspect with every program entity missing from the list appended as one
/// trailing tie block.
pub fn generalized_e_inspect(
    list: &SuspiciousnessList,
    faulty: &BTreeSet<Entity>,
    program: &ProgramModel,
) -> f64 {
    if let Some(value) = e_inspect(list, faulty) {
        return value;
    }
    let listed: BTreeSet<&Entity> = list.entities().collect();
    let absent = program.entities(list.granularity());
    let absent: Vec<&Entity> = absent.iter().filter(|e| !listed.contains(e)).collect();
    let f = absent.iter().filter(|e| faulty.contains(e)).count();
    tie_block_expectation(list.len() as u64 + 1, absent.len() as u64, f as u64)
}

pub fn exam_score(e_inspect: Option<f64>, entity_count: usize) -> Option<f64> {
    match e_inspect {
        Some(rank) if entity_count > 0 => Some(rank / entity_count as f64),
        _ => None,
    }
}

pub fn at_n(e_inspect: Option<f64>, n: u32) -> bool {
    e_inspect.is_some_and(|rank| rank <= f64::from(n))
}

/// Lifts a statement list to `target` by taking, for each scope, the maximum
/// score over its listed statements.
pub fn aggregate_granularity(
    list: &SuspiciousnessList,
    program: &ProgramModel,
    target: Granularity,
) -> Result<SuspiciousnessList> {
    if list.granularity() != Granularity::Statement {
        return Err(Error::NotStatementLevel(list.granularity().to_string()));
    }
    if target == Granularity::Statement {
        return Ok(list.clone());
    }
    let mut best: BTreeMap<Entity, Score> = BTreeMap::new();
    for entry in list.entries() {
        let Entity::Statement(key) = &entry.entity else {
            return Err(Error::NotStatementLevel(entry.entity.to_string()));
        };
        let owner = program.entity_of(key, target)?;
        best.entry(owner)
            .and_modify(|s| *s = (*s).max(entry.score))
            .or_insert(entry.score);
    }
    SuspiciousnessList::from_scores(target, best)
}

/// Metrics of one technique's list for one bug at one granularity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRecord {
    pub granularity: Granularity,
    pub e_inspect: Option<f64>,
    pub generalized_e_inspect: f64,
    pub exam_score: Option<f64>,
    /// `(n, within top n)` for each requested `n`.
    pub at_n: Vec<(u32, bool)>,
    pub list_length: usize,
    pub wall_clock_s: Option<f64>,
}

impl EvaluationRecord {
    pub fn at(&self, n: u32) -> bool {
        self.at_n
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, hit)| *hit)
            .unwrap_or_else(|| at_n(self.e_inspect, n))
    }
}

pub fn evaluate(
    list: &SuspiciousnessList,
    truth: &GroundTruth,
    program: &ProgramModel,
    wall_clock_s: Option<f64>,
) -> EvaluationRecord {
    let granularity = list.granularity();
    let faulty = truth.entities(granularity);
    let e = e_inspect(list, faulty);
    EvaluationRecord {
        granularity,
        e_inspect: e,
        generalized_e_inspect: generalized_e_inspect(list, faulty, program),
        exam_score: exam_score(e, program.entity_count(granularity)),
        at_n: DEFAULT_AT_N.iter().map(|&n| (n, at_n(e, n))).collect(),
        list_length: list.len(),
        wall_clock_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        example_program, location, scope, tied_entity, tied_faulty, tied_list,
    };
    use crate::model::{LocationKey, LocationKind, ScopeLevel};
    use proptest::prelude::*;

    fn stmt(line: u32) -> Entity {
        Entity::Statement(LocationKey::new("sample.py", line))
    }

    fn list(scores: &[(u32, f64)]) -> SuspiciousnessList {
        SuspiciousnessList::from_scores(
            Granularity::Statement,
            scores.iter().map(|&(l, s)| (stmt(l), Score::real(s))),
        )
        .unwrap()
    }

    /// Mean first-faulty position over every ordering of every tie block.
    fn brute_force(scores: &[f64], faulty: &[bool]) -> Option<f64> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let mut position = 0usize;
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
                j += 1;
            }
            let flags: Vec<bool> = idx[i..j].iter().map(|&k| faulty[k]).collect();
            if flags.iter().any(|&f| f) {
                let mut perms = Vec::new();
                permute(&mut flags.clone(), 0, &mut perms);
                let total: f64 = perms
                    .iter()
                    .map(|p| (position + 1 + p.iter().position(|&f| f).unwrap()) as f64)
                    .sum();
                return Some(total / perms.len() as f64);
            }
            position += j - i;
            i = j;
        }
        None
    }

    fn permute(items: &mut Vec<bool>, k: usize, out: &mut Vec<Vec<bool>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, out);
            items.swap(k, i);
        }
    }

    #[test]
    fn worked_example_per_entity_values() {
        let values = e_inspect_per_entity(&tied_list(), &tied_faulty());
        let got: Vec<f64> = (1..=10).map(|i| values[&tied_entity(i)]).collect();
        let expected = [1.0, 2.0, 4.0, 4.0, 4.0, 6.0, 6.0, 8.0 + 1.0 / 3.0, 8.0 + 1.0 / 3.0, 8.0 + 1.0 / 3.0];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-12, "{got:?}");
        }
        assert!((got[7] - 8.3).abs() < 0.05);
        assert_eq!(e_inspect(&tied_list(), &tied_faulty()), Some(2.0));
    }

    #[test]
    fn three_way_tie_average_rank() {
        let l = list(&[(1, 9.0), (2, 8.0), (3, 5.0), (4, 5.0), (5, 5.0)]);
        assert_eq!(e_inspect(&l, &[stmt(4)].into()), Some(4.0));
    }

    #[test]
    fn no_ties_is_ordinal_position() {
        let l = list(&[(1, 3.0), (2, 2.0), (3, 1.0)]);
        assert_eq!(e_inspect(&l, &[stmt(2)].into()), Some(2.0));
        assert_eq!(e_inspect(&l, &[stmt(9)].into()), None);
    }

    #[test]
    fn block_expectation_matches_closed_form() {
        for t in 1..40u64 {
            for f in 1..=t {
                let exact = tie_block_expectation(1, t, f);
                let closed = 1.0 + (t - f) as f64 / (f + 1) as f64;
                assert!((exact - closed).abs() < 1e-12, "t={t} f={f}");
            }
        }
        let big = tie_block_expectation(1, 5000, 40);
        assert!((big - (1.0 + 4960.0 / 41.0)).abs() < 1e-9);
    }

    #[test]
    fn generalized_on_empty_list() {
        let module = "big.py";
        let program = ProgramModel::new(
            (1..=100)
                .map(|l| location(module, l, LocationKind::Plain, module))
                .collect(),
            vec![scope(module, ScopeLevel::Module, None, module)],
            BTreeMap::new(),
        );
        let faulty = [Entity::Statement(LocationKey::new(module, 37))].into();
        let empty = SuspiciousnessList::empty(Granularity::Statement);
        assert_eq!(generalized_e_inspect(&empty, &faulty, &program), 50.5);

        let short = SuspiciousnessList::from_scores(
            Granularity::Statement,
            (1..=10).map(|l| (Entity::Statement(LocationKey::new(module, l)), Score::real(1.0))),
        )
        .unwrap();
        let long = SuspiciousnessList::from_scores(
            Granularity::Statement,
            (1..=50).map(|l| (Entity::Statement(LocationKey::new(module, l + 50)), Score::real(1.0))),
        )
        .unwrap();
        let faulty = [Entity::Statement(LocationKey::new(module, 30))].into();
        assert!(generalized_e_inspect(&short, &faulty, &program) < generalized_e_inspect(&long, &faulty, &program));
    }

    #[test]
    fn generalized_equals_e_inspect_when_localized() {
        let program = example_program();
        let l = list(&[(1, 2.0), (4, 1.0), (5, 1.0)]);
        let faulty = [stmt(5)].into();
        assert_eq!(generalized_e_inspect(&l, &faulty, &program), e_inspect(&l, &faulty).unwrap());
    }

    #[test]
    fn exam_and_at_n() {
        assert_eq!(exam_score(Some(5.0), 100), Some(0.05));
        assert_eq!(exam_score(Some(1.0), 1), Some(1.0));
        assert_eq!(exam_score(Some(2.0), 10), Some(0.2));
        assert_eq!(exam_score(None, 10), None);
        assert!(at_n(Some(1.0), 1));
        assert!(!at_n(Some(8.3), 5));
        assert!(DEFAULT_AT_N.iter().all(|&n| !at_n(None, n)));
    }

    #[test]
    fn aggregation_takes_maxima() {
        let program = example_program();
        let l = list(&[(4, 0.2), (5, 0.9), (8, 0.4), (1, 0.1)]);
        let functions = aggregate_granularity(&l, &program, Granularity::Function).unwrap();
        let foo = Entity::Scope("sample.py::foo".into());
        assert_eq!(functions.score_of(&foo), Some(Score::real(0.9)));
        assert_eq!(functions.len(), 3);
        let modules = aggregate_granularity(&l, &program, Granularity::Module).unwrap();
        assert_eq!(modules.entries().len(), 1);
        assert_eq!(modules.entries()[0].score, Score::real(0.9));
        assert_eq!(
            aggregate_granularity(&functions, &program, Granularity::Module).unwrap_err(),
            Error::NotStatementLevel("function".into())
        );
    }

    #[test]
    fn aggregation_rejects_unknown_statement() {
        let program = example_program();
        let l = list(&[(42, 1.0)]);
        assert!(aggregate_granularity(&l, &program, Granularity::Function).is_err());
    }

    fn scored_list() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (1usize..=8).prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..4).prop_map(f64::from), n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
    }

    fn build(scores: &[f64], faulty: &[bool]) -> (SuspiciousnessList, BTreeSet<Entity>) {
        let l = SuspiciousnessList::from_scores(
            Granularity::Statement,
            scores.iter().enumerate().map(|(i, &s)| (stmt(i as u32 + 1), Score::real(s))),
        )
        .unwrap();
        let f = faulty
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| stmt(i as u32 + 1))
            .collect();
        (l, f)
    }

    proptest! {
        #[test]
        fn agrees_with_permutation_oracle((scores, faulty) in scored_list()) {
            let (l, f) = build(&scores, &faulty);
            let got = e_inspect(&l, &f);
            let want = brute_force(&scores, &faulty);
            match (got, want) {
                (Some(g), Some(w)) => prop_assert!((g - w).abs() < 1e-9, "{g} vs {w}"),
                (g, w) => prop_assert_eq!(g, w),
            }
        }

        #[test]
        fn bounded_by_tie_block((scores, faulty) in scored_list()) {
            let (l, f) = build(&scores, &faulty);
            let values = e_inspect_per_entity(&l, &f);
            for block in l.tie_blocks() {
                for entry in &l.entries()[block.clone()] {
                    let v = values[&entry.entity];
                    prop_assert!(v >= (block.start + 1) as f64);
                    prop_assert!(v <= block.end as f64);
                }
            }
        }

        #[test]
        fn invariant_under_monotone_rescoring((scores, faulty) in scored_list()) {
            let (l, f) = build(&scores, &faulty);
            let rescored: Vec<f64> = scores.iter().map(|s| (s * 3.0).exp() - 7.0).collect();
            let (l2, _) = build(&rescored, &faulty);
            prop_assert_eq!(e_inspect(&l, &f), e_inspect(&l2, &f));
        }

        #[test]
        fn at_n_monotone(rank in 1.0f64..20.0, n in 1u32..15) {
            prop_assert!(!at_n(Some(rank), n) || at_n(Some(rank), n + 1));
        }
    }
}
