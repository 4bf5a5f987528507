//! AvgFL: weighted sum of min-max normalized member scores.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Entity, Granularity};
use crate::ranking::{Score, SuspiciousnessList};
use crate::technique::{Family, Technique};

/// Min-max scales finite scores into `[0, 1]`; `+inf` becomes 1.
///
/// When every finite score is equal, a positive value maps to 1 and anything
/// else to 0.
pub fn normalize_scores(list: &SuspiciousnessList) -> SuspiciousnessList {
    let finite = list
        .entries()
        .iter()
        .map(|e| e.score.value())
        .filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let scale = |v: f64| -> f64 {
        if v == f64::INFINITY {
            1.0
        } else if hi > lo {
            (v - lo) / (hi - lo)
        } else if v > 0.0 {
            1.0
        } else {
            0.0
        }
    };
    SuspiciousnessList::from_scores(
        list.granularity(),
        list.entries()
            .iter()
            .map(|e| (e.entity.clone(), Score::real(scale(e.score.value())))),
    )
    .expect("entities already unique")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub members: Vec<Technique>,
    pub weights: BTreeMap<Technique, f64>,
}

impl FusionConfig {
    pub fn default_weight(technique: Technique) -> f64 {
        match technique.family() {
            Some(Family::Sbfl) => 3.0,
            Some(Family::Mbfl) => 2.0,
            Some(Family::Ps) | Some(Family::St) => 1.0,
            None => 0.0,
        }
    }

    pub fn new(members: Vec<Technique>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidFusionConfig("no member techniques".into()));
        }
        if let Some(t) = members.iter().find(|t| t.is_fusion()) {
            return Err(Error::InvalidFusionConfig(format!("{t} cannot be a fusion member")));
        }
        let weights = members.iter().map(|&t| (t, Self::default_weight(t))).collect();
        Ok(Self { members, weights })
    }

    /// Every base technique except Tarantula.
    pub fn avgfl_a() -> Self {
        Self::new(
            Technique::BASE
                .into_iter()
                .filter(|&t| t != Technique::Tarantula)
                .collect(),
        )
        .expect("nonempty")
    }

    /// Ochiai, DStar and ST only.
    pub fn avgfl_s() -> Self {
        Self::new(vec![Technique::Ochiai, Technique::DStar, Technique::St]).expect("nonempty")
    }

    /// Replaces the weights of members named in `overrides`.
    pub fn with_weights(mut self, overrides: &BTreeMap<Technique, f64>) -> Result<Self> {
        for (t, &w) in overrides {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidFusionConfig(format!("weight of {t} must be positive, got {w}")));
            }
            if let Some(slot) = self.weights.get_mut(t) {
                *slot = w;
            }
        }
        Ok(self)
    }

    pub fn weight(&self, technique: Technique) -> f64 {
        self.weights.get(&technique).copied().unwrap_or(0.0)
    }
}

/// Parses `sbfl=3,mbfl=2,ochiai=4`. Family keys set every member; technique
/// keys given later override them.
pub fn parse_weights(spec: &str) -> Result<BTreeMap<Technique, f64>> {
    let mut family_weights = Vec::new();
    let mut technique_weights = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidFusionConfig(format!("expected key=value, got {item:?}")))?;
        let weight: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidFusionConfig(format!("bad weight {value:?}")))?;
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidFusionConfig(format!("weight of {key} must be positive")));
        }
        let key = key.trim();
        if let Ok(family) = key.parse::<Family>() {
            family_weights.push((family, weight));
        } else {
            technique_weights.push((key.parse::<Technique>()?, weight));
        }
    }
    let mut out = BTreeMap::new();
    for (family, w) in family_weights {
        for &t in family.members() {
            out.insert(t, w);
        }
    }
    for (t, w) in technique_weights {
        if t.is_fusion() {
            return Err(Error::InvalidFusionConfig(format!("{t} has no weight")));
        }
        out.insert(t, w);
    }
    Ok(out)
}

fn common_granularity<'a>(lists: impl IntoIterator<Item = &'a SuspiciousnessList>) -> Result<Option<Granularity>> {
    let mut granularity = None;
    for list in lists {
        match granularity {
            None => granularity = Some(list.granularity()),
            Some(g) if g != list.granularity() => {
                return Err(Error::GranularityMismatch {
                    expected: g.to_string(),
                    found: list.granularity().to_string(),
                })
            }
            Some(_) => {}
        }
    }
    Ok(granularity)
}

/// Fuses the member lists present in `lists`; lists of other techniques are
/// ignored. An entity missing from a member's list contributes 0 for it.
pub fn avgfl_rank(
    lists: &BTreeMap<Technique, SuspiciousnessList>,
    config: &FusionConfig,
) -> Result<SuspiciousnessList> {
    let members: Vec<(Technique, &SuspiciousnessList)> = config
        .members
        .iter()
        .filter_map(|t| lists.get(t).map(|l| (*t, l)))
        .collect();
    let granularity = common_granularity(members.iter().map(|(_, l)| *l))?
        .ok_or_else(|| Error::InvalidFusionConfig("no member list supplied".into()))?;

    let mut fused: BTreeMap<Entity, f64> = BTreeMap::new();
    for (technique, list) in members {
        let weight = config.weight(technique);
        for entry in normalize_scores(list).entries() {
            *fused.entry(entry.entity.clone()).or_insert(0.0) += weight * entry.score.value();
        }
    }
    SuspiciousnessList::from_scores(
        granularity,
        fused.into_iter().map(|(e, s)| (e, Score::real(s))),
    )
}

/// Learning-to-rank feature table as CSV: `entity,<technique...>,faulty`.
///
/// One row per entity in the union of the lists, sorted by entity. Features
/// are normalized scores (0 when a technique does not list the entity) and
/// `faulty` is 1 or 0.
pub fn export_ltr(
    lists: &BTreeMap<Technique, SuspiciousnessList>,
    faulty: &BTreeSet<Entity>,
) -> Result<String> {
    common_granularity(lists.values())?;
    let normalized: Vec<(Technique, SuspiciousnessList)> =
        lists.iter().map(|(t, l)| (*t, normalize_scores(l))).collect();
    let entities: BTreeSet<&Entity> = normalized.iter().flat_map(|(_, l)| l.entities()).collect();

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["entity".to_string()];
    header.extend(normalized.iter().map(|(t, _)| t.id().to_string()));
    header.push("faulty".into());
    writer.write_record(&header).expect("in-memory write");
    for entity in entities {
        let mut row = vec![entity.to_string()];
        for (_, list) in &normalized {
            let value = list.score_of(entity).map_or(0.0, Score::value);
            row.push(value.to_string());
        }
        row.push(if faulty.contains(entity) { "1" } else { "0" }.into());
        writer.write_record(&row).expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}
