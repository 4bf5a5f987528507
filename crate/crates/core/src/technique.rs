//! Technique and family identifiers, and dispatch to the scoring modules.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{avgfl_rank, FusionConfig};
use crate::mbfl::{mbfl_rank, MbflModel};
use crate::model::TestEvidence;
use crate::ranking::SuspiciousnessList;
use crate::reachability::{ps_rank, st_rank};
use crate::sbfl::{sbfl_rank, SbflFormula};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Tarantula,
    Ochiai,
    #[serde(rename = "dstar")]
    DStar,
    Metallaxis,
    Muse,
    Ps,
    St,
    AvgflA,
    AvgflS,
}

impl Technique {
    pub const ALL: [Technique; 9] = [
        Technique::Tarantula,
        Technique::Ochiai,
        Technique::DStar,
        Technique::Metallaxis,
        Technique::Muse,
        Technique::Ps,
        Technique::St,
        Technique::AvgflA,
        Technique::AvgflS,
    ];

    pub const BASE: [Technique; 7] = [
        Technique::Tarantula,
        Technique::Ochiai,
        Technique::DStar,
        Technique::Metallaxis,
        Technique::Muse,
        Technique::Ps,
        Technique::St,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Technique::Tarantula => "tarantula",
            Technique::Ochiai => "ochiai",
            Technique::DStar => "dstar",
            Technique::Metallaxis => "metallaxis",
            Technique::Muse => "muse",
            Technique::Ps => "ps",
            Technique::St => "st",
            Technique::AvgflA => "avgfl_a",
            Technique::AvgflS => "avgfl_s",
        }
    }

    /// Family of a base technique; fusion techniques belong to none.
    pub fn family(self) -> Option<Family> {
        match self {
            Technique::Tarantula | Technique::Ochiai | Technique::DStar => Some(Family::Sbfl),
            Technique::Metallaxis | Technique::Muse => Some(Family::Mbfl),
            Technique::Ps => Some(Family::Ps),
            Technique::St => Some(Family::St),
            Technique::AvgflA | Technique::AvgflS => None,
        }
    }

    pub fn is_fusion(self) -> bool {
        self.family().is_none()
    }

    /// Parses a comma-separated list; family names expand to their members
    /// and `all` to every technique.
    pub fn parse_list(spec: &str) -> Result<Vec<Technique>> {
        let mut out: Vec<Technique> = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let expanded: Vec<Technique> = if item == "all" {
                Technique::ALL.to_vec()
            } else if let Ok(family) = item.parse::<Family>() {
                family.members().to_vec()
            } else {
                vec![item.parse()?]
            };
            for t in expanded {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::UnknownTechnique(spec.to_string()));
        }
        Ok(out)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::UnknownTechnique(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sbfl,
    Mbfl,
    Ps,
    St,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Sbfl, Family::Mbfl, Family::Ps, Family::St];

    pub fn id(self) -> &'static str {
        match self {
            Family::Sbfl => "sbfl",
            Family::Mbfl => "mbfl",
            Family::Ps => "ps",
            Family::St => "st",
        }
    }

    pub fn members(self) -> &'static [Technique] {
        match self {
            Family::Sbfl => &[Technique::Tarantula, Technique::Ochiai, Technique::DStar],
            Family::Mbfl => &[Technique::Metallaxis, Technique::Muse],
            Family::Ps => &[Technique::Ps],
            Family::St => &[Technique::St],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.id() == s)
            .ok_or_else(|| Error::UnknownTechnique(s.to_string()))
    }
}

fn run_base(technique: Technique, evidence: &TestEvidence) -> Result<SuspiciousnessList> {
    match technique {
        Technique::Tarantula => sbfl_rank(evidence, SbflFormula::tarantula()),
        Technique::Ochiai => sbfl_rank(evidence, SbflFormula::ochiai()),
        Technique::DStar => sbfl_rank(evidence, SbflFormula::dstar()),
        Technique::Metallaxis => mbfl_rank(evidence, MbflModel::Metallaxis),
        Technique::Muse => mbfl_rank(evidence, MbflModel::Muse),
        Technique::Ps => ps_rank(evidence),
        Technique::St => st_rank(evidence),
        Technique::AvgflA | Technique::AvgflS => unreachable!("fusion handled by caller"),
    }
}

/// Statement-level list of `technique` for one bug.
///
/// Fusion techniques combine whichever members have the evidence they need;
/// they are unavailable only when no member is.
pub fn run_technique(
    technique: Technique,
    evidence: &TestEvidence,
    weights: &BTreeMap<Technique, f64>,
) -> Result<SuspiciousnessList> {
    let config = match technique {
        Technique::AvgflA => FusionConfig::avgfl_a(),
        Technique::AvgflS => FusionConfig::avgfl_s(),
        base => return run_base(base, evidence),
    }
    .with_weights(weights)?;

    let mut lists = BTreeMap::new();
    for &member in &config.members {
        match run_base(member, evidence) {
            Ok(list) => {
                lists.insert(member, list);
            }
            Err(Error::TechniqueUnavailable { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    if lists.is_empty() {
        return Err(Error::TechniqueUnavailable {
            technique: technique.id().to_string(),
            reason: "no member technique available".to_string(),
        });
    }
    avgfl_rank(&lists, &config)
}
