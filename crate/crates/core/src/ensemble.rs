//! Majority voting over the per-modality predictions.
//!
//! Even splits are broken by the single most confident active vote. If the
//! most confident votes disagree with each other, the text vote decides when
//! it is active; otherwise the first tied vote in the order likes, friends,
//! followers decides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stance::{Modality, StanceLabel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub modality: Modality,
    /// `None` when the modality has no usable input for this post.
    pub prediction: Option<(StanceLabel, f64)>,
}

impl Vote {
    pub fn new(modality: Modality, label: StanceLabel, confidence: f64) -> Self {
        Vote {
            modality,
            prediction: Some((label, confidence)),
        }
    }

    pub fn absent(modality: Modality) -> Self {
        Vote {
            modality,
            prediction: None,
        }
    }

    pub fn is_present(&self) -> bool {
        self.prediction.is_some()
    }
}

/// Non-empty subset of the four modalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnsembleConfig {
    active: [bool; 4],
}

/// Column order used when naming configs: Li, Fr, Fl, Rb.
const NAME_ORDER: [Modality; 4] = [Modality::Likes, Modality::Friends, Modality::Followers, Modality::Text];

impl EnsembleConfig {
    pub fn new(modalities: &[Modality]) -> Result<Self> {
        let mut active = [false; 4];
        for m in modalities {
            active[m.position()] = true;
        }
        if !active.iter().any(|&a| a) {
            return Err(Error::param("ensemble", "at least one modality must be active"));
        }
        Ok(EnsembleConfig { active })
    }

    pub fn full() -> Self {
        EnsembleConfig { active: [true; 4] }
    }

    pub fn single(m: Modality) -> Self {
        Self::new(&[m]).expect("non-empty")
    }

    pub fn is_active(&self, m: Modality) -> bool {
        self.active[m.position()]
    }

    pub fn modalities(&self) -> impl Iterator<Item = Modality> + '_ {
        Modality::ALL.into_iter().filter(|m| self.is_active(*m))
    }

    pub fn len(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for EnsembleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<_> = NAME_ORDER
            .iter()
            .filter(|m| self.is_active(**m))
            .map(|m| m.tag())
            .collect();
        f.write_str(&tags.join("+"))
    }
}

impl FromStr for EnsembleConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") || s.eq_ignore_ascii_case("all") {
            return Ok(Self::full());
        }
        let ms = s
            .split(['+', ','])
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Modality>>>()?;
        Self::new(&ms)
    }
}

impl Serialize for EnsembleConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EnsembleConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How a decision was reached; recorded in vote traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Majority,
    Confidence,
    FixedOrder,
}

pub fn majority_vote(votes: &[Vote], config: &EnsembleConfig) -> Result<StanceLabel> {
    decide(votes, config).map(|(l, _)| l)
}

pub fn decide(votes: &[Vote], config: &EnsembleConfig) -> Result<(StanceLabel, Decision)> {
    let live: Vec<(Modality, StanceLabel, f64)> = votes
        .iter()
        .filter(|v| config.is_active(v.modality))
        .filter_map(|v| v.prediction.map(|(l, c)| (v.modality, l, c)))
        .collect();
    if live.is_empty() {
        return Err(Error::NoVotes);
    }
    let favor = live.iter().filter(|v| v.1 == StanceLabel::Favor).count();
    let against = live.len() - favor;
    if favor != against {
        let label = if favor > against { StanceLabel::Favor } else { StanceLabel::Against };
        return Ok((label, Decision::Majority));
    }

    let top = live.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<_> = live.iter().filter(|v| v.2 == top).collect();
    if tied.iter().all(|v| v.1 == tied[0].1) {
        return Ok((tied[0].1, Decision::Confidence));
    }
    if let Some(text) = live.iter().find(|v| v.0 == Modality::Text) {
        return Ok((text.1, Decision::FixedOrder));
    }
    tied.sort_by_key(|v| v.0.position());
    Ok((tied[0].1, Decision::FixedOrder))
}

/// The nine component subsets of the ablation table, in row order:
/// Rb, Li, Fr, Fl, Li+Rb, Fr+Rb, Fl+Rb, Li+Fr+Fl, Li+Fr+Fl+Rb.
pub fn ablation_grid() -> Vec<EnsembleConfig> {
    use Modality::*;
    let rows: [&[Modality]; 9] = [
        &[Text],
        &[Likes],
        &[Friends],
        &[Followers],
        &[Likes, Text],
        &[Friends, Text],
        &[Followers, Text],
        &[Likes, Friends, Followers],
        &[Likes, Friends, Followers, Text],
    ];
    rows.iter()
        .map(|r| EnsembleConfig::new(r).expect("non-empty"))
        .collect()
}
