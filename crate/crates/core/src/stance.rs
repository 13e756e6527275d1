use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Relation;

/// Two-class stance. Class index 0 is favor, 1 is against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceLabel {
    Favor,
    Against,
}

impl StanceLabel {
    pub const ALL: [StanceLabel; 2] = [StanceLabel::Favor, StanceLabel::Against];

    pub fn index(self) -> usize {
        match self {
            StanceLabel::Favor => 0,
            StanceLabel::Against => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => StanceLabel::Favor,
            _ => StanceLabel::Against,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            StanceLabel::Favor => StanceLabel::Against,
            StanceLabel::Against => StanceLabel::Favor,
        }
    }

    pub fn as_upper(self) -> &'static str {
        match self {
            StanceLabel::Favor => "FAVOR",
            StanceLabel::Against => "AGAINST",
        }
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_upper())
    }
}

impl FromStr for StanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FAVOR" => Ok(StanceLabel::Favor),
            "AGAINST" => Ok(StanceLabel::Against),
            other => Err(Error::param("stance", format!("expected FAVOR or AGAINST, got {other:?}"))),
        }
    }
}

/// Input channel feeding one voter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Likes,
    Friends,
    Followers,
}

impl Modality {
    /// Also the fixed tie-break order.
    pub const ALL: [Modality; 4] = [Modality::Text, Modality::Likes, Modality::Friends, Modality::Followers];

    pub fn relation(self) -> Option<Relation> {
        match self {
            Modality::Text => None,
            Modality::Likes => Some(Relation::Likes),
            Modality::Friends => Some(Relation::Friends),
            Modality::Followers => Some(Relation::Followers),
        }
    }

    pub fn from_relation(r: Relation) -> Self {
        match r {
            Relation::Likes => Modality::Likes,
            Relation::Friends => Modality::Friends,
            Relation::Followers => Modality::Followers,
        }
    }

    /// Short tag used in ablation tables: Rb, Li, Fr, Fl.
    pub fn tag(self) -> &'static str {
        match self {
            Modality::Text => "Rb",
            Modality::Likes => "Li",
            Modality::Friends => "Fr",
            Modality::Followers => "Fl",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Likes => "likes",
            Modality::Friends => "friends",
            Modality::Followers => "followers",
        }
    }

    pub fn position(self) -> usize {
        Modality::ALL.iter().position(|&m| m == self).expect("listed")
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "rb" => Ok(Modality::Text),
            "likes" | "li" => Ok(Modality::Likes),
            "friends" | "fr" => Ok(Modality::Friends),
            "followers" | "fl" => Ok(Modality::Followers),
            other => Err(Error::param("modality", format!("unknown modality {other:?}"))),
        }
    }
}
