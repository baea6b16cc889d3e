//! Penalty values in ℕ ∪ {∞} and per-player thresholds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::players::Player;

/// A natural number or infinity. Ordered with `Infinite` above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Penalty {
    Finite(u64),
    Infinite,
}

impl Penalty {
    pub const ZERO: Penalty = Penalty::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Penalty::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Penalty::Finite(k) => Some(k),
            Penalty::Infinite => None,
        }
    }

    pub fn saturating_add(self, k: u64) -> Penalty {
        match self {
            Penalty::Finite(a) => a.checked_add(k).map_or(Penalty::Infinite, Penalty::Finite),
            Penalty::Infinite => Penalty::Infinite,
        }
    }
}

impl From<u64> for Penalty {
    fn from(k: u64) -> Self {
        Penalty::Finite(k)
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Finite(k) => write!(f, "{k}"),
            Penalty::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid penalty `{0}`: expected a natural number or `inf`")]
pub struct ParsePenaltyError(pub String);

impl FromStr for Penalty {
    type Err = ParsePenaltyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Penalty::Infinite);
        }
        t.parse::<u64>()
            .map(Penalty::Finite)
            .map_err(|_| ParsePenaltyError(s.to_string()))
    }
}

impl Serialize for Penalty {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Penalty::Finite(k) => s.serialize_u64(*k),
            Penalty::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Penalty {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(Penalty::Finite(k)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Main and retaliation penalty bounds, one entry per player (index 0 is player 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thresholds {
    pub main: Vec<Penalty>,
    pub retaliation: Vec<Penalty>,
}

impl Thresholds {
    /// Every bound infinite.
    pub fn unbounded(players: usize) -> Self {
        Thresholds {
            main: vec![Penalty::Infinite; players],
            retaliation: vec![Penalty::Infinite; players],
        }
    }

    pub fn with_main(mut self, bounds: &[Penalty]) -> Self {
        self.main = bounds.to_vec();
        self
    }

    pub fn with_retaliation(mut self, bounds: &[Penalty]) -> Self {
        self.retaliation = bounds.to_vec();
        self
    }

    pub fn players(&self) -> usize {
        self.main.len()
    }

    pub fn main_of(&self, i: Player) -> Penalty {
        self.main[i - 1]
    }

    pub fn retaliation_of(&self, i: Player) -> Penalty {
        self.retaliation[i - 1]
    }
}
