//! The eight commitment strategies.
//!
//! A strategy is a triple `PXY`: whether the player accepts a commitment
//! proposal (`A`) or refuses it (`N`), the move played when a commitment was
//! formed (`X`), and the move played otherwise (`Y`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of distinct strategies.
pub const NUM_STRATEGIES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Participation {
    Accept,
    Refuse,
}

impl Participation {
    pub fn flipped(self) -> Self {
        match self {
            Participation::Accept => Participation::Refuse,
            Participation::Refuse => Participation::Accept,
        }
    }
}

/// A move in the one-shot Prisoner's Dilemma.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Cooperate,
    Defect,
}

impl Move {
    pub fn is_cooperate(self) -> bool {
        self == Move::Cooperate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub participation: Participation,
    pub in_commitment: Move,
    pub out_commitment: Move,
}

impl Strategy {
    pub const ACC: Strategy =
        Strategy::new(Participation::Accept, Move::Cooperate, Move::Cooperate);
    pub const ACD: Strategy = Strategy::new(Participation::Accept, Move::Cooperate, Move::Defect);
    pub const ADC: Strategy = Strategy::new(Participation::Accept, Move::Defect, Move::Cooperate);
    pub const ADD: Strategy = Strategy::new(Participation::Accept, Move::Defect, Move::Defect);
    pub const NCC: Strategy =
        Strategy::new(Participation::Refuse, Move::Cooperate, Move::Cooperate);
    pub const NCD: Strategy = Strategy::new(Participation::Refuse, Move::Cooperate, Move::Defect);
    pub const NDC: Strategy = Strategy::new(Participation::Refuse, Move::Defect, Move::Cooperate);
    pub const NDD: Strategy = Strategy::new(Participation::Refuse, Move::Defect, Move::Defect);

    /// All strategies in canonical order; `ALL[s.index()] == s`.
    pub const ALL: [Strategy; NUM_STRATEGIES] = [
        Strategy::ACC,
        Strategy::ACD,
        Strategy::ADC,
        Strategy::ADD,
        Strategy::NCC,
        Strategy::NCD,
        Strategy::NDC,
        Strategy::NDD,
    ];

    pub const fn new(
        participation: Participation,
        in_commitment: Move,
        out_commitment: Move,
    ) -> Self {
        Strategy {
            participation,
            in_commitment,
            out_commitment,
        }
    }

    /// Canonical index: participation is the high bit, then the
    /// in-commitment move, then the out-of-commitment move (`D` = 1).
    pub const fn index(self) -> usize {
        let p = matches!(self.participation, Participation::Refuse) as usize;
        let x = matches!(self.in_commitment, Move::Defect) as usize;
        let y = matches!(self.out_commitment, Move::Defect) as usize;
        (p << 2) | (x << 1) | y
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Strategy::ALL.get(index).copied()
    }

    pub fn accepts(self) -> bool {
        self.participation == Participation::Accept
    }

    /// Same moves, opposite participation decision.
    pub fn flip_participation(self) -> Self {
        Strategy {
            participation: self.participation.flipped(),
            ..self
        }
    }

    pub fn label(self) -> &'static str {
        const LABELS: [&str; NUM_STRATEGIES] =
            ["ACC", "ACD", "ADC", "ADD", "NCC", "NCD", "NDC", "NDD"];
        LABELS[self.index()]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Strategy::ALL
            .into_iter()
            .find(|st| st.label() == upper)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}
