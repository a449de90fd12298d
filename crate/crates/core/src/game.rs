//! Prisoner's Dilemma payoffs for the eight commitment strategies under
//! no policy, institutional reward, and institutional punishment, with
//! optional participation errors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strategy::{Move, Strategy, NUM_STRATEGIES};

/// One-shot Prisoner's Dilemma payoffs, with `T > R > P > S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

impl GameParams {
    pub fn new(t: f64, r: f64, p: f64, s: f64) -> Result<Self> {
        for (name, v) in [("T", t), ("R", r), ("P", p), ("S", s)] {
            if !v.is_finite() {
                return Err(Error::param(name, v, "must be finite"));
            }
        }
        if !(t > r && r > p && p > s) {
            return Err(Error::param(
                "T,R,P,S",
                format!("({t}, {r}, {p}, {s})"),
                "Prisoner's Dilemma requires T > R > P > S",
            ));
        }
        Ok(GameParams { t, r, p, s })
    }

    /// Donation game: `T = b`, `R = b - c`, `P = 0`, `S = -c`.
    pub fn donation(benefit: f64, cost: f64) -> Result<Self> {
        if !(cost > 0.0 && benefit > cost) {
            return Err(Error::param(
                "b,c",
                format!("({benefit}, {cost})"),
                "donation game requires b > c > 0",
            ));
        }
        GameParams::new(benefit, benefit - cost, 0.0, -cost)
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Row player's payoff for a single PD round.
    pub fn pd(&self, own: Move, other: Move) -> f64 {
        match (own, other) {
            (Move::Cooperate, Move::Cooperate) => self.r,
            (Move::Cooperate, Move::Defect) => self.s,
            (Move::Defect, Move::Cooperate) => self.t,
            (Move::Defect, Move::Defect) => self.p,
        }
    }
}

impl Default for GameParams {
    /// `R = 1, S = -1, T = 2, P = 0`, i.e. the donation game with `b = 2, c = 1`.
    fn default() -> Self {
        GameParams {
            t: 2.0,
            r: 1.0,
            p: 0.0,
            s: -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    NoPolicy,
    Reward,
    Punishment,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::NoPolicy, Regime::Reward, Regime::Punishment];

    pub fn name(self) -> &'static str {
        match self {
            Regime::NoPolicy => "nopolicy",
            Regime::Reward => "reward",
            Regime::Punishment => "punishment",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], "")
            .as_str()
        {
            "nopolicy" | "none" => Ok(Regime::NoPolicy),
            "reward" => Ok(Regime::Reward),
            "punishment" | "punish" => Ok(Regime::Punishment),
            _ => Err(Error::param(
                "regime",
                s,
                "expected one of nopolicy, reward, punishment",
            )),
        }
    }
}

/// Institutional incentive scheme: a per-capita budget `u`, of which a
/// fraction `alpha` rewards participation and the rest rewards compliance
/// (reward) or punishes non-compliance (punishment).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncentivePolicy {
    regime: Regime,
    budget: f64,
    alpha: f64,
}

impl IncentivePolicy {
    pub fn new(regime: Regime, budget: f64, alpha: f64) -> Result<Self> {
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::param("u", budget, "budget must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", alpha, "must lie in [0, 1]"));
        }
        if regime == Regime::NoPolicy && budget != 0.0 {
            return Err(Error::param(
                "u",
                budget,
                "the no-policy regime requires u = 0",
            ));
        }
        Ok(IncentivePolicy {
            regime,
            budget,
            alpha,
        })
    }

    pub fn no_policy() -> Self {
        IncentivePolicy {
            regime: Regime::NoPolicy,
            budget: 0.0,
            alpha: 0.0,
        }
    }

    pub fn reward(budget: f64, alpha: f64) -> Result<Self> {
        IncentivePolicy::new(Regime::Reward, budget, alpha)
    }

    pub fn punishment(budget: f64, alpha: f64) -> Result<Self> {
        IncentivePolicy::new(Regime::Punishment, budget, alpha)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }
    pub fn budget(&self) -> f64 {
        self.budget
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Incentive received by an accepting player when a commitment formed.
    fn committed_incentive(&self, in_move: Move) -> f64 {
        let (u, a) = (self.budget, self.alpha);
        match (self.regime, in_move) {
            (Regime::NoPolicy, _) => 0.0,
            (Regime::Reward, Move::Cooperate) => u,
            (Regime::Reward, Move::Defect) => a * u,
            (Regime::Punishment, Move::Cooperate) => a * u,
            (Regime::Punishment, Move::Defect) => (2.0 * a - 1.0) * u,
        }
    }

    /// Participation reward for an accepting player whose partner refused.
    fn participation_incentive(&self) -> f64 {
        match self.regime {
            Regime::NoPolicy => 0.0,
            Regime::Reward | Regime::Punishment => self.alpha * self.budget,
        }
    }
}

/// Commitment cost `epsilon` (shared equally by the two committed players)
/// and participation-error probability `chi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitmentParams {
    cost: f64,
    noise: f64,
}

impl CommitmentParams {
    pub fn new(cost: f64, noise: f64) -> Result<Self> {
        if !(cost >= 0.0) || !cost.is_finite() {
            return Err(Error::param(
                "eps",
                cost,
                "commitment cost must be finite and >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::param(
                "chi",
                noise,
                "error probability must lie in [0, 1]",
            ));
        }
        Ok(CommitmentParams { cost, noise })
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
    pub fn noise(&self) -> f64 {
        self.noise
    }
}

/// Noise-free payoff to `row` against `col`.
///
/// A commitment forms only when both players accept; each then pays half the
/// cost and plays its in-commitment move. Otherwise both play their
/// out-of-commitment moves and an accepting player may still collect the
/// participation reward.
pub fn base_payoff(
    row: Strategy,
    col: Strategy,
    game: &GameParams,
    policy: &IncentivePolicy,
    cost: f64,
) -> f64 {
    if row.accepts() && col.accepts() {
        game.pd(row.in_commitment, col.in_commitment) - cost / 2.0
            + policy.committed_incentive(row.in_commitment)
    } else {
        let pd = game.pd(row.out_commitment, col.out_commitment);
        if row.accepts() {
            pd + policy.participation_incentive()
        } else {
            pd
        }
    }
}

/// Row-player payoffs, `entries[i][j]` being the payoff of strategy `i`
/// against strategy `j` in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub entries: [[f64; NUM_STRATEGIES]; NUM_STRATEGIES],
}

impl PayoffMatrix {
    pub fn from_entries(entries: [[f64; NUM_STRATEGIES]; NUM_STRATEGIES]) -> Self {
        PayoffMatrix { entries }
    }

    /// The noise-free table of [`base_payoff`] values.
    pub fn base(game: &GameParams, policy: &IncentivePolicy, cost: f64) -> Self {
        let mut entries = [[0.0; NUM_STRATEGIES]; NUM_STRATEGIES];
        for row in Strategy::ALL {
            for col in Strategy::ALL {
                entries[row.index()][col.index()] = base_payoff(row, col, game, policy, cost);
            }
        }
        PayoffMatrix { entries }
    }

    #[inline]
    pub fn get(&self, row: Strategy, col: Strategy) -> f64 {
        self.entries[row.index()][col.index()]
    }

    /// CSV with a header row and a label column, both in canonical order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy");
        for s in Strategy::ALL {
            out.push(',');
            out.push_str(s.label());
        }
        out.push('\n');
        for row in Strategy::ALL {
            out.push_str(row.label());
            for col in Strategy::ALL {
                out.push(',');
                out.push_str(&crate::format::sig12(self.get(row, col)));
            }
            out.push('\n');
        }
        out
    }
}

/// Payoff matrix with participation errors folded in.
///
/// Each player's accept/refuse decision is inverted independently with
/// probability `chi`; incentives follow the realized decision.
pub fn build_matrix(
    game: &GameParams,
    policy: &IncentivePolicy,
    commit: &CommitmentParams,
) -> PayoffMatrix {
    let base = PayoffMatrix::base(game, policy, commit.cost());
    let chi = commit.noise();
    if chi == 0.0 {
        return base;
    }
    let keep = (1.0 - chi) * (1.0 - chi);
    let one = chi * (1.0 - chi);
    let both = chi * chi;

    let mut entries = [[0.0; NUM_STRATEGIES]; NUM_STRATEGIES];
    for row in Strategy::ALL {
        let row_f = row.flip_participation();
        for col in Strategy::ALL {
            let col_f = col.flip_participation();
            entries[row.index()][col.index()] = keep * base.get(row, col)
                + one * (base.get(row_f, col) + base.get(row, col_f))
                + both * base.get(row_f, col_f);
        }
    }
    PayoffMatrix { entries }
}

/// Probability that an `s`-player cooperates when paired with another
/// `s`-player, given participation-error probability `chi`.
pub fn cooperation_propensity(s: Strategy, chi: f64) -> f64 {
    let accept = if s.accepts() { 1.0 - chi } else { chi };
    let formed = accept * accept;
    let in_c = if s.in_commitment.is_cooperate() {
        1.0
    } else {
        0.0
    };
    let out_c = if s.out_commitment.is_cooperate() {
        1.0
    } else {
        0.0
    };
    formed * in_c + (1.0 - formed) * out_c
}
