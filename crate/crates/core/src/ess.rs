//! Evolutionarily stable strategies and the four-axis ESS census.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    build_matrix, CommitmentParams, GameParams, IncentivePolicy, PayoffMatrix, Regime,
};
use crate::grid::Axis;
use crate::strategy::{Strategy, NUM_STRATEGIES};
use crate::PAYOFF_TOL;

/// How an equal-fitness mutant is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EssRule {
    /// Maynard Smith: on a tie against the resident, the resident must do
    /// strictly better against the mutant than the mutant does against itself.
    #[default]
    Classical,
    /// A tie against the resident never counts as invasion.
    Weak,
}

impl EssRule {
    pub fn name(self) -> &'static str {
        match self {
            EssRule::Classical => "classical",
            EssRule::Weak => "weak",
        }
    }
}

impl fmt::Display for EssRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EssRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" | "strict" => Ok(EssRule::Classical),
            "weak" => Ok(EssRule::Weak),
            _ => Err(Error::param("ess_rule", s, "expected classical or weak")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The mutant earns strictly more against the resident than the resident does.
    InvadesStrictly,
    /// Tie against the resident, and the second-order condition fails.
    NeutralUndecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssVerdict {
    pub resident: Strategy,
    pub is_ess: bool,
    pub failing_mutants: Vec<(Strategy, FailureReason)>,
}

fn check_mutant(
    resident: Strategy,
    mutant: Strategy,
    m: &PayoffMatrix,
    rule: EssRule,
) -> Option<FailureReason> {
    let rr = m.get(resident, resident);
    let mr = m.get(mutant, resident);
    if rr > mr + PAYOFF_TOL {
        return None;
    }
    if mr > rr + PAYOFF_TOL {
        return Some(FailureReason::InvadesStrictly);
    }
    match rule {
        EssRule::Weak => None,
        EssRule::Classical => {
            if m.get(resident, mutant) > m.get(mutant, mutant) + PAYOFF_TOL {
                None
            } else {
                Some(FailureReason::NeutralUndecided)
            }
        }
    }
}

pub fn is_ess(resident: Strategy, matrix: &PayoffMatrix) -> EssVerdict {
    is_ess_with_rule(resident, matrix, EssRule::Classical)
}

pub fn is_ess_with_rule(resident: Strategy, matrix: &PayoffMatrix, rule: EssRule) -> EssVerdict {
    let failing_mutants: Vec<_> = Strategy::ALL
        .into_iter()
        .filter(|&m| m != resident)
        .filter_map(|m| check_mutant(resident, m, matrix, rule).map(|r| (m, r)))
        .collect();
    EssVerdict {
        resident,
        is_ess: failing_mutants.is_empty(),
        failing_mutants,
    }
}

/// ESS flag for every strategy, without collecting the failure list.
pub fn ess_flags(matrix: &PayoffMatrix, rule: EssRule) -> [bool; NUM_STRATEGIES] {
    let mut flags = [false; NUM_STRATEGIES];
    for r in Strategy::ALL {
        flags[r.index()] = Strategy::ALL
            .into_iter()
            .all(|m| m == r || check_mutant(r, m, matrix, rule).is_none());
    }
    flags
}

/// The four census axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssGrid {
    pub u: Axis,
    pub eps: Axis,
    pub alpha: Axis,
    pub chi: Axis,
}

impl EssGrid {
    /// u, eps in [0, 3] step 0.05; alpha in [0, 1] step 0.05; chi in [0, 0.2] step 0.02.
    pub fn paper() -> Self {
        EssGrid {
            u: Axis {
                start: 0.0,
                stop: 3.0,
                step: 0.05,
            },
            eps: Axis {
                start: 0.0,
                stop: 3.0,
                step: 0.05,
            },
            alpha: Axis {
                start: 0.0,
                stop: 1.0,
                step: 0.05,
            },
            chi: Axis {
                start: 0.0,
                stop: 0.2,
                step: 0.02,
            },
        }
    }

    pub fn total(&self) -> u64 {
        [self.u, self.eps, self.alpha, self.chi]
            .iter()
            .map(|a| a.len() as u64)
            .product()
    }
}

/// Named census axes, in iteration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensusAxis {
    U,
    Eps,
    Alpha,
    Chi,
}

impl CensusAxis {
    pub const ALL: [CensusAxis; 4] = [
        CensusAxis::U,
        CensusAxis::Eps,
        CensusAxis::Alpha,
        CensusAxis::Chi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CensusAxis::U => "u",
            CensusAxis::Eps => "eps",
            CensusAxis::Alpha => "alpha",
            CensusAxis::Chi => "chi",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssCensus {
    pub grid: EssGrid,
    pub regime: Regime,
    pub rule: EssRule,
    pub total_configurations: u64,
    /// Number of grid points at which each strategy is ESS.
    pub counts: [u64; NUM_STRATEGIES],
    /// Per-axis counts with the other three axes summed out, indexed
    /// `[axis][axis value index][strategy]`.
    pub marginals: [Vec<[u64; NUM_STRATEGIES]>; 4],
}

impl EssCensus {
    pub fn count(&self, s: Strategy) -> u64 {
        self.counts[s.index()]
    }

    /// Strategies that were ESS at least once.
    pub fn ess_strategies(&self) -> Vec<Strategy> {
        Strategy::ALL
            .into_iter()
            .filter(|s| self.count(*s) > 0)
            .collect()
    }

    pub fn marginal(&self, axis: CensusAxis) -> &[[u64; NUM_STRATEGIES]] {
        &self.marginals[axis as usize]
    }

    pub fn axis(&self, axis: CensusAxis) -> Axis {
        match axis {
            CensusAxis::U => self.grid.u,
            CensusAxis::Eps => self.grid.eps,
            CensusAxis::Alpha => self.grid.alpha,
            CensusAxis::Chi => self.grid.chi,
        }
    }
}

struct Tally {
    counts: [u64; NUM_STRATEGIES],
    marginals: [Vec<[u64; NUM_STRATEGIES]>; 4],
}

impl Tally {
    fn new(grid: &EssGrid) -> Self {
        Tally {
            counts: [0; NUM_STRATEGIES],
            marginals: [
                vec![[0; NUM_STRATEGIES]; grid.u.len()],
                vec![[0; NUM_STRATEGIES]; grid.eps.len()],
                vec![[0; NUM_STRATEGIES]; grid.alpha.len()],
                vec![[0; NUM_STRATEGIES]; grid.chi.len()],
            ],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for (mine, theirs) in self.marginals.iter_mut().zip(other.marginals) {
            for (row, other_row) in mine.iter_mut().zip(theirs) {
                for (a, b) in row.iter_mut().zip(other_row) {
                    *a += b;
                }
            }
        }
        self
    }
}

/// Counts, for every strategy, the grid points at which it is ESS.
///
/// Grid points are visited in parallel; counts are integers, so the result
/// does not depend on the worker count.
pub fn ess_census(
    grid: &EssGrid,
    game: &GameParams,
    regime: Regime,
    rule: EssRule,
) -> Result<EssCensus> {
    if regime == Regime::NoPolicy {
        return Err(Error::param(
            "regime",
            regime,
            "the census needs reward or punishment",
        ));
    }
    for axis in [grid.u, grid.eps, grid.alpha, grid.chi] {
        if axis.is_empty() || !(axis.step > 0.0) {
            return Err(Error::EmptyGrid);
        }
    }
    // Validate the corners once so the inner loop cannot fail.
    for (u, a) in [
        (grid.u.start, grid.alpha.start),
        (
            grid.u.value(grid.u.len() - 1),
            grid.alpha.value(grid.alpha.len() - 1),
        ),
    ] {
        IncentivePolicy::new(regime, u, a)?;
    }
    for (e, c) in [
        (grid.eps.start, grid.chi.start),
        (
            grid.eps.value(grid.eps.len() - 1),
            grid.chi.value(grid.chi.len() - 1),
        ),
    ] {
        CommitmentParams::new(e, c)?;
    }

    let (nu, ne) = (grid.u.len(), grid.eps.len());
    let tally = (0..nu * ne)
        .into_par_iter()
        .fold(
            || Tally::new(grid),
            |mut tally, outer| {
                let (iu, ie) = (outer / ne, outer % ne);
                for ia in 0..grid.alpha.len() {
                    let policy =
                        IncentivePolicy::new(regime, grid.u.value(iu), grid.alpha.value(ia))
                            .expect("validated policy range");
                    for ic in 0..grid.chi.len() {
                        let commit = CommitmentParams::new(grid.eps.value(ie), grid.chi.value(ic))
                            .expect("validated commitment range");
                        let matrix = build_matrix(game, &policy, &commit);
                        let flags = ess_flags(&matrix, rule);
                        for (s, &flag) in flags.iter().enumerate() {
                            if flag {
                                tally.counts[s] += 1;
                                tally.marginals[0][iu][s] += 1;
                                tally.marginals[1][ie][s] += 1;
                                tally.marginals[2][ia][s] += 1;
                                tally.marginals[3][ic][s] += 1;
                            }
                        }
                    }
                }
                tally
            },
        )
        .reduce(|| Tally::new(grid), Tally::merge);

    Ok(EssCensus {
        grid: *grid,
        regime,
        rule,
        total_configurations: grid.total(),
        counts: tally.counts,
        marginals: tally.marginals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CommitmentParams, IncentivePolicy};
    use Strategy as St;

    fn matrix(policy: IncentivePolicy, eps: f64, chi: f64) -> PayoffMatrix {
        build_matrix(
            &GameParams::default(),
            &policy,
            &CommitmentParams::new(eps, chi).unwrap(),
        )
    }

    #[test]
    fn nothing_is_ess_without_noise() {
        for policy in [
            IncentivePolicy::no_policy(),
            IncentivePolicy::reward(2.0, 0.0).unwrap(),
            IncentivePolicy::punishment(2.0, 0.3).unwrap(),
            IncentivePolicy::reward(0.5, 1.0).unwrap(),
        ] {
            let m = matrix(policy, 0.5, 0.0);
            for s in Strategy::ALL {
                let v = is_ess(s, &m);
                assert!(!v.is_ess, "{s} should not be ESS under {policy:?}");
                assert!(!v.failing_mutants.is_empty());
            }
        }
    }

    #[test]
    fn acd_is_ess_with_reward_and_noise() {
        let m = matrix(IncentivePolicy::reward(2.0, 0.0).unwrap(), 0.5, 0.05);
        let v = is_ess(St::ACD, &m);
        assert!(v.is_ess, "{v:?}");
        assert!(v.failing_mutants.is_empty());
    }

    #[test]
    fn ndd_neutral_to_ncd_without_policy() {
        let m = matrix(IncentivePolicy::no_policy(), 0.5, 0.0);
        let v = is_ess(St::NDD, &m);
        assert!(v
            .failing_mutants
            .contains(&(St::NCD, FailureReason::NeutralUndecided)));
        // the weak rule lets drift-neutral mutants pass
        let weak = is_ess_with_rule(St::NDD, &m, EssRule::Weak);
        assert!(!weak.failing_mutants.iter().any(|(s, _)| *s == St::NCD));
    }

    #[test]
    fn strict_invasion_reason() {
        let m = matrix(IncentivePolicy::no_policy(), 0.5, 0.0);
        // ADD earns T - eps/2 against ACC, ACC earns R - eps/2 against itself
        let v = is_ess(St::ACC, &m);
        assert!(v
            .failing_mutants
            .contains(&(St::ADD, FailureReason::InvadesStrictly)));
    }

    #[test]
    fn flags_agree_with_verdicts() {
        let m = matrix(IncentivePolicy::punishment(1.5, 0.2).unwrap(), 1.0, 0.1);
        let flags = ess_flags(&m, EssRule::Classical);
        for s in Strategy::ALL {
            assert_eq!(flags[s.index()], is_ess(s, &m).is_ess);
        }
    }

    #[test]
    fn paper_grid_size() {
        assert_eq!(EssGrid::paper().total(), 859_551);
    }

    #[test]
    fn rule_names_round_trip() {
        for rule in [EssRule::Classical, EssRule::Weak] {
            assert_eq!(rule.to_string().parse::<EssRule>().unwrap(), rule);
        }
        assert!("lenient".parse::<EssRule>().is_err());
    }

    #[test]
    fn census_rejects_no_policy() {
        let grid = EssGrid {
            u: Axis::point(0.0),
            ..EssGrid::paper()
        };
        assert!(ess_census(
            &grid,
            &GameParams::default(),
            Regime::NoPolicy,
            EssRule::Classical
        )
        .is_err());
    }

    #[test]
    fn small_census_is_consistent() {
        let grid = EssGrid {
            u: Axis::new(0.0, 3.0, 0.5).unwrap(),
            eps: Axis::new(0.0, 3.0, 1.0).unwrap(),
            alpha: Axis::new(0.0, 1.0, 0.25).unwrap(),
            chi: Axis::new(0.0, 0.2, 0.1).unwrap(),
        };
        let c = ess_census(
            &grid,
            &GameParams::default(),
            Regime::Reward,
            EssRule::Classical,
        )
        .unwrap();
        assert_eq!(c.total_configurations, 7 * 4 * 5 * 3);
        for axis in CensusAxis::ALL {
            let summed: Vec<u64> = (0..NUM_STRATEGIES)
                .map(|s| c.marginal(axis).iter().map(|row| row[s]).sum())
                .collect();
            assert_eq!(summed, c.counts.to_vec(), "axis {}", axis.name());
        }
        assert_eq!(c.marginal(CensusAxis::Chi)[0], [0; NUM_STRATEGIES]);
        for &n in &c.counts {
            assert!(n <= c.total_configurations);
        }
    }
}
