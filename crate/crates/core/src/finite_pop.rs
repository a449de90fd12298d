//! Stochastic dynamics in a finite, well-mixed population under the
//! pairwise-comparison (Fermi) rule, in the limit of rare mutations.
//!
//! With rare mutations the population hops between monomorphic states, so
//! the long-run behaviour is an 8-state Markov chain whose transition
//! probabilities are single-mutant fixation probabilities.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    build_matrix, cooperation_propensity, CommitmentParams, GameParams, IncentivePolicy,
    PayoffMatrix, Regime,
};
use crate::strategy::{Strategy, NUM_STRATEGIES};
use crate::PAYOFF_TOL;

/// Residual bound for the stationary balance equations.
pub const STATIONARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    size: usize,
    beta: f64,
}

impl PopulationParams {
    pub fn new(size: usize, beta: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::param(
                "N",
                size,
                "population size must be at least 2",
            ));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::param(
                "beta",
                beta,
                "intensity of selection must be finite and >= 0",
            ));
        }
        Ok(PopulationParams { size, beta })
    }

    pub fn size(&self) -> usize {
        self.size
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for PopulationParams {
    /// `N = 100`, `beta = 0.1`.
    fn default() -> Self {
        PopulationParams {
            size: 100,
            beta: 0.1,
        }
    }
}

/// Average payoffs of an A-player and a B-player when `k` of the `N`
/// players use A, excluding self-interaction.
pub fn group_payoffs(
    k: usize,
    pop: &PopulationParams,
    aa: f64,
    ab: f64,
    ba: f64,
    bb: f64,
) -> Result<(f64, f64)> {
    let n = pop.size;
    if k < 1 || k > n - 1 {
        return Err(Error::param(
            "k",
            k,
            "number of A players must lie in [1, N-1]",
        ));
    }
    Ok(group_payoffs_unchecked(k, n, aa, ab, ba, bb))
}

#[inline]
fn group_payoffs_unchecked(k: usize, n: usize, aa: f64, ab: f64, ba: f64, bb: f64) -> (f64, f64) {
    let (kf, nf) = (k as f64, n as f64);
    let pa = ((kf - 1.0) * aa + (nf - kf) * ab) / (nf - 1.0);
    let pb = (kf * ba + (nf - kf - 1.0) * bb) / (nf - 1.0);
    (pa, pb)
}

/// Fixation probability of a single A mutant among `N - 1` B residents,
/// from the four pairwise payoffs.
///
/// Uses `T-(j)/T+(j) = exp(-beta (Pi_A(j) - Pi_B(j)))`, so
/// `1/rho = sum_{i=0}^{N-1} exp(-beta Q_i)` with `Q_i` the prefix sums of the
/// payoff differences. The sum is evaluated with a max-shift in log space.
pub fn fixation_probability_from_payoffs(
    pop: &PopulationParams,
    aa: f64,
    ab: f64,
    ba: f64,
    bb: f64,
) -> f64 {
    let n = pop.size;
    let mut exponents = Vec::with_capacity(n);
    exponents.push(0.0);
    let mut prefix = 0.0;
    for j in 1..n {
        let (pa, pb) = group_payoffs_unchecked(j, n, aa, ab, ba, bb);
        prefix += pa - pb;
        exponents.push(-pop.beta * prefix);
    }
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: f64 = exponents.iter().map(|&e| (e - max).exp()).sum();
    // rho = 1 / (exp(max) * shifted)
    (-max).exp() / shifted
}

pub fn fixation_probability(
    mutant: Strategy,
    resident: Strategy,
    matrix: &PayoffMatrix,
    pop: &PopulationParams,
) -> Result<f64> {
    if mutant == resident {
        return Err(Error::SameStrategy(mutant));
    }
    Ok(fixation_probability_from_payoffs(
        pop,
        matrix.get(mutant, mutant),
        matrix.get(mutant, resident),
        matrix.get(resident, mutant),
        matrix.get(resident, resident),
    ))
}

/// Row-stochastic transition matrix between monomorphic states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub entries: [[f64; NUM_STRATEGIES]; NUM_STRATEGIES],
}

impl TransitionMatrix {
    pub fn get(&self, from: Strategy, to: Strategy) -> f64 {
        self.entries[from.index()][to.index()]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `entries[i][j]`, `i != j`, is the probability that a monomorphic
/// `i`-population is taken over by a `j` mutant: `rho(j invades i) / 7`.
pub fn transition_matrix(matrix: &PayoffMatrix, pop: &PopulationParams) -> TransitionMatrix {
    let q = NUM_STRATEGIES as f64;
    let mut entries = [[0.0; NUM_STRATEGIES]; NUM_STRATEGIES];
    for from in Strategy::ALL {
        let mut off = 0.0;
        for to in Strategy::ALL {
            if to == from {
                continue;
            }
            let rho = fixation_probability(to, from, matrix, pop).expect("distinct strategies");
            let t = rho / (q - 1.0);
            entries[from.index()][to.index()] = t;
            off += t;
        }
        entries[from.index()][from.index()] = 1.0 - off;
    }
    TransitionMatrix { entries }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub probabilities: [f64; NUM_STRATEGIES],
}

impl StationaryDistribution {
    pub fn get(&self, s: Strategy) -> f64 {
        self.probabilities[s.index()]
    }

    /// Strategies sorted by decreasing frequency; ties keep canonical order.
    pub fn ranking(&self) -> [Strategy; NUM_STRATEGIES] {
        let mut order = Strategy::ALL;
        order.sort_by(|a, b| self.get(*b).total_cmp(&self.get(*a)));
        order
    }

    pub fn most_frequent(&self) -> Strategy {
        self.ranking()[0]
    }
}

/// Solves `pi^T M = pi^T`, `sum(pi) = 1` by replacing the last balance
/// equation with the normalisation constraint.
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    let row_err = m.max_row_sum_error();
    if !(row_err <= STATIONARY_TOL) {
        return Err(Error::Singular(format!(
            "matrix is not row-stochastic (row-sum error {row_err:e})"
        )));
    }
    const Q: usize = NUM_STRATEGIES;
    // (M^T - I) pi = 0
    let mut a =
        SMatrix::<f64, Q, Q>::from_fn(|i, j| m.entries[j][i] - if i == j { 1.0 } else { 0.0 });
    let mut b = SVector::<f64, Q>::zeros();
    for j in 0..Q {
        a[(Q - 1, j)] = 1.0;
    }
    b[Q - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("balance equations are singular".into()))?;

    let mut probabilities = [0.0; Q];
    for (p, &x) in probabilities.iter_mut().zip(pi.iter()) {
        if x < -STATIONARY_TOL || !x.is_finite() {
            return Err(Error::Singular(format!(
                "negative or non-finite component {x:e}"
            )));
        }
        *p = x.max(0.0);
    }
    let total: f64 = probabilities.iter().sum();
    for p in probabilities.iter_mut() {
        *p /= total;
    }

    let residual = (0..Q)
        .map(|j| {
            let flow: f64 = (0..Q).map(|i| probabilities[i] * m.entries[i][j]).sum();
            (flow - probabilities[j]).abs()
        })
        .fold(0.0, f64::max);
    if !(residual < STATIONARY_TOL) {
        return Err(Error::Singular(format!(
            "balance residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(StationaryDistribution { probabilities })
}

/// Payoff matrix, transition matrix and stationary distribution for one
/// parameter point.
pub fn stationary_for(
    game: &GameParams,
    policy: &IncentivePolicy,
    commit: &CommitmentParams,
    pop: &PopulationParams,
) -> Result<StationaryDistribution> {
    let matrix = build_matrix(game, policy, commit);
    stationary_distribution(&transition_matrix(&matrix, pop))
}

/// Outcome of the large-population pairwise comparison
/// `pi_AA + pi_AB` vs `pi_BA + pi_BB`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskOrdering {
    /// A is risk-dominant over B.
    Dominant,
    /// B is risk-dominant over A.
    Dominated,
    Neutral,
}

pub fn risk_dominance(a: Strategy, b: Strategy, matrix: &PayoffMatrix) -> Result<RiskOrdering> {
    if a == b {
        return Err(Error::SameStrategy(a));
    }
    let lhs = matrix.get(a, a) + matrix.get(a, b);
    let rhs = matrix.get(b, a) + matrix.get(b, b);
    Ok(if lhs > rhs + PAYOFF_TOL {
        RiskOrdering::Dominant
    } else if rhs > lhs + PAYOFF_TOL {
        RiskOrdering::Dominated
    } else {
        RiskOrdering::Neutral
    })
}

pub fn is_risk_dominant(a: Strategy, b: Strategy, matrix: &PayoffMatrix) -> Result<bool> {
    Ok(risk_dominance(a, b, matrix)? == RiskOrdering::Dominant)
}

/// Pairwise risk-dominance table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskDominanceReport {
    /// `pairs[a][b]`: a is risk-dominant over b.
    pub pairs: [[bool; NUM_STRATEGIES]; NUM_STRATEGIES],
    /// `neutral[a][b]`: the two sums tie (symmetric, false on the diagonal).
    pub neutral: [[bool; NUM_STRATEGIES]; NUM_STRATEGIES],
}

impl RiskDominanceReport {
    pub fn new(matrix: &PayoffMatrix) -> Self {
        let mut pairs = [[false; NUM_STRATEGIES]; NUM_STRATEGIES];
        let mut neutral = [[false; NUM_STRATEGIES]; NUM_STRATEGIES];
        for a in Strategy::ALL {
            for b in Strategy::ALL {
                if a == b {
                    continue;
                }
                match risk_dominance(a, b, matrix).expect("distinct") {
                    RiskOrdering::Dominant => pairs[a.index()][b.index()] = true,
                    RiskOrdering::Neutral => neutral[a.index()][b.index()] = true,
                    RiskOrdering::Dominated => {}
                }
            }
        }
        RiskDominanceReport { pairs, neutral }
    }

    pub fn dominates(&self, a: Strategy, b: Strategy) -> bool {
        self.pairs[a.index()][b.index()]
    }

    pub fn is_neutral(&self, a: Strategy, b: Strategy) -> bool {
        self.neutral[a.index()][b.index()]
    }
}

/// Commitment-cost threshold below which ACD is risk-dominant over every
/// strategy except ACC, for pure incentives (`alpha = 0`) and a budget
/// `u > (T + P - R - S) / 2`.
///
/// Reward: `2 (u + min(T - S, R - P))`. Punishment: `2 min(T - S, R - P)`.
pub fn acd_risk_dominance_threshold(game: &GameParams, policy: &IncentivePolicy) -> Result<f64> {
    if policy.alpha() != 0.0 {
        return Err(Error::param(
            "alpha",
            policy.alpha(),
            "the closed-form threshold needs alpha = 0",
        ));
    }
    let min_budget = (game.t() + game.p() - game.r() - game.s()) / 2.0;
    if !(policy.budget() > min_budget) {
        return Err(Error::param(
            "u",
            policy.budget(),
            "the closed-form threshold needs u > (T + P - R - S) / 2",
        ));
    }
    let gap = (game.t() - game.s()).min(game.r() - game.p());
    match policy.regime() {
        Regime::Reward => Ok(2.0 * (policy.budget() + gap)),
        Regime::Punishment => Ok(2.0 * gap),
        Regime::NoPolicy => Err(Error::param(
            "regime",
            "nopolicy",
            "the threshold needs reward or punishment",
        )),
    }
}

/// How a strategy's cooperativeness is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CooperationMeasure {
    /// Cooperative acts actually played, participation errors included.
    #[default]
    Realized,
    /// Cooperative acts the strategy intends: in-commitment move for
    /// committers, out-of-commitment move otherwise.
    Intended,
}

impl CooperationMeasure {
    pub const ALL: [CooperationMeasure; 2] =
        [CooperationMeasure::Realized, CooperationMeasure::Intended];

    pub fn name(self) -> &'static str {
        match self {
            CooperationMeasure::Realized => "realized",
            CooperationMeasure::Intended => "intended",
        }
    }

    pub fn propensity(self, s: Strategy, chi: f64) -> f64 {
        match self {
            CooperationMeasure::Realized => cooperation_propensity(s, chi),
            CooperationMeasure::Intended => cooperation_propensity(s, 0.0),
        }
    }
}

impl fmt::Display for CooperationMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CooperationMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "realized" | "realised" => Ok(CooperationMeasure::Realized),
            "intended" => Ok(CooperationMeasure::Intended),
            _ => Err(Error::param("measure", s, "expected realized or intended")),
        }
    }
}

/// Expected frequency of cooperative acts: the stationary mixture of the
/// per-strategy cooperation propensities.
pub fn cooperation_frequency(dist: &StationaryDistribution, chi: f64) -> f64 {
    cooperation_frequency_by(dist, chi, CooperationMeasure::Realized)
}

pub fn cooperation_frequency_by(
    dist: &StationaryDistribution,
    chi: f64,
    measure: CooperationMeasure,
) -> f64 {
    Strategy::ALL
        .into_iter()
        .map(|s| dist.get(s) * measure.propensity(s, chi))
        .sum()
}
