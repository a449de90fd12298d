//! Commitment formation with institutional incentives in the one-shot
//! Prisoner's Dilemma.
//!
//! Players first decide whether to join a costly commitment to cooperate,
//! then play. An institution with a per-capita budget rewards compliance or
//! punishes non-compliance, optionally diverting part of the budget to reward
//! participation. The crate builds the resulting 8x8 payoff matrices and
//! analyses them with:
//!
//! * [`ess`]: evolutionary stability and a census over parameter grids,
//! * [`finite_pop`]: fixation probabilities, the small-mutation Markov chain,
//!   its stationary distribution and risk dominance,
//! * [`montecarlo`]: an agent-based simulation of the same imitation process,
//! * [`sweep`]: parameter sweeps of strategy and cooperation frequencies.
// NaN must fail parameter checks, so `!(x >= 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ess;
pub mod finite_pop;
pub mod format;
pub mod game;
pub mod grid;
pub mod montecarlo;
pub mod strategy;
pub mod sweep;

pub use error::{Error, Result};
pub use game::{
    base_payoff, build_matrix, cooperation_propensity, CommitmentParams, GameParams,
    IncentivePolicy, PayoffMatrix, Regime,
};
pub use grid::Axis;
pub use strategy::{Move, Participation, Strategy, NUM_STRATEGIES};

/// Tolerance for payoff equality in ESS and risk-dominance comparisons.
pub const PAYOFF_TOL: f64 = 1e-9;
