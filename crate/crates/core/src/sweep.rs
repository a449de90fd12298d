//! Parameter sweeps over the stationary distribution and cooperation level.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ess::{ess_flags, EssRule};
use crate::finite_pop::{
    cooperation_frequency_by, stationary_distribution, transition_matrix, CooperationMeasure,
    PopulationParams,
};
use crate::game::{build_matrix, CommitmentParams, GameParams, IncentivePolicy, Regime};
use crate::grid::Axis;
use crate::strategy::NUM_STRATEGIES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    U,
    Eps,
    Alpha,
    Chi,
    N,
    Beta,
}

impl Param {
    /// Column order used by every sweep writer.
    pub const ALL: [Param; 6] = [
        Param::U,
        Param::Eps,
        Param::Alpha,
        Param::Chi,
        Param::N,
        Param::Beta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::U => "u",
            Param::Eps => "eps",
            Param::Alpha => "alpha",
            Param::Chi => "chi",
            Param::N => "N",
            Param::Beta => "beta",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u" => Ok(Param::U),
            "eps" | "epsilon" => Ok(Param::Eps),
            "alpha" => Ok(Param::Alpha),
            "chi" => Ok(Param::Chi),
            "n" => Ok(Param::N),
            "beta" => Ok(Param::Beta),
            _ => Err(Error::UnknownParameter(s.to_string())),
        }
    }
}

/// A full assignment of the six model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub u: f64,
    pub eps: f64,
    pub alpha: f64,
    pub chi: f64,
    pub n: usize,
    pub beta: f64,
}

impl Default for ParamPoint {
    /// Pure incentives (`alpha = 0`) without noise, `u = 2`, `eps = 0.5`,
    /// `N = 100`, `beta = 0.1`.
    fn default() -> Self {
        ParamPoint {
            u: 2.0,
            eps: 0.5,
            alpha: 0.0,
            chi: 0.0,
            n: 100,
            beta: 0.1,
        }
    }
}

impl ParamPoint {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::U => self.u,
            Param::Eps => self.eps,
            Param::Alpha => self.alpha,
            Param::Chi => self.chi,
            Param::N => self.n as f64,
            Param::Beta => self.beta,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) -> Result<()> {
        match p {
            Param::U => self.u = value,
            Param::Eps => self.eps = value,
            Param::Alpha => self.alpha = value,
            Param::Chi => self.chi = value,
            Param::N => {
                if !(value >= 2.0) || value.fract() != 0.0 || value > u32::MAX as f64 {
                    return Err(Error::param(
                        "N",
                        value,
                        "population size must be an integer >= 2",
                    ));
                }
                self.n = value as usize
            }
            Param::Beta => self.beta = value,
        }
        Ok(())
    }

    /// Validated model objects for this point. The no-policy regime ignores `u`.
    pub fn model(
        &self,
        regime: Regime,
    ) -> Result<(IncentivePolicy, CommitmentParams, PopulationParams)> {
        let policy = match regime {
            Regime::NoPolicy => IncentivePolicy::no_policy(),
            _ => IncentivePolicy::new(regime, self.u, self.alpha)?,
        };
        Ok((
            policy,
            CommitmentParams::new(self.eps, self.chi)?,
            PopulationParams::new(self.n, self.beta)?,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    StrategyFrequencies,
    Cooperation,
    EssFlags,
}

impl FromStr for SweepOutput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "strategy_frequencies" | "frequencies" => Ok(SweepOutput::StrategyFrequencies),
            "cooperation" => Ok(SweepOutput::Cooperation),
            "ess_flags" | "ess" => Ok(SweepOutput::EssFlags),
            _ => Err(Error::param(
                "outputs",
                s,
                "expected strategy_frequencies, cooperation or ess_flags",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub regimes: Vec<Regime>,
    /// Swept parameters; the first axis varies slowest.
    pub axes: Vec<(Param, Axis)>,
    pub fixed: Vec<(Param, f64)>,
    pub outputs: Vec<SweepOutput>,
    #[serde(default)]
    pub measure: CooperationMeasure,
}

impl SweepSpec {
    /// Spec sweeping `axes` with every other parameter taken from `base`,
    /// producing frequencies and cooperation.
    pub fn over(regimes: Vec<Regime>, axes: Vec<(Param, Axis)>, base: ParamPoint) -> Result<Self> {
        let fixed = Param::ALL
            .into_iter()
            .filter(|p| !axes.iter().any(|(q, _)| q == p))
            .map(|p| (p, base.get(p)))
            .collect();
        let spec = SweepSpec {
            regimes,
            axes,
            fixed,
            outputs: vec![SweepOutput::StrategyFrequencies, SweepOutput::Cooperation],
            measure: CooperationMeasure::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::param(
                "regimes",
                "[]",
                "at least one regime is required",
            ));
        }
        for p in Param::ALL {
            let swept = self.axes.iter().filter(|(q, _)| *q == p).count();
            let fixed = self.fixed.iter().filter(|(q, _)| *q == p).count();
            if swept + fixed != 1 {
                return Err(Error::InvalidAxis {
                    name: p.name().to_string(),
                    reason: if swept + fixed == 0 {
                        "parameter is neither swept nor fixed".into()
                    } else {
                        "parameter is given more than once".into()
                    },
                });
            }
        }
        for (p, axis) in &self.axes {
            Axis::new(axis.start, axis.stop, axis.step).map_err(|e| Error::InvalidAxis {
                name: p.name().to_string(),
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn wants(&self, out: SweepOutput) -> bool {
        self.outputs.contains(&out)
    }

    /// Number of grid points per regime.
    pub fn points(&self) -> usize {
        self.axes.iter().map(|(_, a)| a.len()).product()
    }

    /// The parameter point at a flat grid index (row-major over `axes`).
    pub fn point(&self, mut index: usize) -> Result<ParamPoint> {
        let mut point = ParamPoint::default();
        for &(p, v) in &self.fixed {
            point.set(p, v)?;
        }
        for (p, axis) in self.axes.iter().rev() {
            let len = axis.len();
            point.set(*p, axis.value(index % len))?;
            index /= len;
        }
        Ok(point)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub regime: Regime,
    /// Parameters actually used; `u` is reported as 0 for the no-policy regime.
    pub point: ParamPoint,
    pub frequencies: [f64; NUM_STRATEGIES],
    pub cooperation: f64,
    pub ess: Option<[bool; NUM_STRATEGIES]>,
}

/// Evaluates one regime at one parameter point.
pub fn evaluate_point(
    regime: Regime,
    point: &ParamPoint,
    game: &GameParams,
    with_ess: bool,
    measure: CooperationMeasure,
) -> Result<SweepRow> {
    let (policy, commit, pop) = point.model(regime)?;
    let matrix = build_matrix(game, &policy, &commit);
    let dist = stationary_distribution(&transition_matrix(&matrix, &pop))?;
    let mut used = *point;
    if regime == Regime::NoPolicy {
        used.u = 0.0;
    }
    Ok(SweepRow {
        regime,
        point: used,
        frequencies: dist.probabilities,
        cooperation: cooperation_frequency_by(&dist, point.chi, measure),
        ess: with_ess.then(|| ess_flags(&matrix, EssRule::Classical)),
    })
}

/// Rows for every regime (outer) and grid point (inner, row-major), in
/// deterministic order regardless of the worker count.
pub fn run_sweep(spec: &SweepSpec, game: &GameParams) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let with_ess = spec.wants(SweepOutput::EssFlags);
    let points: Vec<ParamPoint> = (0..spec.points())
        .map(|i| spec.point(i))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(points.len() * spec.regimes.len());
    for &regime in &spec.regimes {
        let chunk: Vec<SweepRow> = points
            .par_iter()
            .map(|p| evaluate_point(regime, p, game, with_ess, spec.measure))
            .collect::<Result<_>>()?;
        rows.extend(chunk);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooperationDifference {
    pub u: f64,
    pub eps: f64,
    pub reward: f64,
    pub punishment: f64,
    /// `reward - punishment`.
    pub difference: f64,
}

/// Cooperation under reward minus cooperation under punishment over a
/// `(u, eps)` grid, `u` varying slowest.
pub fn cooperation_difference_grid(
    u_axis: &Axis,
    eps_axis: &Axis,
    game: &GameParams,
    pop: &PopulationParams,
    alpha: f64,
    chi: f64,
    measure: CooperationMeasure,
) -> Result<Vec<CooperationDifference>> {
    let base = ParamPoint {
        alpha,
        chi,
        n: pop.size(),
        beta: pop.beta(),
        ..ParamPoint::default()
    };
    let mut spec = SweepSpec::over(
        vec![Regime::Reward, Regime::Punishment],
        vec![(Param::U, *u_axis), (Param::Eps, *eps_axis)],
        base,
    )?;
    spec.measure = measure;
    let rows = run_sweep(&spec, game)?;
    let (reward, punishment) = rows.split_at(spec.points());
    Ok(reward
        .iter()
        .zip(punishment)
        .map(|(r, p)| CooperationDifference {
            u: r.point.u,
            eps: r.point.eps,
            reward: r.cooperation,
            punishment: p.cooperation,
            difference: r.cooperation - p.cooperation,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalAlpha {
    pub alpha: f64,
    pub cooperation: f64,
    /// Cooperation with pure incentives, for comparison.
    pub cooperation_at_zero: f64,
}

/// Scans `alpha` over `0, step, ..., 1` and returns the value maximising
/// cooperation. Ties go to the smaller `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn find_optimal_alpha(
    regime: Regime,
    u: f64,
    eps: f64,
    chi: f64,
    game: &GameParams,
    pop: &PopulationParams,
    alpha_step: f64,
    measure: CooperationMeasure,
) -> Result<OptimalAlpha> {
    if regime == Regime::NoPolicy {
        return Err(Error::param(
            "regime",
            regime,
            "alpha has no effect without a policy",
        ));
    }
    let steps = (1.0 / alpha_step).round();
    if !(alpha_step > 0.0) || (steps * alpha_step - 1.0).abs() > 1e-9 {
        return Err(Error::param(
            "alpha_step",
            alpha_step,
            "must divide [0, 1] evenly",
        ));
    }
    let base = ParamPoint {
        u,
        eps,
        chi,
        n: pop.size(),
        beta: pop.beta(),
        ..ParamPoint::default()
    };
    let mut spec = SweepSpec::over(
        vec![regime],
        vec![(Param::Alpha, Axis::new(0.0, 1.0, alpha_step)?)],
        base,
    )?;
    spec.measure = measure;
    let rows = run_sweep(&spec, game)?;
    let mut best = &rows[0];
    for row in &rows[1..] {
        if row.cooperation > best.cooperation + 1e-12 {
            best = row;
        }
    }
    Ok(OptimalAlpha {
        alpha: best.point.alpha,
        cooperation: best.cooperation,
        cooperation_at_zero: rows[0].cooperation,
    })
}

/// Stationary distributions and cooperation across participation-error rates.
#[allow(clippy::too_many_arguments)]
pub fn noise_sweep(
    regime: Regime,
    chi_axis: &Axis,
    u: f64,
    eps: f64,
    alpha: f64,
    game: &GameParams,
    pop: &PopulationParams,
    measure: CooperationMeasure,
) -> Result<Vec<SweepRow>> {
    let base = ParamPoint {
        u,
        eps,
        alpha,
        n: pop.size(),
        beta: pop.beta(),
        ..ParamPoint::default()
    };
    let mut spec = SweepSpec::over(vec![regime], vec![(Param::Chi, *chi_axis)], base)?;
    spec.measure = measure;
    run_sweep(&spec, game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_pop::cooperation_frequency;
    use crate::strategy::Strategy;

    #[test]
    fn spec_must_cover_every_parameter_once() {
        let mut spec = SweepSpec::over(
            vec![Regime::Reward],
            vec![(Param::Eps, Axis::new(0.0, 1.0, 0.5).unwrap())],
            ParamPoint::default(),
        )
        .unwrap();
        assert_eq!(spec.fixed.len(), 5);
        spec.fixed.push((Param::Eps, 0.3));
        assert!(spec.validate().is_err());
        spec.fixed
            .retain(|(p, _)| *p != Param::Eps && *p != Param::Beta);
        assert!(spec.validate().is_err());
        assert!(SweepSpec::over(vec![], vec![], ParamPoint::default()).is_err());
    }

    #[test]
    fn row_major_point_order() {
        let spec = SweepSpec::over(
            vec![Regime::Reward],
            vec![
                (Param::U, Axis::new(0.0, 1.0, 0.5).unwrap()),
                (Param::Eps, Axis::new(0.0, 0.2, 0.1).unwrap()),
            ],
            ParamPoint::default(),
        )
        .unwrap();
        assert_eq!(spec.points(), 9);
        let p = spec.point(5).unwrap();
        assert_eq!((p.u, p.eps), (0.5, 0.2));
        assert_eq!(p.beta, 0.1);
    }

    #[test]
    fn rows_sum_to_one_and_reproduce_cooperation() {
        let mut spec = SweepSpec::over(
            vec![Regime::NoPolicy, Regime::Reward, Regime::Punishment],
            vec![(Param::Eps, Axis::new(0.0, 3.0, 1.0).unwrap())],
            ParamPoint {
                chi: 0.04,
                ..ParamPoint::default()
            },
        )
        .unwrap();
        spec.outputs.push(SweepOutput::EssFlags);
        let rows = run_sweep(&spec, &GameParams::default()).unwrap();
        assert_eq!(rows.len(), 12);
        for row in &rows {
            assert!((row.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let dist = crate::finite_pop::StationaryDistribution {
                probabilities: row.frequencies,
            };
            assert_eq!(cooperation_frequency(&dist, row.point.chi), row.cooperation);
            assert!(row.ess.is_some());
        }
        assert!(rows[..4]
            .iter()
            .all(|r| r.regime == Regime::NoPolicy && r.point.u == 0.0));
    }

    #[test]
    fn no_policy_rows_do_not_depend_on_other_regimes() {
        let axes = vec![(Param::Eps, Axis::new(0.0, 2.0, 1.0).unwrap())];
        let alone = run_sweep(
            &SweepSpec::over(vec![Regime::NoPolicy], axes.clone(), ParamPoint::default()).unwrap(),
            &GameParams::default(),
        )
        .unwrap();
        let mixed = run_sweep(
            &SweepSpec::over(
                vec![Regime::Reward, Regime::NoPolicy],
                axes,
                ParamPoint::default(),
            )
            .unwrap(),
            &GameParams::default(),
        )
        .unwrap();
        assert_eq!(alone[..], mixed[3..]);
    }

    #[test]
    fn alpha_step_must_divide_unit_interval() {
        let g = GameParams::default();
        let pop = PopulationParams::default();
        assert!(find_optimal_alpha(
            Regime::Reward,
            2.0,
            0.5,
            0.0,
            &g,
            &pop,
            0.3,
            CooperationMeasure::Realized
        )
        .is_err());
        assert!(find_optimal_alpha(
            Regime::NoPolicy,
            0.0,
            0.5,
            0.0,
            &g,
            &pop,
            0.25,
            CooperationMeasure::Realized
        )
        .is_err());
        let best = find_optimal_alpha(
            Regime::Reward,
            2.0,
            0.5,
            0.0,
            &g,
            &pop,
            0.25,
            CooperationMeasure::Realized,
        )
        .unwrap();
        assert!(best.cooperation >= best.cooperation_at_zero);
    }

    #[test]
    fn noise_sweep_zero_row_matches_plain_evaluation() {
        let g = GameParams::default();
        let pop = PopulationParams::default();
        let rows = noise_sweep(
            Regime::Reward,
            &Axis::new(0.0, 0.1, 0.05).unwrap(),
            2.0,
            0.5,
            0.0,
            &g,
            &pop,
            CooperationMeasure::Realized,
        )
        .unwrap();
        let direct = evaluate_point(
            Regime::Reward,
            &ParamPoint::default(),
            &g,
            false,
            CooperationMeasure::Realized,
        )
        .unwrap();
        assert_eq!(rows[0], direct);
        assert_eq!(rows[0].frequencies.len(), Strategy::ALL.len());
    }
}
