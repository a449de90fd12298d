//! Sweep configuration: a TOML file merged with command-line overrides.
//!
//! ```toml
//! regimes = ["reward", "punishment"]
//! outputs = ["strategy_frequencies", "cooperation"]
//! analysis = "grid"            # grid | coop-difference | optimal-alpha
//! coop_measure = "realized"    # realized | intended
//!
//! [params]                     # number = fixed, "start:stop:step" = swept
//! u = 2
//! eps = "0:3:0.05"
//! N = 100
//!
//! [game]
//! T = 2
//! R = 1
//! P = 0
//! S = -1
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use commitment_core::finite_pop::CooperationMeasure;
use commitment_core::sweep::{Param, ParamPoint, SweepOutput, SweepSpec};
use commitment_core::{Axis, GameParams, Regime};

use crate::args::{Analysis, GameArgs, SweepArgs};
use crate::error::{CliError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub regimes: Option<Vec<String>>,
    pub outputs: Option<Vec<String>>,
    pub axis_order: Option<Vec<String>>,
    pub analysis: Option<Analysis>,
    pub alpha_step: Option<f64>,
    pub coop_measure: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub game: GameConfig,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(alias = "T")]
    pub t: Option<f64>,
    #[serde(alias = "R")]
    pub r: Option<f64>,
    #[serde(alias = "P")]
    pub p: Option<f64>,
    #[serde(alias = "S")]
    pub s: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Command-line game flags override the config, which overrides the defaults.
pub fn game_params(args: &GameArgs, config: Option<&GameConfig>) -> Result<GameParams> {
    if let (Some(b), Some(c)) = (args.benefit, args.cost) {
        return Ok(GameParams::donation(b, c)?);
    }
    let empty = GameConfig::default();
    let cfg = config.unwrap_or(&empty);
    let any_flag = args.t.is_some() || args.r.is_some() || args.p.is_some() || args.s.is_some();
    if !any_flag {
        match (cfg.b, cfg.c) {
            (Some(b), Some(c)) => return Ok(GameParams::donation(b, c)?),
            (None, None) => {}
            _ => {
                return Err(CliError::Usage(
                    "game: b and c must be given together".into(),
                ))
            }
        }
    }
    let d = GameParams::default();
    Ok(GameParams::new(
        args.t.or(cfg.t).unwrap_or(d.t()),
        args.r.or(cfg.r).unwrap_or(d.r()),
        args.p.or(cfg.p).unwrap_or(d.p()),
        args.s.or(cfg.s).unwrap_or(d.s()),
    )?)
}

fn parse_value(name: &str, raw: &ParamValue) -> Result<ParamValue> {
    match raw {
        ParamValue::Number(x) => Ok(ParamValue::Number(*x)),
        ParamValue::Text(s) if s.contains(':') => Ok(ParamValue::Text(s.trim().to_string())),
        ParamValue::Text(s) => s
            .trim()
            .parse::<f64>()
            .map(ParamValue::Number)
            .map_err(|_| {
                CliError::Usage(format!(
                    "{name}: expected a number or start:stop:step, got `{s}`"
                ))
            }),
    }
}

/// Everything a sweep run needs after merging config and flags.
#[derive(Debug)]
pub struct ResolvedSweep {
    pub spec: SweepSpec,
    pub game: GameParams,
    pub analysis: Analysis,
    pub alpha_step: f64,
}

pub fn resolve_sweep(args: &SweepArgs) -> Result<ResolvedSweep> {
    let config = match &args.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    let game = game_params(&args.game, Some(&config.game))?;

    let mut values: BTreeMap<Param, ParamValue> = BTreeMap::new();
    for (name, raw) in &config.params {
        let p: Param = name.parse()?;
        values.insert(p, parse_value(name, raw)?);
    }
    for item in &args.set {
        let (name, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects NAME=VALUE, got `{item}`")))?;
        let p: Param = name.trim().parse()?;
        values.insert(p, parse_value(name, &ParamValue::Text(raw.to_string()))?);
    }

    let base = ParamPoint::default();
    let mut swept = Vec::new();
    let mut fixed = Vec::new();
    for p in Param::ALL {
        match values.get(&p) {
            Some(ParamValue::Text(s)) => {
                let axis: Axis = s.parse().map_err(|e: commitment_core::Error| {
                    commitment_core::Error::InvalidAxis {
                        name: p.name().to_string(),
                        reason: e.to_string(),
                    }
                })?;
                swept.push((p, axis));
            }
            Some(ParamValue::Number(x)) => fixed.push((p, *x)),
            None => fixed.push((p, base.get(p))),
        }
    }

    let order: Vec<String> = if !args.axis_order.is_empty() {
        args.axis_order.clone()
    } else {
        config.axis_order.clone().unwrap_or_default()
    };
    let axes = if order.is_empty() {
        swept
    } else {
        let order: Vec<Param> = order
            .iter()
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()?;
        let mut sorted_order = order.clone();
        sorted_order.sort();
        sorted_order.dedup();
        let mut swept_names: Vec<Param> = swept.iter().map(|(p, _)| *p).collect();
        swept_names.sort();
        if sorted_order != swept_names || order.len() != swept_names.len() {
            return Err(CliError::Usage(format!(
                "axis_order must list each swept parameter once: swept [{}]",
                swept_names
                    .iter()
                    .map(|p| p.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        order
            .iter()
            .map(|p| *swept.iter().find(|(q, _)| q == p).expect("checked above"))
            .collect()
    };

    let regimes: Vec<Regime> = if !args.regimes.is_empty() {
        args.regimes.clone()
    } else if let Some(names) = &config.regimes {
        names
            .iter()
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()?
    } else {
        vec![Regime::Reward, Regime::Punishment]
    };

    let output_names: Vec<String> = if !args.outputs.is_empty() {
        args.outputs.clone()
    } else {
        config.outputs.clone().unwrap_or_default()
    };
    let outputs: Vec<SweepOutput> = if output_names.is_empty() {
        vec![SweepOutput::StrategyFrequencies, SweepOutput::Cooperation]
    } else {
        output_names
            .iter()
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()?
    };

    let measure: CooperationMeasure = match (args.coop_measure, &config.coop_measure) {
        (Some(m), _) => m,
        (None, Some(s)) => s.parse()?,
        (None, None) => CooperationMeasure::default(),
    };

    let spec = SweepSpec {
        regimes,
        axes,
        fixed,
        outputs,
        measure,
    };
    spec.validate()?;
    Ok(ResolvedSweep {
        spec,
        game,
        analysis: args.analysis.or(config.analysis).unwrap_or(Analysis::Grid),
        alpha_step: args.alpha_step.or(config.alpha_step).unwrap_or(0.05),
    })
}
