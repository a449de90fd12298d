use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::{json, Value};

use commitment_core::ess::{ess_census, CensusAxis, EssGrid};
use commitment_core::finite_pop::{
    acd_risk_dominance_threshold, cooperation_frequency_by, risk_dominance,
    stationary_distribution, transition_matrix, PopulationParams, RiskDominanceReport,
    RiskOrdering,
};
use commitment_core::montecarlo::{
    pool_estimates, simulate_replicates, simulate_with_trajectory, InitialState, SimulationConfig,
};
use commitment_core::sweep::{
    cooperation_difference_grid, find_optimal_alpha, run_sweep, Param, ParamPoint, SweepOutput,
};
use commitment_core::{
    build_matrix, CommitmentParams, GameParams, IncentivePolicy, PayoffMatrix, Regime, Strategy,
};

use crate::args::{
    Analysis, Cli, Command, EssScanArgs, ModelArgs, MonteCarloArgs, PopArgs, StationaryArgs,
    SweepArgs,
};
use crate::config::{game_params, resolve_sweep};
use crate::error::{CliError, Result};
use crate::output::{append_manifest, Cell, Outputs, RunManifest, Table};

/// What a subcommand reports back for the run log.
struct Report {
    params: Value,
    seeds: Vec<u64>,
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.run.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut out = Outputs::new(&cli.run.out_dir, cli.run.format)?;

    let (name, report) = match &cli.command {
        Command::PayoffMatrix(args) => ("payoff-matrix", payoff_matrix(args, &mut out)?),
        Command::EssScan(args) => ("ess-scan", ess_scan(args, &mut out)?),
        Command::Stationary(args) => ("stationary", stationary(args, &mut out)?),
        Command::RiskDominance(args) => ("risk-dominance", risk(args, &mut out)?),
        Command::Sweep(args) => ("sweep", sweep(args, &mut out)?),
        Command::Montecarlo(args) => ("montecarlo", montecarlo(args, &mut out)?),
    };

    let manifest = RunManifest {
        subcommand: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        params: report.params,
        seeds: report.seeds,
        outputs: out
            .written()
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        threads: rayon::current_num_threads(),
        started_unix_seconds: started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        duration_seconds: clock.elapsed().as_secs_f64(),
    };
    append_manifest(out.dir(), &manifest)?;
    Ok(())
}

fn strategy_columns(prefix: &str) -> Vec<String> {
    Strategy::ALL
        .iter()
        .map(|s| format!("{prefix}{s}"))
        .collect()
}

fn game_json(game: &GameParams) -> Value {
    json!({ "T": game.t(), "R": game.r(), "P": game.p(), "S": game.s() })
}

struct Model {
    game: GameParams,
    policy: IncentivePolicy,
    commit: CommitmentParams,
}

impl Model {
    fn from_args(args: &ModelArgs) -> Result<Self> {
        let u = args.u.unwrap_or(if args.regime == Regime::NoPolicy {
            0.0
        } else {
            2.0
        });
        Ok(Model {
            game: game_params(&args.game, None)?,
            policy: IncentivePolicy::new(args.regime, u, args.alpha)?,
            commit: CommitmentParams::new(args.eps, args.chi)?,
        })
    }

    fn matrix(&self) -> PayoffMatrix {
        build_matrix(&self.game, &self.policy, &self.commit)
    }

    fn regime(&self) -> Regime {
        self.policy.regime()
    }

    fn json(&self) -> Value {
        json!({
            "game": game_json(&self.game),
            "regime": self.regime().name(),
            "u": self.policy.budget(),
            "alpha": self.policy.alpha(),
            "eps": self.commit.cost(),
            "chi": self.commit.noise(),
        })
    }
}

fn pop_params(args: &PopArgs) -> Result<PopulationParams> {
    Ok(PopulationParams::new(args.n, args.beta)?)
}

fn payoff_matrix(args: &ModelArgs, out: &mut Outputs) -> Result<Report> {
    let model = Model::from_args(args)?;
    let matrix = model.matrix();
    let mut table = Table::new(std::iter::once("strategy".to_string()).chain(strategy_columns("")));
    for row in Strategy::ALL {
        let mut cells = vec![Cell::from(row.label())];
        cells.extend(
            Strategy::ALL
                .iter()
                .map(|&col| Cell::Num(matrix.get(row, col))),
        );
        table.push(cells);
    }
    echo(&out.write(&format!("payoff_matrix_{}", model.regime()), &table)?);
    Ok(Report {
        params: model.json(),
        seeds: vec![],
    })
}

fn ess_scan(args: &EssScanArgs, out: &mut Outputs) -> Result<Report> {
    let game = game_params(&args.game, None)?;
    let grid = EssGrid {
        u: args.u_axis,
        eps: args.eps_axis,
        alpha: args.alpha_axis,
        chi: args.chi_axis,
    };
    let mut totals = Table::new(["regime", "strategy", "count"]);
    let regimes = args.regime.regimes();
    for &regime in &regimes {
        let census = ess_census(&grid, &game, regime, args.ess_rule)?;
        for s in Strategy::ALL {
            totals.push(vec![
                regime.name().into(),
                s.label().into(),
                census.count(s).into(),
            ]);
        }
        for axis in CensusAxis::ALL {
            let mut table = Table::new(["axis_value", "strategy", "count"]);
            let values = census.axis(axis).values();
            for (value, counts) in values.iter().zip(census.marginal(axis)) {
                for s in Strategy::ALL {
                    table.push(vec![
                        Cell::Num(*value),
                        s.label().into(),
                        counts[s.index()].into(),
                    ]);
                }
            }
            out.write(&format!("ess_{}_marginal_{}", regime, axis.name()), &table)?;
        }
    }
    echo(&out.write("ess_totals", &totals)?);
    Ok(Report {
        params: json!({
            "game": game_json(&game),
            "regimes": regimes.iter().map(|r| r.name()).collect::<Vec<_>>(),
            "u": args.u_axis.to_string(),
            "eps": args.eps_axis.to_string(),
            "alpha": args.alpha_axis.to_string(),
            "chi": args.chi_axis.to_string(),
            "configurations": grid.total(),
            "ess_rule": args.ess_rule.name(),
        }),
        seeds: vec![],
    })
}

fn sweep_columns(outputs: &[SweepOutput]) -> Vec<String> {
    let mut cols: Vec<String> = Param::ALL.iter().map(|p| p.name().to_string()).collect();
    if outputs.contains(&SweepOutput::StrategyFrequencies) {
        cols.extend(strategy_columns(""));
    }
    if outputs.contains(&SweepOutput::Cooperation) {
        cols.push("cooperation".into());
    }
    if outputs.contains(&SweepOutput::EssFlags) {
        cols.extend(strategy_columns("ess_"));
    }
    cols
}

fn param_cells(point: &ParamPoint) -> Vec<Cell> {
    Param::ALL
        .iter()
        .map(|&p| match p {
            Param::N => Cell::Int(point.n as u64),
            _ => Cell::Num(point.get(p)),
        })
        .collect()
}

fn stationary(args: &StationaryArgs, out: &mut Outputs) -> Result<Report> {
    let model = Model::from_args(&args.model)?;
    let pop = pop_params(&args.pop)?;
    let transitions = transition_matrix(&model.matrix(), &pop);
    let dist = stationary_distribution(&transitions)?;
    let point = ParamPoint {
        u: model.policy.budget(),
        eps: model.commit.cost(),
        alpha: model.policy.alpha(),
        chi: model.commit.noise(),
        n: pop.size(),
        beta: pop.beta(),
    };
    let mut table = Table::new(sweep_columns(&[
        SweepOutput::StrategyFrequencies,
        SweepOutput::Cooperation,
    ]));
    let mut row = param_cells(&point);
    row.extend(dist.probabilities.iter().map(|&p| Cell::Num(p)));
    row.push(Cell::Num(cooperation_frequency_by(
        &dist,
        point.chi,
        args.coop_measure,
    )));
    table.push(row);
    echo(&out.write(&format!("stationary_{}", model.regime()), &table)?);

    if args.transitions {
        let mut t = Table::new(std::iter::once("from".to_string()).chain(strategy_columns("")));
        for from in Strategy::ALL {
            let mut cells = vec![Cell::from(from.label())];
            cells.extend(
                Strategy::ALL
                    .iter()
                    .map(|&to| Cell::Num(transitions.get(from, to))),
            );
            t.push(cells);
        }
        out.write(&format!("transitions_{}", model.regime()), &t)?;
    }

    let mut params = model.json();
    params["N"] = json!(pop.size());
    params["beta"] = json!(pop.beta());
    params["coop_measure"] = json!(args.coop_measure.name());
    Ok(Report {
        params,
        seeds: vec![],
    })
}

fn risk(args: &ModelArgs, out: &mut Outputs) -> Result<Report> {
    let model = Model::from_args(args)?;
    let m = model.matrix();
    let mut pairs = Table::new(["a", "b", "sum_a", "sum_b", "relation"]);
    for a in Strategy::ALL {
        for b in Strategy::ALL.into_iter().filter(|&b| b != a) {
            let relation = match risk_dominance(a, b, &m)? {
                RiskOrdering::Dominant => "dominant",
                RiskOrdering::Dominated => "dominated",
                RiskOrdering::Neutral => "neutral",
            };
            pairs.push(vec![
                a.label().into(),
                b.label().into(),
                Cell::Num(m.get(a, a) + m.get(a, b)),
                Cell::Num(m.get(b, a) + m.get(b, b)),
                relation.into(),
            ]);
        }
    }
    echo(&out.write(&format!("risk_dominance_{}", model.regime()), &pairs)?);

    let report = RiskDominanceReport::new(&m);
    let acd_wins = Strategy::ALL
        .into_iter()
        .filter(|&s| s != Strategy::ACD && s != Strategy::ACC)
        .all(|s| report.dominates(Strategy::ACD, s));
    let mut thresholds = Table::new(["regime", "u", "alpha", "eps", "threshold", "acd_dominates"]);
    let threshold = match acd_risk_dominance_threshold(&model.game, &model.policy) {
        Ok(t) => Cell::Num(t),
        Err(e) => {
            eprintln!("no closed-form threshold: {e}");
            Cell::Text(String::new())
        }
    };
    thresholds.push(vec![
        model.regime().name().into(),
        Cell::Num(model.policy.budget()),
        Cell::Num(model.policy.alpha()),
        Cell::Num(model.commit.cost()),
        threshold,
        acd_wins.into(),
    ]);
    echo(&out.write(&format!("acd_threshold_{}", model.regime()), &thresholds)?);
    Ok(Report {
        params: model.json(),
        seeds: vec![],
    })
}

fn sweep(args: &SweepArgs, out: &mut Outputs) -> Result<Report> {
    let resolved = resolve_sweep(args)?;
    let spec = &resolved.spec;
    let game = &resolved.game;
    let base = spec.point(0)?;
    let pop = PopulationParams::new(base.n, base.beta)?;

    match resolved.analysis {
        Analysis::Grid => {
            let rows = run_sweep(spec, game)?;
            for &regime in &spec.regimes {
                let mut table = Table::new(sweep_columns(&spec.outputs));
                for row in rows.iter().filter(|r| r.regime == regime) {
                    let mut cells = param_cells(&row.point);
                    if spec.wants(SweepOutput::StrategyFrequencies) {
                        cells.extend(row.frequencies.iter().map(|&p| Cell::Num(p)));
                    }
                    if spec.wants(SweepOutput::Cooperation) {
                        cells.push(Cell::Num(row.cooperation));
                    }
                    if let Some(flags) = row.ess {
                        cells.extend(flags.iter().map(|&f| Cell::Flag(f)));
                    }
                    table.push(cells);
                }
                out.write(&format!("sweep_{regime}"), &table)?;
                eprintln!("{regime}: {} rows", table.rows.len());
            }
        }
        Analysis::CoopDifference => {
            let swept: Vec<Param> = spec.axes.iter().map(|(p, _)| *p).collect();
            let axis = |p: Param| spec.axes.iter().find(|(q, _)| *q == p).map(|(_, a)| *a);
            let (Some(u_axis), Some(eps_axis), 2) = (axis(Param::U), axis(Param::Eps), swept.len())
            else {
                return Err(CliError::Usage(
                    "coop-difference sweeps exactly u and eps".into(),
                ));
            };
            let grid = cooperation_difference_grid(
                &u_axis,
                &eps_axis,
                game,
                &pop,
                base.alpha,
                base.chi,
                spec.measure,
            )?;
            let mut table = Table::new([
                "u",
                "eps",
                "alpha",
                "chi",
                "N",
                "beta",
                "reward",
                "punishment",
                "difference",
            ]);
            for d in &grid {
                table.push(vec![
                    Cell::Num(d.u),
                    Cell::Num(d.eps),
                    Cell::Num(base.alpha),
                    Cell::Num(base.chi),
                    Cell::Int(pop.size() as u64),
                    Cell::Num(pop.beta()),
                    Cell::Num(d.reward),
                    Cell::Num(d.punishment),
                    Cell::Num(d.difference),
                ]);
            }
            out.write("coop_difference", &table)?;
            eprintln!("coop-difference: {} rows", table.rows.len());
        }
        Analysis::OptimalAlpha => {
            if spec.axes.iter().any(|(p, _)| *p == Param::Alpha) {
                return Err(CliError::Usage(
                    "optimal-alpha searches alpha itself; do not sweep it".into(),
                ));
            }
            let points: Vec<ParamPoint> = (0..spec.points())
                .map(|i| spec.point(i))
                .collect::<std::result::Result<_, _>>()?;
            for &regime in &spec.regimes {
                let found = points
                    .par_iter()
                    .map(|p| {
                        let pop = PopulationParams::new(p.n, p.beta)?;
                        find_optimal_alpha(
                            regime,
                            p.u,
                            p.eps,
                            p.chi,
                            game,
                            &pop,
                            resolved.alpha_step,
                            spec.measure,
                        )
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let mut table = Table::new([
                    "u",
                    "eps",
                    "chi",
                    "N",
                    "beta",
                    "alpha_star",
                    "cooperation",
                    "cooperation_at_zero",
                ]);
                for (p, best) in points.iter().zip(&found) {
                    table.push(vec![
                        Cell::Num(p.u),
                        Cell::Num(p.eps),
                        Cell::Num(p.chi),
                        Cell::Int(p.n as u64),
                        Cell::Num(p.beta),
                        Cell::Num(best.alpha),
                        Cell::Num(best.cooperation),
                        Cell::Num(best.cooperation_at_zero),
                    ]);
                }
                out.write(&format!("optimal_alpha_{regime}"), &table)?;
                eprintln!("{regime}: {} rows", table.rows.len());
            }
        }
    }

    let analysis = match resolved.analysis {
        Analysis::Grid => "grid",
        Analysis::CoopDifference => "coop-difference",
        Analysis::OptimalAlpha => "optimal-alpha",
    };
    Ok(Report {
        params: json!({
            "game": game_json(game),
            "analysis": analysis,
            "regimes": spec.regimes.iter().map(|r| r.name()).collect::<Vec<_>>(),
            "axes": spec.axes.iter().map(|(p, a)| (p.name().to_string(), json!(a.to_string()))).collect::<serde_json::Map<_, _>>(),
            "fixed": spec.fixed.iter().map(|(p, v)| (p.name().to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "outputs": spec.outputs,
            "coop_measure": spec.measure.name(),
            "alpha_step": resolved.alpha_step,
        }),
        seeds: vec![],
    })
}

fn montecarlo(args: &MonteCarloArgs, out: &mut Outputs) -> Result<Report> {
    let model = Model::from_args(&args.model)?;
    let pop = pop_params(&args.pop)?;
    let matrix = model.matrix();
    let initial = if args.initial.trim().eq_ignore_ascii_case("uniform") {
        InitialState::Uniform
    } else {
        InitialState::Monomorphic(args.initial.parse()?)
    };
    let mut cfg = SimulationConfig::new(pop, args.mu, args.steps, args.seed)?;
    if let Some(b) = args.burn_in {
        cfg.burn_in = b;
    }
    cfg.batches = args.batches;
    cfg.initial = initial;
    cfg.validate()?;
    if args.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..args.replicates)
        .map(|k| args.seed.wrapping_add(k))
        .collect();

    let regime = model.regime();
    let mut estimates = Vec::with_capacity(seeds.len());
    let rest = match args.trajectory {
        Some(thin) => {
            let (est, snapshots) = simulate_with_trajectory(&matrix, &cfg, thin)?;
            estimates.push(est);
            let mut table =
                Table::new(std::iter::once("step".to_string()).chain(strategy_columns("")));
            for snap in &snapshots {
                let mut cells = vec![Cell::Int(snap.step)];
                cells.extend(snap.counts.iter().map(|&c| Cell::Int(c as u64)));
                table.push(cells);
            }
            out.write(&format!("trajectory_{regime}_seed{}", seeds[0]), &table)?;
            &seeds[1..]
        }
        None => &seeds[..],
    };
    estimates.extend(simulate_replicates(&matrix, &cfg, rest)?);
    let pooled = if estimates.len() == 1 {
        estimates[0].clone()
    } else {
        pool_estimates(&estimates)?
    };

    let mut table = Table::new(["strategy", "mean", "se"]);
    for s in Strategy::ALL {
        table.push(vec![
            s.label().into(),
            Cell::Num(pooled.get(s)),
            Cell::Num(pooled.standard_error[s.index()]),
        ]);
    }
    echo(&out.write(&format!("montecarlo_{regime}"), &table)?);
    let mut summary = Table::new(["replicates", "sampled_updates", "monomorphic_fraction"]);
    summary.push(vec![
        Cell::Int(estimates.len() as u64),
        Cell::Int(pooled.sampled_updates),
        Cell::Num(pooled.monomorphic_fraction),
    ]);
    out.write(&format!("montecarlo_{regime}_summary"), &summary)?;

    let mut params = model.json();
    params["N"] = json!(pop.size());
    params["beta"] = json!(pop.beta());
    params["mu"] = json!(cfg.mutation);
    params["steps"] = json!(cfg.steps);
    params["burn_in"] = json!(cfg.burn_in);
    params["batches"] = json!(cfg.batches);
    params["replicates"] = json!(args.replicates);
    params["initial"] = json!(args.initial.trim());
    params["trajectory_every"] = json!(args.trajectory);
    params["rng"] = json!("ChaCha8 (seed_from_u64)");
    Ok(Report { params, seeds })
}

/// Prints a rendered table; a closed stdout (e.g. piped into `head`) is not an error,
/// the file is already written.
fn echo(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
