use commitment_core::finite_pop::{stationary_distribution, transition_matrix, PopulationParams};
use commitment_core::montecarlo::{
    pool_estimates, simulate_replicates, FrequencyEstimate, InitialState, SimulationConfig,
};
use commitment_core::{build_matrix, CommitmentParams, GameParams, IncentivePolicy, Strategy};

fn pooled(
    matrix: &commitment_core::PayoffMatrix,
    cfg: &SimulationConfig,
    replicates: u64,
) -> FrequencyEstimate {
    let seeds: Vec<u64> = (0..replicates).collect();
    pool_estimates(&simulate_replicates(matrix, cfg, &seeds).unwrap()).unwrap()
}

#[test]
fn neutral_drift_is_uniform() {
    let matrix = build_matrix(
        &GameParams::default(),
        &IncentivePolicy::reward(2.0, 0.0).unwrap(),
        &CommitmentParams::new(0.5, 0.0).unwrap(),
    );
    let pop = PopulationParams::new(100, 0.0).unwrap();
    let mut cfg = SimulationConfig::new(pop, 1e-3, 5_000_000, 0).unwrap();
    cfg.initial = InitialState::Uniform;
    let est = pooled(&matrix, &cfg, 16);
    for s in Strategy::ALL {
        let (f, se) = (est.get(s), est.standard_error[s.index()]);
        println!("{s}: {f:.4} +/- {se:.4}");
        assert!(se > 0.0);
        assert!((f - 0.125).abs() < 3.0 * se, "{s}: {f} +/- {se}");
    }
}

#[test]
fn rare_mutation_top_two_matches_chain() {
    let matrix = build_matrix(
        &GameParams::default(),
        &IncentivePolicy::reward(2.0, 0.0).unwrap(),
        &CommitmentParams::new(0.5, 0.05).unwrap(),
    );
    let pop = PopulationParams::default();
    let exact = stationary_distribution(&transition_matrix(&matrix, &pop)).unwrap();
    let cfg = SimulationConfig::new(pop, 5e-5, 20_000_000, 0).unwrap();
    let est = pooled(&matrix, &cfg, 16);
    assert!(
        est.monomorphic_fraction > 0.95,
        "monomorphic {:.3}",
        est.monomorphic_fraction
    );

    let top: Vec<Strategy> = exact.ranking()[..2].to_vec();
    let sim = est.ranking();
    println!(
        "analytic top-2 {}/{}, simulated {}/{}",
        top[0], top[1], sim[0], sim[1]
    );
    // every analytic top-2 strategy must not be beaten by an outsider beyond 3 sigma
    for &s in &top {
        for t in Strategy::ALL.into_iter().filter(|t| !top.contains(t)) {
            let gap = est.get(s) - est.get(t);
            let se = est.standard_error[s.index()].hypot(est.standard_error[t.index()]);
            assert!(
                gap > -3.0 * se,
                "{s} {:.3} vs {t} {:.3} (se {se:.3})",
                est.get(s),
                est.get(t)
            );
        }
    }
    let (a, b) = (top[0], top[1]);
    let se = est.standard_error[a.index()].hypot(est.standard_error[b.index()]);
    assert!(est.get(a) - est.get(b) > -3.0 * se);
}

#[test]
fn replicate_pool_is_order_deterministic() {
    let matrix = build_matrix(
        &GameParams::default(),
        &IncentivePolicy::punishment(2.0, 0.2).unwrap(),
        &CommitmentParams::new(1.0, 0.1).unwrap(),
    );
    let cfg =
        SimulationConfig::new(PopulationParams::new(30, 0.5).unwrap(), 1e-2, 50_000, 7).unwrap();
    let seeds = [3, 1, 4, 1, 5];
    let a = simulate_replicates(&matrix, &cfg, &seeds).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let b = pool.install(|| simulate_replicates(&matrix, &cfg, &seeds).unwrap());
    assert_eq!(a, b);
    assert_eq!(a[1], a[3]);
    assert_eq!(pool_estimates(&a).unwrap(), pool_estimates(&b).unwrap());
}
