use minkowski_tasks::analyzers::{summoning_check, Status};
use minkowski_tasks::engine::{estimate, EngineConfig, Mode};
use minkowski_tasks::geometry::RoutingConfig;
use minkowski_tasks::scenario::{catalog_source, load_catalog, parse_scenario};
use minkowski_tasks::tasks::sample_inputs;

#[test]
fn sampled_inputs_follow_their_distribution() {
    let src = "[points]\nP1 = (0; 0)\nQ1 = (1; 0)\n[inputs]\n\
               a = classical at P1 dist(0: 0.2, 1: 0.5, 2: 0.3)\n\
               [outputs]\nb = at Q1 value a\n[predicate]\nexact\n";
    let s = parse_scenario(src).unwrap();
    let n = 20_000;
    let mut counts = [0usize; 3];
    for seed in 0..n {
        let a = sample_inputs(&s.task, seed).unwrap();
        counts[a.values["a"] as usize] += 1;
    }
    for (c, p) in counts.iter().zip([0.2, 0.5, 0.3]) {
        let f = *c as f64 / n as f64;
        // About five standard errors.
        assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt(), "{counts:?}");
    }
}

#[test]
fn measure_and_prepare_reaches_two_thirds() {
    let s = load_catalog("fig4_cloning").unwrap().unwrap();
    let cfg = EngineConfig {
        seed: 123,
        ..EngineConfig::default()
    };
    let e = estimate(&s.task, s.strategy("measure_prepare").unwrap(), Mode::MonteCarlo { trials: 10_000 }, &cfg)
        .unwrap();
    let f = e.mean_min_fidelity.unwrap();
    assert!((f - 2.0 / 3.0).abs() < 0.01, "{f}");
}

// The analysis and a concrete strategy must agree across the family: the
// carrier of the entangled half sits where it hears every call, and succeeds
// exactly when it can still reach every return point.
#[test]
fn summoning_verdict_matches_the_teleport_strategy() {
    let src = catalog_source("fig5_summoning").unwrap();
    for w in [0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 1.0, 3.0] {
        let text = src.replace("W = T - delta\n", &format!("W = {w}\n"));
        assert_ne!(text, src);
        let s = parse_scenario(&text).unwrap();
        let verdict = summoning_check(&s.task, &RoutingConfig::default());
        let e = estimate(&s.task, s.strategy("teleport").unwrap(), Mode::Exact, &EngineConfig::default()).unwrap();
        let works = (e.success_probability - 1.0).abs() < 1e-9;
        assert_eq!(verdict.status == Status::Feasible, works, "w = {w}: {:?}", verdict.status);
        assert_eq!(works, w <= 0.5, "w = {w}");
    }
}

#[test]
fn no_cloning_strategy_beats_the_optimal_cloner() {
    let s = load_catalog("fig4_cloning").unwrap().unwrap();
    let cfg = EngineConfig {
        seed: 4,
        ..EngineConfig::default()
    };
    for st in &s.strategies {
        let e = estimate(&s.task, st, Mode::MonteCarlo { trials: 10_000 }, &cfg).unwrap();
        let f = e.mean_min_fidelity.unwrap();
        assert!(f <= 5.0 / 6.0 + 0.02, "{}: {f}", st.name);
    }
}
