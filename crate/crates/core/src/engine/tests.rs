use std::f64::consts::PI;

use super::*;
use crate::scenario::{catalog_names, load_catalog, parse_scenario, Scenario};
use crate::tasks::ProducedData;

fn catalog(name: &str) -> Scenario {
    load_catalog(name).unwrap().unwrap()
}

fn cfg(seed: u64) -> EngineConfig {
    EngineConfig {
        seed,
        ..EngineConfig::default()
    }
}

fn exact(s: &Scenario, strategy: &str) -> Estimate {
    estimate(&s.task, s.strategy(strategy).unwrap(), Mode::Exact, &cfg(s.seed)).unwrap()
}

fn relay(q1: &str) -> Scenario {
    let text = format!(
        "[points]\nP1 = (0; 0)\nQ1 = {q1}\n[inputs]\na = classical at P1 uniform(0, 1)\n\
         [outputs]\nb = at Q1 value a\n[predicate]\nexact\n\
         [strategy relay]\nagent A at P1\n  send a to B\nagent B at Q1\n  output a\n"
    );
    parse_scenario(&text).unwrap()
}

#[test]
fn signal_inside_the_cone_succeeds() {
    let e = exact(&relay("(4; 2)"), "relay");
    assert_eq!(e.success_probability, 1.0);
    assert!(e.errors.is_empty());
    assert!(e.causal_audit_passed);
}

#[test]
fn signal_on_the_light_ray_succeeds() {
    assert_eq!(exact(&relay("(3; 3)"), "relay").success_probability, 1.0);
}

#[test]
fn spacelike_signal_is_a_causality_error() {
    let e = exact(&relay("(1; 3)"), "relay");
    assert_eq!(e.success_probability, 0.0);
    assert_eq!(e.errors.len(), 1);
    assert_eq!(e.errors[0].kind, "causality");
    assert!((e.errors[0].weight - 1.0).abs() < 1e-12);
}

#[test]
fn bell_values() {
    let s = catalog("fig3_bell");
    assert!((exact(&s, "zeros").success_probability - 0.75).abs() < 1e-12);
    let want = (PI / 8.0).cos().powi(2);
    let e = exact(&s, "singlet");
    assert!((e.success_probability - want).abs() < 1e-9, "{}", e.success_probability);
    assert!(e.predicate.unwrap().satisfied);
}

#[test]
fn teleport_routing_exact_and_sampled() {
    let s = catalog("sec33_teleport");
    let st = s.strategy("teleport").unwrap();
    let e = exact(&s, "teleport");
    assert!((e.success_probability - 1.0).abs() < 1e-9);
    assert!((e.mean_min_fidelity.unwrap() - 1.0).abs() < 1e-9);
    let mc = estimate(&s.task, st, Mode::MonteCarlo { trials: 200 }, &cfg(3)).unwrap();
    assert_eq!(mc.success_probability, 1.0);
    let naive = exact(&s, "naive");
    assert_eq!(naive.success_probability, 0.0);
    assert!(naive.errors.iter().any(|e| e.kind == "causality"));
}

#[test]
fn same_seed_same_estimate() {
    let s = catalog("fig4_cloning");
    let st = s.strategy("measure_prepare").unwrap();
    let mode = Mode::MonteCarlo { trials: 300 };
    let a = estimate(&s.task, st, mode, &cfg(9)).unwrap();
    let b = estimate(&s.task, st, mode, &cfg(9)).unwrap();
    assert_eq!(a, b);
    let c = estimate(&s.task, st, mode, &cfg(10)).unwrap();
    assert_ne!(a.trace_digest, c.trace_digest);
}

#[test]
fn every_catalog_run_passes_the_audit() {
    for name in catalog_names() {
        let s = catalog(name);
        for st in &s.strategies {
            let r = run(&s.task, st, Mode::Exact, &cfg(s.seed)).unwrap();
            assert!(r.estimate.causal_audit_passed, "{name}/{}", st.name);
            for b in &r.branches {
                audit_trace(&b.trace).unwrap();
            }
        }
    }
}

#[test]
fn audit_rejects_a_spacelike_read() {
    let p = |t: f64, x: f64| crate::geometry::SpacetimePoint::new_1d(t, x);
    let ev = |id, point, reads| TraceEvent {
        id,
        kind: EventKind::Receive,
        agent: None,
        point,
        detail: String::new(),
        reads,
    };
    let good = vec![ev(0, p(0.0, 0.0), vec![]), ev(1, p(2.0, 1.0), vec![0])];
    assert!(audit_trace(&good).is_ok());
    let bad = vec![ev(0, p(0.0, 0.0), vec![]), ev(1, p(1.0, 2.0), vec![0])];
    assert!(audit_trace(&bad).is_err());
    let order = vec![ev(0, p(0.0, 0.0), vec![1]), ev(1, p(1.0, 0.0), vec![])];
    assert!(audit_trace(&order).is_err());
}

#[test]
fn ledger_counts_bits_through_a_region() {
    let s = catalog("fig11_infocausality");
    let one = exact(&s, "one_bit");
    assert_eq!(one.ledger.len(), 1);
    assert_eq!((one.ledger[0].bits, one.ledger[0].qubits), (1, 0));
    let two = exact(&s, "two_bits");
    assert_eq!(two.ledger[0].bits, 2);
}

#[test]
fn enforced_budget_aborts_the_run() {
    let s = catalog("fig11_infocausality");
    let c = EngineConfig {
        enforce_budgets: true,
        ..cfg(1)
    };
    let e = estimate(&s.task, s.strategy("two_bits").unwrap(), Mode::Exact, &c).unwrap();
    assert_eq!(e.success_probability, 0.0);
    assert!(e.errors.iter().all(|e| e.kind == "budget"));
    let ok = estimate(&s.task, s.strategy("one_bit").unwrap(), Mode::Exact, &c).unwrap();
    assert!((ok.success_probability - 0.75).abs() < 1e-12);
}

fn classical(b: &Branch, i: usize) -> f64 {
    match b.outputs[i].data {
        ProducedData::Classical(v) => v,
        ProducedData::Quantum(_) => panic!("expected a classical output"),
    }
}

// Bob's marginal must not depend on Alice's input.
#[test]
fn singlet_strategy_does_not_signal() {
    let s = catalog("fig3_bell");
    let r = run(&s.task, s.strategy("singlet").unwrap(), Mode::Exact, &cfg(2)).unwrap();
    let bob_at = s.points["Q2"].clone();
    for i2 in [0.0, 1.0] {
        let mut marg = Vec::new();
        for i1 in [0.0, 1.0] {
            let (mut one, mut tot) = (0.0, 0.0);
            for b in r.branches.iter().filter(|b| b.values["i1"] == i1 && b.values["i2"] == i2) {
                tot += b.weight;
                let o = b.outputs.iter().position(|o| o.point == bob_at).unwrap();
                if classical(b, o) == 1.0 {
                    one += b.weight;
                }
            }
            marg.push(one / tot);
        }
        assert!((marg[0] - marg[1]).abs() < 1e-9, "{marg:?}");
    }
}

#[test]
fn branch_cap_is_reported() {
    let s = catalog("fig10_relbc_rounds");
    let c = EngineConfig {
        branch_cap: 4,
        ..cfg(1)
    };
    let err = estimate(&s.task, s.strategy("honest").unwrap(), Mode::Exact, &c).unwrap_err();
    assert_eq!(err.kind(), "branch_cap");
}
