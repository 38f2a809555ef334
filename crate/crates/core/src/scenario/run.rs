use super::report::{Report, ResultEntry, SCHEMA_VERSION};
use super::{Analysis, Scenario, SimExpect, SimMode};
use crate::analyzers::{
    budget_audit, classical_routing_check, clone_demand_check, commitment_deducibility, summoning_check,
    unveiling_consistency_check, Status, UnveilSearch, Verdict,
};
use crate::engine::{estimate, EngineConfig, Estimate, Mode};
use crate::geometry::RoutingConfig;

/// Which requests to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    All,
    /// Static analyses only (`budget` still simulates).
    Analyses,
    /// `simulate` requests only; every strategy when there are none.
    Simulations,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub selection: Selection,
    /// Replaces the scenario seed.
    pub seed: Option<u64>,
    /// Replaces the mode of every simulation.
    pub mode: Option<SimMode>,
    pub resolution: Option<usize>,
}

fn engine_mode(m: SimMode) -> Mode {
    match m {
        SimMode::Exact => Mode::Exact,
        SimMode::MonteCarlo { trials } => Mode::MonteCarlo { trials },
    }
}

fn verdict_entry(line: usize, text: &str, v: Verdict, expect: Status, sim: Option<Estimate>) -> ResultEntry {
    ResultEntry {
        line,
        request: text.to_string(),
        expected: expect.to_string(),
        observed: v.status.to_string(),
        matched: v.status == expect,
        verdict: Some(v),
        simulation: sim,
        error: None,
    }
}

fn failed(line: usize, text: &str, expected: String, error: String) -> ResultEntry {
    ResultEntry {
        line,
        request: text.to_string(),
        expected,
        observed: "error".into(),
        matched: false,
        verdict: None,
        simulation: None,
        error: Some(error),
    }
}

fn close(got: f64, want: f64, tol: Option<f64>, e: &Estimate) -> bool {
    match (tol, e.interval) {
        (Some(t), _) => (got - want).abs() <= t,
        (None, Some([lo, hi])) => lo - 1e-9 <= want && want <= hi + 1e-9,
        (None, None) => (got - want).abs() <= 1e-9,
    }
}

fn check_sim(e: &Estimate, x: &SimExpect) -> (String, String, bool) {
    let mut want = Vec::new();
    let mut got = Vec::new();
    let mut ok = true;
    if let Some(s) = x.success {
        want.push(format!("success={s}"));
        got.push(format!("success={:.6}", e.success_probability));
        ok &= close(e.success_probability, s, x.tol, e);
    }
    if let Some(f) = x.min_fidelity {
        want.push(format!("min_fidelity={f}"));
        match e.mean_min_fidelity {
            Some(m) => {
                got.push(format!("min_fidelity={m:.6}"));
                ok &= (m - f).abs() <= x.tol.unwrap_or(1e-9);
            }
            None => {
                got.push("min_fidelity=none".into());
                ok = false;
            }
        }
    }
    if let Some(k) = &x.error {
        want.push(format!("error={k}"));
        let kinds: Vec<&str> = e.errors.iter().map(|s| s.kind.as_str()).collect();
        got.push(format!("errors=[{}]", kinds.join(",")));
        ok &= kinds.contains(&k.as_str());
    } else if !e.errors.is_empty() {
        got.push(format!("errors=[{}]", e.errors.iter().map(|s| s.kind.as_str()).collect::<Vec<_>>().join(",")));
    }
    if let Some(p) = x.predicate {
        want.push(format!("predicate={}", if p { "satisfied" } else { "violated" }));
        match &e.predicate {
            Some(c) => {
                got.push(format!("predicate={}", if c.satisfied { "satisfied" } else { "violated" }));
                ok &= c.satisfied == p;
            }
            None => {
                got.push("predicate=none".into());
                ok = false;
            }
        }
    }
    if !e.causal_audit_passed {
        got.push("causal_audit=failed".into());
        ok = false;
    }
    if want.is_empty() {
        want.push("completed".into());
        got.push(format!("success={:.6}", e.success_probability));
    }
    (want.join(" "), got.join(" "), ok)
}

/// Run the requests of a scenario and collect a report.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Report {
    let seed = opts.seed.unwrap_or(s.seed);
    let routing = RoutingConfig {
        resolution: opts.resolution.unwrap_or(RoutingConfig::default().resolution),
    };
    let cfg = EngineConfig {
        routing,
        seed,
        ..EngineConfig::default()
    };
    let task = &s.task;
    let mut results = Vec::new();
    let wants = |a: &Analysis| match opts.selection {
        Selection::All => true,
        Selection::Analyses => !matches!(a, Analysis::Simulate { .. }),
        Selection::Simulations => matches!(a, Analysis::Simulate { .. }),
    };
    for r in s.requests.iter().filter(|r| wants(&r.analysis)) {
        let (line, text) = (r.line, r.text.as_str());
        let entry = match &r.analysis {
            Analysis::Routing { expect } => verdict_entry(line, text, classical_routing_check(task, &routing), *expect, None),
            Analysis::CloneDemand { threshold, expect } => {
                verdict_entry(line, text, clone_demand_check(task, *threshold), *expect, None)
            }
            Analysis::Summoning { expect } => verdict_entry(line, text, summoning_check(task, &routing), *expect, None),
            Analysis::Deducible { model, at, expect } => verdict_entry(
                line,
                text,
                commitment_deducibility(&s.models[model], at, &task.regions, &routing),
                *expect,
                None,
            ),
            Analysis::Unveiling {
                model,
                commit,
                unveil,
                class,
                grid,
                expect,
            } => {
                let search = UnveilSearch {
                    class: *class,
                    grid: *grid,
                };
                let m = model.as_ref().map(|m| &s.models[m]);
                let v = unveiling_consistency_check(m, unveil, commit, &search, &task.regions, &routing);
                verdict_entry(line, text, v, *expect, None)
            }
            Analysis::Budget { strategy, expect } => {
                let st = s.strategy(strategy).expect("checked at parse time");
                match estimate(task, st, Mode::Exact, &cfg) {
                    Ok(e) => verdict_entry(line, text, budget_audit(task, &e), *expect, Some(e)),
                    Err(err) => failed(line, text, expect.to_string(), err.to_string()),
                }
            }
            Analysis::Simulate { strategy, mode, expect } => {
                let st = s.strategy(strategy).expect("checked at parse time");
                let mode = engine_mode(opts.mode.unwrap_or(*mode));
                match estimate(task, st, mode, &cfg) {
                    Ok(e) => {
                        let (expected, observed, matched) = check_sim(&e, expect);
                        ResultEntry {
                            line,
                            request: text.to_string(),
                            expected,
                            observed,
                            matched,
                            verdict: None,
                            simulation: Some(e),
                            error: None,
                        }
                    }
                    Err(err) => failed(line, text, "completed".into(), err.to_string()),
                }
            }
        };
        results.push(entry);
    }
    let simulated = s.requests.iter().any(|r| matches!(r.analysis, Analysis::Simulate { .. }));
    if opts.selection == Selection::Simulations && !simulated {
        let mode = engine_mode(opts.mode.unwrap_or(SimMode::Exact));
        for st in &s.strategies {
            let text = format!("simulate strategy={}", st.name);
            results.push(match estimate(task, st, mode, &cfg) {
                Ok(e) => {
                    let (expected, observed, matched) = check_sim(&e, &SimExpect::default());
                    ResultEntry {
                        line: 0,
                        request: text,
                        expected,
                        observed,
                        matched,
                        verdict: None,
                        simulation: Some(e),
                        error: None,
                    }
                }
                Err(err) => failed(0, &text, "completed".into(), err.to_string()),
            });
        }
    }
    let passed = results.iter().all(|r| r.matched);
    Report {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        description: s.description.clone(),
        seed,
        results,
        passed,
    }
}
