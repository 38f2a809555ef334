use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::analyzers::{Verdict, Witness};
use crate::engine::{Estimate, Mode};

pub const SCHEMA_VERSION: u32 = 1;

const MAX_ERROR_LINES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    /// Line of the request in the scenario file; 0 when implied.
    pub line: usize,
    pub request: String,
    pub expected: String,
    pub observed: String,
    pub matched: bool,
    pub verdict: Option<Verdict>,
    pub simulation: Option<Estimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub description: String,
    pub seed: u64,
    pub results: Vec<ResultEntry>,
    pub passed: bool,
}

/// Stable JSON rendering.
pub fn render_machine(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn parse_machine(text: &str) -> Result<Report, serde_json::Error> {
    serde_json::from_str(text)
}

fn witness_summary(w: &Witness) -> Option<String> {
    Some(match w {
        Witness::Paths { routes } => format!("{} routed dependencies", routes.len()),
        Witness::Blocked { input, output, from, to, reason } => {
            format!("{input} at {from} -> {output} at {to}: {reason}")
        }
        Witness::ClonePair { register, outputs, points } => format!(
            "{} at {} and {} at {} both demand `{register}`",
            outputs[0], points[0], outputs[1], points[1]
        ),
        Witness::SummoningTable { carrier, routes } => format!(
            "{} call routes{}",
            routes.len(),
            carrier.as_ref().map(|c| format!(", carrier at {c}")).unwrap_or_default()
        ),
        Witness::SummoningConflict {
            calls, return_points, ..
        } => format!(
            "calls [{}] and [{}] with return points {} and {}",
            calls[0], calls[1], return_points[0], return_points[1]
        ),
        Witness::Deduction { set, .. } => format!("sufficient set {{{}}}", set.join(", ")),
        Witness::NotDeducible { missing } => format!(
            "missing {}",
            missing.iter().map(|m| format!("{{{}}}", m.join(", "))).collect::<Vec<_>>().join(" or ")
        ),
        Witness::Counterexample { model } => format!(
            "oracle events at {}",
            model.events.iter().map(|e| e.point.to_string()).collect::<Vec<_>>().join(", ")
        ),
        Witness::Implication { models_checked } => format!("{models_checked} placements checked"),
        Witness::Ledger { rows } => rows
            .iter()
            .map(|r| format!("{}: {} bits, {} qubits{}", r.region, r.bits, r.qubits, if r.ok { "" } else { " (over)" }))
            .collect::<Vec<_>>()
            .join("; "),
        Witness::NoClonePair { .. } | Witness::None => return None,
    })
}

fn estimate_lines(out: &mut String, e: &Estimate) {
    let how = match e.mode {
        Mode::Exact => format!("exact, {} assignments, {} branches", e.runs, e.branches),
        Mode::MonteCarlo { trials } => format!("mc, {trials} trials, seed {}", e.seed),
    };
    let _ = write!(out, "      success = {:.6}", e.success_probability);
    if let Some([lo, hi]) = e.interval {
        let _ = write!(out, " [{lo:.6}, {hi:.6}]");
    }
    let _ = writeln!(out, " ({how})");
    if let Some(p) = &e.predicate {
        let _ = writeln!(
            out,
            "      predicate: success {} {} {}",
            p.direction.symbol(),
            p.bound,
            if p.satisfied { "satisfied" } else { "violated" }
        );
    }
    if let Some(f) = e.mean_min_fidelity {
        let _ = writeln!(out, "      mean min fidelity = {f:.6}");
    }
    for err in e.errors.iter().take(MAX_ERROR_LINES) {
        let _ = writeln!(out, "      error [{}] weight {:.6}: {}", err.kind, err.weight, err.message);
    }
    if e.errors.len() > MAX_ERROR_LINES {
        let rest = &e.errors[MAX_ERROR_LINES..];
        let _ = writeln!(
            out,
            "      ... {} more errors, total weight {:.6}",
            rest.len(),
            rest.iter().map(|s| s.weight).sum::<f64>()
        );
    }
    for l in &e.ledger {
        let _ = writeln!(out, "      ledger {}: {} bits, {} qubits, {} messages", l.region, l.bits, l.qubits, l.messages);
    }
    let _ = writeln!(
        out,
        "      trace: {} events, audit {}, digest {}",
        e.trace_events,
        if e.causal_audit_passed { "passed" } else { "FAILED" },
        e.trace_digest
    );
}

/// Human-readable rendering, with a failure table at the end.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} (seed {})", report.scenario, report.seed);
    if !report.description.is_empty() {
        let _ = writeln!(out, "  {}", report.description);
    }
    for r in &report.results {
        let _ = writeln!(
            out,
            "  [{}] line {}: {}",
            if r.matched { "ok" } else { "FAIL" },
            r.line,
            r.request
        );
        if let Some(v) = &r.verdict {
            let _ = writeln!(out, "      verdict: {} ({})", v.status, v.analysis);
            if let Some(w) = witness_summary(&v.witness) {
                let _ = writeln!(out, "      witness: {w}");
            }
            let _ = writeln!(out, "      rationale: {}", v.rationale);
        }
        if let Some(e) = &r.simulation {
            estimate_lines(&mut out, e);
        }
        if let Some(e) = &r.error {
            let _ = writeln!(out, "      error: {e}");
        }
    }
    let failures: Vec<&ResultEntry> = report.results.iter().filter(|r| !r.matched).collect();
    let _ = writeln!(
        out,
        "{}: {}/{} requests matched",
        if report.passed { "PASS" } else { "FAIL" },
        report.results.len() - failures.len(),
        report.results.len()
    );
    if !failures.is_empty() {
        let _ = writeln!(out, "failures:");
        let _ = writeln!(out, "  {:<6} {:<40} {:<30} observed", "line", "request", "expected");
        for f in failures {
            let _ = writeln!(out, "  {:<6} {:<40} {:<30} {}", f.line, f.request, f.expected, f.observed);
        }
    }
    out
}
