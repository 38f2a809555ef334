use serde::{Deserialize, Serialize};

use super::{Status, Verdict, Witness};
use crate::engine::Estimate;
use crate::geometry::Budget;
use crate::tasks::TaskSpec;

const NAME: &str = "budget_audit";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub region: String,
    pub bits: u64,
    pub qubits: u64,
    pub bit_budget: Budget,
    pub qubit_budget: Budget,
    pub ok: bool,
}

/// Compare the traffic a simulated strategy pushed through each penetrable
/// region against the region's budgets.
pub fn budget_audit(task: &TaskSpec, estimate: &Estimate) -> Verdict {
    let mut rows = Vec::new();
    for r in task.regions.iter().filter(|r| r.penetrable) {
        let used = estimate.ledger.iter().find(|e| e.region == r.name);
        let (bits, qubits) = used.map_or((0, 0), |e| (e.bits, e.qubits));
        rows.push(LedgerRow {
            region: r.name.clone(),
            bits,
            qubits,
            bit_budget: r.classical_bits,
            qubit_budget: r.qubits,
            ok: r.classical_bits.allows(bits) && r.qubits.allows(qubits),
        });
    }
    let over: Vec<&str> = rows.iter().filter(|r| !r.ok).map(|r| r.region.as_str()).collect();
    let (status, rationale) = if over.is_empty() {
        (
            Status::Feasible,
            format!("strategy `{}` stays within the budget of every region", estimate.strategy),
        )
    } else {
        (
            Status::Infeasible,
            format!("strategy `{}` exceeds the budget of {}", estimate.strategy, over.join(", ")),
        )
    };
    Verdict::new(NAME, status, Witness::Ledger { rows }, rationale)
}

/// Best success probability of a one-bit classical random access code over
/// `m` uniform bits with a uniformly chosen query, found by enumerating
/// every deterministic encoder and decoder. Returns the optimum and the
/// number of strategies tried.
///
/// Shared randomness cannot beat the best deterministic strategy, so this is
/// the classical optimum. Panics for `m` outside `1..=3`.
pub fn random_access_optimum(m: usize) -> (f64, usize) {
    assert!((1..=3).contains(&m), "enumeration supports 1 to 3 bits");
    let inputs = 1usize << m;
    let encoders = 1u64 << inputs;
    let decoders = 1u64 << (2 * m);
    let mut best = 0usize;
    for enc in 0..encoders {
        for dec in 0..decoders {
            let mut hits = 0;
            for a in 0..inputs {
                let sent = (enc >> a) & 1;
                for q in 0..m {
                    let guess = (dec >> (2 * q + sent as usize)) & 1;
                    if guess as usize == (a >> q) & 1 {
                        hits += 1;
                    }
                }
            }
            best = best.max(hits);
        }
    }
    (best as f64 / (inputs * m) as f64, (encoders * decoders) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ErrorStat, LedgerEntry, Mode};
    use crate::geometry::{Region, SpacetimeBox, Span};
    use crate::tasks::fixtures;

    fn estimate(bits: u64) -> Estimate {
        Estimate {
            task: "t".into(),
            strategy: "s".into(),
            mode: Mode::Exact,
            seed: 0,
            runs: 1,
            branches: 1,
            success_probability: 1.0,
            interval: None,
            predicate: None,
            outputs: vec![],
            mean_min_fidelity: None,
            errors: Vec::<ErrorStat>::new(),
            ledger: vec![LedgerEntry {
                region: "strip".into(),
                bits,
                qubits: 0,
                messages: 1,
            }],
            causal_audit_passed: true,
            trace_events: 0,
            trace_digest: String::new(),
        }
    }

    #[test]
    fn ledger_against_budget() {
        let mut task = fixtures::signalling(crate::geometry::SpacetimePoint::new_1d(10.0, 5.0));
        let b = SpacetimeBox::new(Span::new(-100.0, 100.0), vec![Span::new(-1.0, 1.0)]).unwrap();
        task.regions.push(Region::new("strip", vec![b], true, Budget::Limited(1), Budget::Limited(0)).unwrap());
        assert_eq!(budget_audit(&task, &estimate(1)).status, Status::Feasible);
        let v = budget_audit(&task, &estimate(2));
        assert_eq!(v.status, Status::Infeasible);
        let Witness::Ledger { rows } = v.witness else { panic!() };
        assert_eq!(rows[0].bits, 2);
        assert!(!rows[0].ok);
    }

    #[test]
    fn random_access_two_bits_is_three_quarters() {
        let (p, n) = random_access_optimum(2);
        assert_eq!(n, 256);
        assert!((p - 0.75).abs() < 1e-12);
        assert!((random_access_optimum(1).0 - 1.0).abs() < 1e-12);
        // Majority encoding with three bits.
        assert!((random_access_optimum(3).0 - 0.75).abs() < 1e-12);
    }
}
