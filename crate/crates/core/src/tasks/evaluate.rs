use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::EvalError;
use super::sample::{reference_of, InputAssignment};
use super::spec::{DataRule, SuccessPredicate, TaskSpec};
use super::TaskError;
use crate::geometry::SpacetimePoint;
use crate::quantum::{fidelity, QuantumState, PROPAGATED_TOL};

/// Output points match when every coordinate agrees within this.
pub const POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProducedData {
    Classical(f64),
    /// A register of the final global state.
    Quantum(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProducedOutput {
    pub point: SpacetimePoint,
    pub data: ProducedData,
}

/// Everything Alice produced in one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputRecord {
    pub outputs: Vec<ProducedOutput>,
    pub state: Option<QuantumState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputStatus {
    pub name: String,
    pub required_point: SpacetimePoint,
    pub matched: bool,
    pub required_value: Option<f64>,
    pub produced_value: Option<f64>,
    pub fidelity: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub outputs: Vec<OutputStatus>,
    /// Produced outputs at points no requirement asked for.
    pub unmatched: Vec<ProducedOutput>,
    /// Value of the predicate event, for probability-bound tasks.
    pub event: Option<bool>,
    pub success: bool,
}

impl SuccessReport {
    /// Smallest fidelity over quantum outputs; 0 for an unmatched one.
    pub fn min_fidelity(&self) -> Option<f64> {
        self.outputs
            .iter()
            .filter_map(|o| o.fidelity.or(if o.matched { None } else { Some(0.0) }))
            .reduce(f64::min)
    }
}

struct Candidate<'a> {
    idx: usize,
    out: &'a ProducedOutput,
}

fn score(
    task: &TaskSpec,
    assignment: &InputAssignment,
    state: Option<&QuantumState>,
    rule: &DataRule,
    required_value: Option<f64>,
    produced: &ProducedOutput,
) -> Result<(bool, Option<f64>, Option<f64>), TaskError> {
    let threshold = match task.predicate {
        SuccessPredicate::QuantumFidelity { threshold } => threshold,
        _ => 1.0 - PROPAGATED_TOL,
    };
    Ok(match (rule, &produced.data) {
        (DataRule::Classical(_), ProducedData::Classical(v)) => (Some(*v) == required_value, Some(*v), None),
        (DataRule::Free, ProducedData::Classical(v)) => (true, Some(*v), None),
        (DataRule::Quantum(input), ProducedData::Quantum(reg)) => {
            let state = state.ok_or_else(|| TaskError::Missing("final quantum state".into()))?;
            if !state.system().contains(reg) {
                return Ok((false, None, Some(0.0)));
            }
            let required = assignment.required_state(task, input)?;
            let mut keep = vec![reg.as_str()];
            if let Some(r) = reference_of(task, input) {
                keep.push(r);
            }
            let got = state.partial_trace(&keep)?;
            let f = if got.system().dims() == required.system().dims() {
                fidelity(&got, &required)?
            } else {
                0.0
            };
            (f >= threshold, None, Some(f))
        }
        (DataRule::Quantum(_), ProducedData::Classical(v)) => (false, Some(*v), Some(0.0)),
        _ => (false, None, None),
    })
}

/// Score `record` against the task for one assignment.
///
/// Outputs are matched to requirements by location; the order of
/// `record.outputs` does not matter.
pub fn evaluate_success(
    task: &TaskSpec,
    assignment: &InputAssignment,
    record: &OutputRecord,
) -> Result<SuccessReport, TaskError> {
    let lookup = assignment.lookup(task);
    let mut used = vec![false; record.outputs.len()];
    let mut statuses = Vec::with_capacity(task.outputs.len());
    let mut bound_values: BTreeMap<String, f64> = BTreeMap::new();
    for req in &task.outputs {
        let point = req.point.eval(&lookup)?;
        let required_value = match &req.data {
            DataRule::Classical(e) => Some(e.eval(&lookup)?),
            _ => None,
        };
        let candidates: Vec<Candidate> = record
            .outputs
            .iter()
            .enumerate()
            .filter(|(i, o)| !used[*i] && o.point.approx_eq(&point, POINT_TOL))
            .map(|(idx, out)| Candidate { idx, out })
            .collect();
        // Best candidate by (ok, fidelity), ties broken on the data itself so
        // the choice does not depend on the order of the record.
        let mut best: Option<(usize, (bool, Option<f64>, Option<f64>))> = None;
        for c in &candidates {
            let s = score(task, assignment, record.state.as_ref(), &req.data, required_value, c.out)?;
            let better = match &best {
                None => true,
                Some((bi, bs)) => {
                    let key = |s: &(bool, Option<f64>, Option<f64>)| (s.0, s.2.unwrap_or(0.0));
                    let (a, b) = (key(&s), key(bs));
                    a.0 & !b.0
                        || (a.0 == b.0 && a.1 > b.1)
                        || (a.0 == b.0 && a.1 == b.1 && data_key(&c.out.data) < data_key(&record.outputs[*bi].data))
                }
            };
            if better {
                best = Some((c.idx, s));
            }
        }
        let status = match best {
            Some((idx, (ok, produced_value, fid))) => {
                used[idx] = true;
                if let Some(v) = produced_value {
                    bound_values.insert(req.name.clone(), v);
                }
                OutputStatus {
                    name: req.name.clone(),
                    required_point: point,
                    matched: true,
                    required_value,
                    produced_value,
                    fidelity: fid,
                    ok,
                }
            }
            None => OutputStatus {
                name: req.name.clone(),
                required_point: point,
                matched: false,
                required_value,
                produced_value: None,
                fidelity: None,
                ok: false,
            },
        };
        statuses.push(status);
    }
    let unmatched: Vec<ProducedOutput> = record
        .outputs
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(o, _)| o.clone())
        .collect();
    let all_ok = statuses.iter().all(|s| s.ok) && unmatched.is_empty();
    let (event, success) = match &task.predicate {
        SuccessPredicate::ProbabilityBound { event, .. } => {
            let holds = if all_ok {
                let env = |n: &str| -> Result<f64, EvalError> {
                    bound_values.get(n).copied().map_or_else(|| lookup(n), Ok)
                };
                event.eval(&env)? != 0.0
            } else {
                false
            };
            (Some(holds), holds)
        }
        _ => (None, all_ok),
    };
    Ok(SuccessReport {
        outputs: statuses,
        unmatched,
        event,
        success,
    })
}

fn data_key(d: &ProducedData) -> (u8, f64, String) {
    match d {
        ProducedData::Classical(v) => (0, *v, String::new()),
        ProducedData::Quantum(r) => (1, 0.0, r.clone()),
    }
}
