use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sim::{Ctx, LedgerEntry, Sim, Step};
use super::strategy::Strategy;
use super::trace::{audit_trace, trace_digest, TraceEvent};
use super::{EngineConfig, EngineError};
use crate::geometry::SpacetimePoint;
use crate::tasks::{
    enumerate_assignments, evaluate_success, sample_inputs_with, BoundDirection, InputAssignment, OutputRecord,
    ProducedOutput, SuccessPredicate, SuccessReport, TaskSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Enumerate every classical assignment and every measurement branch.
    Exact,
    /// Independent trials, one random stream each.
    MonteCarlo { trials: usize },
}

/// One leaf of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Probability of this leaf, including the assignment weight.
    pub weight: f64,
    pub values: BTreeMap<String, f64>,
    pub input_points: BTreeMap<String, SpacetimePoint>,
    pub outputs: Vec<ProducedOutput>,
    pub report: Option<SuccessReport>,
    pub error: Option<EngineError>,
    pub ledger: Vec<LedgerEntry>,
    pub trace: Vec<TraceEvent>,
}

impl Branch {
    pub fn success(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.success)
    }
}

/// All branches of one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub branches: Vec<Branch>,
}

impl Execution {
    pub fn error(&self) -> Option<&EngineError> {
        self.branches.iter().find_map(|b| b.error.as_ref())
    }

    pub fn success_probability(&self) -> f64 {
        let total: f64 = self.branches.iter().map(|b| b.weight).sum();
        self.branches.iter().filter(|b| b.success()).map(|b| b.weight).fold(0.0, |a, w| a + w) / total
    }
}

fn finish(ctx: &Ctx, sim: Sim, error: Option<EngineError>, scale: f64) -> Result<Branch, EngineError> {
    let report = match &error {
        None => {
            let record = OutputRecord {
                outputs: sim.outputs.clone(),
                state: sim.state.clone(),
            };
            Some(evaluate_success(ctx.task, ctx.assignment, &record)?)
        }
        Some(_) => None,
    };
    Ok(Branch {
        weight: sim.weight * scale,
        values: ctx.assignment.values.clone(),
        input_points: ctx.assignment.points.clone(),
        outputs: sim.outputs,
        report,
        error,
        ledger: sim.ledger.into_values().collect(),
        trace: sim.trace,
    })
}

/// Run one assignment, forking on every measurement outcome and tape value.
pub fn execute(
    task: &TaskSpec,
    strategy: &Strategy,
    assignment: &InputAssignment,
    cfg: &EngineConfig,
) -> Result<Execution, EngineError> {
    strategy.check(task)?;
    let ctx = Ctx::new(task, strategy, assignment, cfg);
    let mut stack = match Sim::start(&ctx, None) {
        Ok(s) => s,
        Err(e) if is_run_error(&e) => {
            return Ok(Execution {
                branches: vec![failed(&ctx, e)],
            })
        }
        Err(e) => return Err(e),
    };
    if stack.len() > cfg.branch_cap {
        return Err(EngineError::BranchCap(cfg.branch_cap));
    }
    stack.reverse();
    let mut leaves = Vec::new();
    let mut seen = stack.len();
    while let Some(mut sim) = stack.pop() {
        loop {
            match sim.step(&ctx, None) {
                Ok(Step::Continue) => {}
                Ok(Step::Done) => {
                    leaves.push(finish(&ctx, sim, None, assignment.weight)?);
                    break;
                }
                Ok(Step::Fork(children)) => {
                    seen += children.len();
                    if seen > cfg.branch_cap {
                        return Err(EngineError::BranchCap(cfg.branch_cap));
                    }
                    stack.extend(children.into_iter().rev());
                    break;
                }
                Err(e) if is_run_error(&e) => {
                    leaves.push(finish(&ctx, sim, Some(e), assignment.weight)?);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Execution { branches: leaves })
}

/// Run one assignment along a single sampled path.
pub fn execute_sampled(
    task: &TaskSpec,
    strategy: &Strategy,
    assignment: &InputAssignment,
    cfg: &EngineConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Branch, EngineError> {
    strategy.check(task)?;
    let ctx = Ctx::new(task, strategy, assignment, cfg);
    let mut sim = match Sim::start(&ctx, Some(rng)) {
        Ok(mut s) => s.pop().expect("sampling yields one start"),
        Err(e) if is_run_error(&e) => return Ok(failed(&ctx, e)),
        Err(e) => return Err(e),
    };
    loop {
        match sim.step(&ctx, Some(rng)) {
            Ok(Step::Continue) => {}
            Ok(Step::Done) => return finish(&ctx, sim, None, 1.0),
            Ok(Step::Fork(_)) => unreachable!("sampling never forks"),
            Err(e) if is_run_error(&e) => return finish(&ctx, sim, Some(e), 1.0),
            Err(e) => return Err(e),
        }
    }
}

/// Errors that make a run fail rather than make it meaningless.
fn is_run_error(e: &EngineError) -> bool {
    matches!(
        e,
        EngineError::Causality(_) | EngineError::Region(_) | EngineError::Budget(_) | EngineError::Quantum(_)
    )
}

fn failed(ctx: &Ctx, e: EngineError) -> Branch {
    Branch {
        weight: ctx.assignment.weight,
        values: ctx.assignment.values.clone(),
        input_points: ctx.assignment.points.clone(),
        outputs: Vec::new(),
        report: None,
        error: Some(e),
        ledger: Vec::new(),
        trace: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputStat {
    pub name: String,
    pub success_rate: f64,
    pub mean_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStat {
    pub kind: String,
    pub message: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateCheck {
    pub bound: f64,
    pub direction: BoundDirection,
    pub satisfied: bool,
}

/// Aggregate of a run, serializable as part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub task: String,
    pub strategy: String,
    pub mode: Mode,
    pub seed: u64,
    /// Assignments in exact mode, trials otherwise.
    pub runs: usize,
    pub branches: usize,
    pub success_probability: f64,
    /// Wilson 95% interval; sampling mode only.
    pub interval: Option<[f64; 2]>,
    /// Present for probability-bound tasks.
    pub predicate: Option<PredicateCheck>,
    pub outputs: Vec<OutputStat>,
    pub mean_min_fidelity: Option<f64>,
    pub errors: Vec<ErrorStat>,
    /// Largest traffic seen in any branch, per region.
    pub ledger: Vec<LedgerEntry>,
    pub causal_audit_passed: bool,
    pub trace_events: usize,
    pub trace_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub estimate: Estimate,
    pub branches: Vec<Branch>,
}

/// Wilson score interval at 95%.
pub(crate) fn wilson(successes: f64, n: usize) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    [(center - half).max(0.0), (center + half).min(1.0)]
}

/// Run `strategy` on `task` and keep every branch.
pub fn run(task: &TaskSpec, strategy: &Strategy, mode: Mode, cfg: &EngineConfig) -> Result<RunResult, EngineError> {
    let mut branches = Vec::new();
    let runs = match mode {
        Mode::Exact => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let assignments = enumerate_assignments(task, &mut rng)?;
            for a in &assignments {
                branches.extend(execute(task, strategy, a, cfg)?.branches);
            }
            assignments.len()
        }
        Mode::MonteCarlo { trials } => {
            for trial in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(trial as u64);
                let a = sample_inputs_with(task, &mut rng)?;
                let mut b = execute_sampled(task, strategy, &a, cfg, &mut rng)?;
                b.weight = 1.0 / trials as f64;
                branches.push(b);
            }
            trials
        }
    };
    let estimate = summarize(task, strategy, mode, cfg.seed, runs, &branches);
    Ok(RunResult { estimate, branches })
}

pub fn estimate(task: &TaskSpec, strategy: &Strategy, mode: Mode, cfg: &EngineConfig) -> Result<Estimate, EngineError> {
    Ok(run(task, strategy, mode, cfg)?.estimate)
}

fn summarize(task: &TaskSpec, strategy: &Strategy, mode: Mode, seed: u64, runs: usize, branches: &[Branch]) -> Estimate {
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    let norm = if total > 0.0 { total } else { 1.0 };
    let p = branches.iter().filter(|b| b.success()).map(|b| b.weight).fold(0.0, |a, w| a + w) / norm;
    let interval = match mode {
        Mode::Exact => None,
        Mode::MonteCarlo { trials } => Some(wilson(branches.iter().filter(|b| b.success()).count() as f64, trials)),
    };
    let predicate = match &task.predicate {
        SuccessPredicate::ProbabilityBound { bound, direction, .. } => Some(PredicateCheck {
            bound: *bound,
            direction: *direction,
            satisfied: direction.holds(p, *bound),
        }),
        _ => None,
    };
    let outputs = task
        .outputs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut ok = 0.0;
            let mut fid = 0.0;
            let mut fid_w = 0.0;
            for b in branches {
                match &b.report {
                    Some(r) => {
                        let s = &r.outputs[i];
                        if s.ok {
                            ok += b.weight;
                        }
                        if let Some(f) = s.fidelity {
                            fid += b.weight * f;
                            fid_w += b.weight;
                        }
                    }
                    None => {
                        if matches!(o.data, crate::tasks::DataRule::Quantum(_)) {
                            fid_w += b.weight;
                        }
                    }
                }
            }
            OutputStat {
                name: o.name.clone(),
                success_rate: ok / norm,
                mean_fidelity: (fid_w > 0.0).then(|| fid / fid_w),
            }
        })
        .collect();
    let has_quantum = task
        .outputs
        .iter()
        .any(|o| matches!(o.data, crate::tasks::DataRule::Quantum(_)));
    let mean_min_fidelity = has_quantum.then(|| {
        branches
            .iter()
            .map(|b| b.weight * b.report.as_ref().and_then(|r| r.min_fidelity()).unwrap_or(0.0))
            .sum::<f64>()
            / norm
    });
    let mut errors: Vec<ErrorStat> = Vec::new();
    for b in branches {
        if let Some(e) = &b.error {
            let message = e.to_string();
            match errors.iter_mut().find(|s| s.message == message) {
                Some(s) => s.weight += b.weight / norm,
                None => errors.push(ErrorStat {
                    kind: e.kind().to_string(),
                    message,
                    weight: b.weight / norm,
                }),
            }
        }
    }
    let mut ledger: BTreeMap<String, LedgerEntry> = BTreeMap::new();
    for b in branches {
        for e in &b.ledger {
            let m = ledger.entry(e.region.clone()).or_insert_with(|| LedgerEntry {
                region: e.region.clone(),
                bits: 0,
                qubits: 0,
                messages: 0,
            });
            m.bits = m.bits.max(e.bits);
            m.qubits = m.qubits.max(e.qubits);
            m.messages = m.messages.max(e.messages);
        }
    }
    Estimate {
        task: task.name.clone(),
        strategy: strategy.name.clone(),
        mode,
        seed,
        runs,
        branches: branches.len(),
        success_probability: p,
        interval,
        predicate,
        outputs,
        mean_min_fidelity,
        errors,
        ledger: ledger.into_values().collect(),
        causal_audit_passed: branches.iter().all(|b| audit_trace(&b.trace).is_ok()),
        trace_events: branches.iter().map(|b| b.trace.len()).sum(),
        trace_digest: trace_digest(branches.iter().map(|b| b.trace.as_slice())),
    }
}
