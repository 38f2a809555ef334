//! Task data model: input events with known distributions, output
//! requirements, success predicates and excluded regions.

mod evaluate;
pub mod expr;
mod sample;
mod spec;

pub use evaluate::{
    evaluate_success, OutputRecord, OutputStatus, ProducedData, ProducedOutput, SuccessReport, POINT_TOL,
};
pub use expr::{EvalError, Expr, PointExpr, SyntaxError};
pub use sample::{
    classical_assignments, enumerate_assignments, prepare_quantum, sample_inputs, sample_inputs_with,
    InputAssignment, MAX_ASSIGNMENTS,
};
pub use spec::{
    bits_for, BoundDirection, ClassicalSource, DataRule, Diagnostic, DiagnosticKind, Distribution,
    InputEvent, OutputRequirement, Payload, QuantumPrep, QuantumSource, SuccessPredicate, TaskSpec,
};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0} classical assignments exceed the enumeration cap")]
    TooManyAssignments(usize),
    #[error("missing {0}")]
    Missing(String),
}

/// Structural checks, then evaluation of every point and data rule over
/// every classical assignment. Returns diagnostics; empty means valid.
pub fn validate(task: &TaskSpec) -> Vec<Diagnostic> {
    let mut out = spec::validate(task);
    if !out.is_empty() {
        return out;
    }
    let assignments = match classical_assignments(task) {
        Ok(a) => a,
        Err(e) => {
            out.push(Diagnostic {
                kind: DiagnosticKind::BadDistribution,
                message: e.to_string(),
            });
            return out;
        }
    };
    for o in &task.outputs {
        // Evaluate with only the declared dependencies visible.
        let mut failure = None;
        for (_, values) in &assignments {
            let lookup = |n: &str| -> Result<f64, EvalError> {
                if o.deps.iter().any(|d| d == n) {
                    values.get(n).copied().ok_or_else(|| EvalError::Unavailable {
                        name: n.into(),
                        reason: "quantum input has no classical value".into(),
                    })
                } else {
                    task.params.get(n).copied().ok_or_else(|| EvalError::Unknown(n.into()))
                }
            };
            let point = o.point.eval(&lookup);
            let data = match &o.data {
                DataRule::Classical(e) => e.eval(&lookup).map(|_| ()),
                _ => Ok(()),
            };
            match (point, data) {
                (Ok(p), Ok(())) if p.dim() == task.dim => {}
                (Ok(p), Ok(())) => {
                    failure = Some(format!("point has {} spatial axes, task has {}", p.dim(), task.dim))
                }
                (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
            }
            if failure.is_some() {
                break;
            }
        }
        if let Some(msg) = failure {
            out.push(Diagnostic {
                kind: DiagnosticKind::PointRule,
                message: format!("output `{}` is not determined by its declared dependencies: {msg}", o.name),
            });
        }
    }
    for i in &task.inputs {
        for (_, values) in &assignments {
            let lookup = |n: &str| -> Result<f64, EvalError> {
                if n == i.name {
                    values.get(n).copied().ok_or_else(|| EvalError::Unknown(n.into()))
                } else {
                    task.params.get(n).copied().ok_or_else(|| EvalError::Unknown(n.into()))
                }
            };
            match i.point.eval(&lookup) {
                Ok(p) if p.dim() == task.dim => {}
                Ok(_) | Err(_) => {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::PointRule,
                        message: format!("input `{}` point cannot be evaluated", i.name),
                    });
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use std::collections::BTreeMap;

    use super::*;
    use crate::geometry::SpacetimePoint;

    pub fn bit() -> Payload {
        Payload::Classical(ClassicalSource::Distribution(Distribution::uniform([0.0, 1.0])))
    }

    pub fn qubit() -> Payload {
        Payload::Quantum(QuantumSource {
            dim: 2,
            prep: QuantumPrep::Haar,
        })
    }

    pub fn input(name: &str, p: SpacetimePoint, payload: Payload) -> InputEvent {
        InputEvent {
            name: name.into(),
            point: PointExpr::fixed(p),
            payload,
            inside_region: None,
        }
    }

    pub fn output(name: &str, p: SpacetimePoint, data: DataRule, deps: &[&str]) -> OutputRequirement {
        OutputRequirement {
            name: name.into(),
            point: PointExpr::fixed(p),
            data,
            deps: deps.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn task(
        dim: usize,
        inputs: Vec<InputEvent>,
        outputs: Vec<OutputRequirement>,
        predicate: SuccessPredicate,
    ) -> TaskSpec {
        TaskSpec {
            name: "t".into(),
            dim,
            params: BTreeMap::new(),
            inputs,
            outputs,
            predicate,
            regions: vec![],
            notes: String::new(),
        }
    }

    pub fn signalling(q1: SpacetimePoint) -> TaskSpec {
        let dim = q1.dim();
        let p1 = SpacetimePoint::new(0.0, vec![0.0; dim]).unwrap();
        task(
            dim,
            vec![input("I1", p1, bit())],
            vec![output("J1", q1, DataRule::Classical(Expr::var("I1")), &["I1"])],
            SuccessPredicate::ExactClassical,
        )
    }

    pub fn bell() -> TaskSpec {
        task(
            1,
            vec![
                input("I1", SpacetimePoint::new_1d(0.0, -5.0), bit()),
                input("I2", SpacetimePoint::new_1d(0.0, 5.0), bit()),
            ],
            vec![
                output("J1", SpacetimePoint::new_1d(0.5, -5.0), DataRule::Free, &["I1"]),
                output("J2", SpacetimePoint::new_1d(0.5, 5.0), DataRule::Free, &["I2"]),
            ],
            SuccessPredicate::ProbabilityBound {
                event: Expr::parse("xor(J1, J2) == I1 * I2").unwrap(),
                bound: 0.75,
                direction: BoundDirection::Above,
            },
        )
    }

    pub fn cloning() -> TaskSpec {
        task(
            1,
            vec![input("I1", SpacetimePoint::new_1d(0.0, 0.0), qubit())],
            vec![
                output("J1", SpacetimePoint::new_1d(5.0, -4.0), DataRule::Quantum("I1".into()), &["I1"]),
                output("J2", SpacetimePoint::new_1d(5.0, 4.0), DataRule::Quantum("I1".into()), &["I1"]),
            ],
            SuccessPredicate::ExactClassical,
        )
    }

    /// Call arrives at `(T - delta; x2)`, return at `(T; x2)`, `x2` on an
    /// `n`-point grid over `[-w, w]`.
    pub fn summoning(t: f64, delta: f64, w: f64, n: usize) -> TaskSpec {
        let mut spec = task(
            1,
            vec![
                input("I1", SpacetimePoint::new_1d(0.0, 0.0), qubit()),
                InputEvent {
                    name: "I2".into(),
                    point: PointExpr::parse("(T - delta; I2)", &|_| None).unwrap(),
                    payload: Payload::Classical(ClassicalSource::Distribution(Distribution::uniform_grid(-w, w, n))),
                    inside_region: None,
                },
            ],
            vec![OutputRequirement {
                name: "J1".into(),
                point: PointExpr::parse("(T; I2)", &|_| None).unwrap(),
                data: DataRule::Quantum("I1".into()),
                deps: vec!["I1".into(), "I2".into()],
            }],
            SuccessPredicate::ExactClassical,
        );
        spec.params.insert("T".into(), t);
        spec.params.insert("delta".into(), delta);
        spec
    }
}
