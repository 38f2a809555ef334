use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::EvalError;
use super::spec::{ClassicalSource, Payload, QuantumPrep, TaskSpec};
use super::TaskError;
use crate::geometry::SpacetimePoint;
use crate::quantum::{QuantumState, RegisterSystem, StateSpec};

/// Upper bound on the number of enumerated classical assignments.
pub const MAX_ASSIGNMENTS: usize = 1_000_000;

/// Concrete input values for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct InputAssignment {
    /// Classical input values by input name.
    pub values: BTreeMap<String, f64>,
    /// Where each input arrives.
    pub points: BTreeMap<String, SpacetimePoint>,
    /// Joint state of all quantum inputs and their reference registers.
    pub quantum: Option<QuantumState>,
    /// Registers Alice can never touch.
    pub references: Vec<String>,
    /// Probability of this assignment (1 for a sample).
    pub weight: f64,
}

impl InputAssignment {
    /// Lookup over parameters and classical values.
    pub fn lookup<'a>(
        &'a self,
        task: &'a TaskSpec,
    ) -> impl Fn(&str) -> Result<f64, EvalError> + 'a {
        move |n: &str| {
            self.values
                .get(n)
                .or_else(|| task.params.get(n))
                .copied()
                .ok_or_else(|| EvalError::Unknown(n.to_string()))
        }
    }

    /// Original reduced state of a quantum input together with its reference.
    pub fn required_state(&self, task: &TaskSpec, input: &str) -> Result<QuantumState, TaskError> {
        let q = self
            .quantum
            .as_ref()
            .ok_or_else(|| TaskError::Missing(format!("quantum input `{input}`")))?;
        let mut keep = vec![input];
        if let Some(r) = reference_of(task, input) {
            keep.push(r);
        }
        Ok(q.partial_trace(&keep)?)
    }
}

pub(crate) fn reference_of<'a>(task: &'a TaskSpec, input: &str) -> Option<&'a str> {
    match task.input(input).map(|i| &i.payload) {
        Some(Payload::Quantum(q)) => match &q.prep {
            QuantumPrep::EntangledWithReference { reference } => Some(reference),
            _ => None,
        },
        _ => None,
    }
}

fn param_lookup(task: &TaskSpec) -> impl Fn(&str) -> Result<f64, EvalError> + '_ {
    move |n: &str| {
        task.params
            .get(n)
            .copied()
            .ok_or_else(|| EvalError::Unknown(n.to_string()))
    }
}

/// Every classical assignment with its probability, in a fixed order.
pub fn classical_assignments(task: &TaskSpec) -> Result<Vec<(f64, BTreeMap<String, f64>)>, TaskError> {
    let mut acc: Vec<(f64, BTreeMap<String, f64>)> = vec![(1.0, BTreeMap::new())];
    for input in &task.inputs {
        if let Payload::Classical(ClassicalSource::Distribution(d)) = &input.payload {
            let n = acc.len().saturating_mul(d.support().len());
            if n > MAX_ASSIGNMENTS {
                return Err(TaskError::TooManyAssignments(n));
            }
            let mut next = Vec::with_capacity(n);
            for (w, vals) in &acc {
                for &(v, p) in d.support() {
                    if p == 0.0 {
                        continue;
                    }
                    let mut vals = vals.clone();
                    vals.insert(input.name.clone(), v);
                    next.push((w * p, vals));
                }
            }
            acc = next;
        }
    }
    for (_, vals) in acc.iter_mut() {
        fill_copies(task, vals)?;
    }
    Ok(acc)
}

fn fill_copies(task: &TaskSpec, vals: &mut BTreeMap<String, f64>) -> Result<(), TaskError> {
    for input in &task.inputs {
        if let Payload::Classical(ClassicalSource::CopyOf(src)) = &input.payload {
            let v = *vals
                .get(src)
                .ok_or_else(|| TaskError::Missing(format!("input `{src}` copied by `{}`", input.name)))?;
            vals.insert(input.name.clone(), v);
        }
    }
    Ok(())
}

/// Prepare the joint quantum input state. Haar draws consume `rng`.
pub fn prepare_quantum<R: Rng + ?Sized>(
    task: &TaskSpec,
    rng: &mut R,
) -> Result<(Option<QuantumState>, Vec<String>), TaskError> {
    let mut state: Option<QuantumState> = None;
    let mut refs = Vec::new();
    let mut done: Vec<&str> = Vec::new();
    for input in &task.inputs {
        let Payload::Quantum(q) = &input.payload else {
            continue;
        };
        if done.contains(&input.name.as_str()) {
            continue;
        }
        let name = input.name.as_str();
        let part = match &q.prep {
            QuantumPrep::Haar => QuantumState::make(RegisterSystem::single(name, q.dim)?, &StateSpec::Haar, rng)?,
            QuantumPrep::Basis(k) => QuantumState::make(
                RegisterSystem::single(name, q.dim)?,
                &StateSpec::Basis(vec![*k]),
                rng,
            )?,
            QuantumPrep::EntangledWithReference { reference } => {
                refs.push(reference.clone());
                QuantumState::make(
                    RegisterSystem::new([(name, q.dim), (reference.as_str(), q.dim)])?,
                    &StateSpec::MaxEntangled {
                        a: name.into(),
                        b: reference.clone(),
                    },
                    rng,
                )?
            }
            QuantumPrep::EntangledWith { partner } => {
                done.push(partner);
                QuantumState::make(
                    RegisterSystem::new([(name, q.dim), (partner.as_str(), q.dim)])?,
                    &StateSpec::MaxEntangled {
                        a: name.into(),
                        b: partner.clone(),
                    },
                    rng,
                )?
            }
        };
        done.push(name);
        state = Some(match state {
            None => part,
            Some(s) => s.tensor(&part)?,
        });
    }
    Ok((state, refs))
}

fn input_points(
    task: &TaskSpec,
    values: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, SpacetimePoint>, TaskError> {
    let params = param_lookup(task);
    let mut points = BTreeMap::new();
    for input in &task.inputs {
        let own = values.get(&input.name).copied();
        let lookup = |n: &str| -> Result<f64, EvalError> {
            if n == input.name {
                own.ok_or_else(|| EvalError::Unknown(n.to_string()))
            } else {
                params(n)
            }
        };
        let p = input.point.eval(&lookup)?;
        points.insert(input.name.clone(), p);
    }
    Ok(points)
}

/// Every assignment with its weight. Quantum inputs are prepared once from
/// `rng` and shared by all assignments.
pub fn enumerate_assignments<R: Rng + ?Sized>(
    task: &TaskSpec,
    rng: &mut R,
) -> Result<Vec<InputAssignment>, TaskError> {
    let (quantum, references) = prepare_quantum(task, rng)?;
    classical_assignments(task)?
        .into_iter()
        .map(|(weight, values)| {
            Ok(InputAssignment {
                points: input_points(task, &values)?,
                values,
                quantum: quantum.clone(),
                references: references.clone(),
                weight,
            })
        })
        .collect()
}

/// Draw one assignment from `rng`: classical inputs in declaration order,
/// then quantum preparations.
pub fn sample_inputs_with<R: Rng + ?Sized>(
    task: &TaskSpec,
    rng: &mut R,
) -> Result<InputAssignment, TaskError> {
    let mut values = BTreeMap::new();
    for input in &task.inputs {
        if let Payload::Classical(ClassicalSource::Distribution(d)) = &input.payload {
            let weights: Vec<f64> = d.support().iter().map(|(_, p)| *p).collect();
            let idx = WeightedIndex::new(&weights)
                .map_err(|e| TaskError::Missing(format!("distribution of `{}`: {e}", input.name)))?;
            values.insert(input.name.clone(), d.support()[idx.sample(rng)].0);
        }
    }
    fill_copies(task, &mut values)?;
    let (quantum, references) = prepare_quantum(task, rng)?;
    Ok(InputAssignment {
        points: input_points(task, &values)?,
        values,
        quantum,
        references,
        weight: 1.0,
    })
}

/// Deterministic per seed.
pub fn sample_inputs(task: &TaskSpec, seed: u64) -> Result<InputAssignment, TaskError> {
    sample_inputs_with(task, &mut ChaCha8Rng::seed_from_u64(seed))
}
