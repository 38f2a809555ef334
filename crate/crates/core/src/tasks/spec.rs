use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::{Expr, PointExpr};
use crate::geometry::Region;

/// Finite-support distribution over real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    support: Vec<(f64, f64)>,
}

impl Distribution {
    /// `(value, probability)` pairs, kept as given; see [`super::validate`].
    pub fn new(support: Vec<(f64, f64)>) -> Self {
        Self { support }
    }

    pub fn point(value: f64) -> Self {
        Self::new(vec![(value, 1.0)])
    }

    pub fn uniform(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let p = 1.0 / values.len() as f64;
        Self::new(values.into_iter().map(|v| (v, p)).collect())
    }

    /// `n` equally spaced values from `lo` to `hi` inclusive.
    pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Self {
        if n == 1 {
            return Self::point(0.5 * (lo + hi));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::uniform((0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }))
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    /// Bits needed to name one support element.
    pub fn width(&self) -> u32 {
        bits_for(self.support.len())
    }
}

/// `⌈log₂ n⌉`, at least 1.
pub fn bits_for(n: usize) -> u32 {
    if n <= 2 {
        1
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalSource {
    Distribution(Distribution),
    /// The same value as another classical input, delivered independently.
    CopyOf(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantumPrep {
    Haar,
    Basis(usize),
    /// Maximally entangled with an inaccessible reference register.
    EntangledWithReference { reference: String },
    /// Maximally entangled with another quantum input that names this one back.
    EntangledWith { partner: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSource {
    pub dim: usize,
    pub prep: QuantumPrep,
}

impl QuantumSource {
    /// Is the state unknown to Alice (not fixed by classical data)?
    pub fn is_unknown(&self) -> bool {
        !matches!(self.prep, QuantumPrep::Basis(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Classical(ClassicalSource),
    Quantum(QuantumSource),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputEvent {
    pub name: String,
    /// May read parameters and the input's own value, nothing else.
    pub point: PointExpr,
    pub payload: Payload,
    /// Input delivered inside an excluded region.
    pub inside_region: Option<String>,
}

impl InputEvent {
    pub fn is_quantum(&self) -> bool {
        matches!(self.payload, Payload::Quantum(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataRule {
    Classical(Expr),
    /// The state originally held by this quantum input.
    Quantum(String),
    /// Any value; constrained only through the predicate.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRequirement {
    pub name: String,
    pub point: PointExpr,
    pub data: DataRule,
    pub deps: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundDirection {
    Above,
    AtLeast,
    Below,
    AtMost,
}

impl BoundDirection {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            BoundDirection::Above => value > bound,
            BoundDirection::AtLeast => value >= bound,
            BoundDirection::Below => value < bound,
            BoundDirection::AtMost => value <= bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BoundDirection::Above => ">",
            BoundDirection::AtLeast => ">=",
            BoundDirection::Below => "<",
            BoundDirection::AtMost => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SuccessPredicate {
    ExactClassical,
    QuantumFidelity { threshold: f64 },
    ProbabilityBound {
        event: Expr,
        bound: f64,
        direction: BoundDirection,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    /// Spatial dimension, 1 or 3.
    pub dim: usize,
    /// Constants known in advance.
    pub params: BTreeMap<String, f64>,
    pub inputs: Vec<InputEvent>,
    pub outputs: Vec<OutputRequirement>,
    pub predicate: SuccessPredicate,
    pub regions: Vec<Region>,
    pub notes: String,
}

impl TaskSpec {
    pub fn input(&self, name: &str) -> Option<&InputEvent> {
        self.inputs.iter().find(|i| i.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&OutputRequirement> {
        self.outputs.iter().find(|o| o.name == name)
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiagnosticKind {
    DimensionMismatch,
    DistributionNotNormalized,
    BadDistribution,
    DanglingRegister,
    UndeclaredDependency,
    UnknownName,
    DuplicateName,
    NoOutputs,
    InvalidPredicate,
    PointRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn diag(kind: DiagnosticKind, message: String) -> Diagnostic {
    Diagnostic { kind, message }
}

/// Structural checks on a task. An empty result means valid.
pub fn validate(task: &TaskSpec) -> Vec<Diagnostic> {
    use DiagnosticKind::*;
    let mut out = Vec::new();
    if task.dim != 1 && task.dim != 3 {
        out.push(diag(
            DimensionMismatch,
            format!("task dimension must be 1 or 3, got {}", task.dim),
        ));
    }
    let mut names = BTreeSet::new();
    for n in task
        .params
        .keys()
        .chain(task.inputs.iter().map(|i| &i.name))
        .chain(task.outputs.iter().map(|o| &o.name))
    {
        if !names.insert(n.clone()) {
            out.push(diag(DuplicateName, format!("name `{n}` declared twice")));
        }
    }
    for r in &task.regions {
        if r.dim() != task.dim {
            out.push(diag(
                DimensionMismatch,
                format!("region `{}` has {} spatial axes, task has {}", r.name, r.dim(), task.dim),
            ));
        }
    }
    let params: BTreeSet<&str> = task.params.keys().map(String::as_str).collect();
    let check_point = |owner: &str, p: &PointExpr, out: &mut Vec<Diagnostic>| {
        if let Some(fixed) = p.as_fixed() {
            if fixed.dim() != task.dim {
                out.push(diag(
                    DimensionMismatch,
                    format!("point of `{owner}` has {} spatial axes, task has {}", fixed.dim(), task.dim),
                ));
            }
        }
    };

    for input in &task.inputs {
        check_point(&input.name, &input.point, &mut out);
        for v in input.point.free_vars() {
            if v != input.name && !params.contains(v.as_str()) {
                out.push(diag(
                    PointRule,
                    format!("input `{}` point may read only parameters and its own value, reads `{v}`", input.name),
                ));
            }
        }
        if let Some(r) = &input.inside_region {
            if task.region(r).is_none() {
                out.push(diag(UnknownName, format!("input `{}` names unknown region `{r}`", input.name)));
            }
        }
        match &input.payload {
            Payload::Classical(ClassicalSource::Distribution(d)) => {
                if d.support().is_empty() {
                    out.push(diag(BadDistribution, format!("input `{}` has an empty distribution", input.name)));
                } else if d.support().iter().any(|(v, p)| !v.is_finite() || !p.is_finite() || *p < 0.0) {
                    out.push(diag(
                        BadDistribution,
                        format!("input `{}` has a negative or non-finite entry", input.name),
                    ));
                } else if (d.total() - 1.0).abs() > 1e-12 {
                    out.push(diag(
                        DistributionNotNormalized,
                        format!("distribution not normalized: input `{}` sums to {}", input.name, d.total()),
                    ));
                }
            }
            Payload::Classical(ClassicalSource::CopyOf(src)) => match task.input(src) {
                Some(InputEvent {
                    payload: Payload::Classical(ClassicalSource::Distribution(_)),
                    ..
                }) => {}
                Some(_) => out.push(diag(
                    BadDistribution,
                    format!("input `{}` copies `{src}`, which is not a sampled classical input", input.name),
                )),
                None => out.push(diag(UnknownName, format!("input `{}` copies unknown input `{src}`", input.name))),
            },
            Payload::Quantum(q) => {
                if q.dim < 2 {
                    out.push(diag(DanglingRegister, format!("input `{}` has dimension {}", input.name, q.dim)));
                }
                if !input.point.free_vars().is_empty() {
                    out.push(diag(PointRule, format!("quantum input `{}` needs a fixed point", input.name)));
                }
                match &q.prep {
                    QuantumPrep::Basis(k) if *k >= q.dim => out.push(diag(
                        DanglingRegister,
                        format!("input `{}` basis state {k} out of range", input.name),
                    )),
                    QuantumPrep::EntangledWithReference { reference } if names.contains(reference) => {
                        out.push(diag(
                            DuplicateName,
                            format!("reference register `{reference}` clashes with a declared name"),
                        ))
                    }
                    QuantumPrep::EntangledWith { partner } => match task.input(partner) {
                        Some(InputEvent {
                            payload: Payload::Quantum(pq),
                            ..
                        }) => {
                            let back = matches!(&pq.prep, QuantumPrep::EntangledWith { partner: p } if *p == input.name);
                            if !back || pq.dim != q.dim {
                                out.push(diag(
                                    DanglingRegister,
                                    format!("entangled inputs `{}` and `{partner}` must name each other with equal dimensions", input.name),
                                ));
                            }
                        }
                        _ => out.push(diag(
                            DanglingRegister,
                            format!("input `{}` is entangled with `{partner}`, which is not a quantum input", input.name),
                        )),
                    },
                    _ => {}
                }
            }
        }
    }

    if task.outputs.is_empty() {
        out.push(diag(NoOutputs, "task declares no outputs".into()));
    }
    for o in &task.outputs {
        check_point(&o.name, &o.point, &mut out);
        for d in &o.deps {
            if task.input(d).is_none() {
                out.push(diag(UnknownName, format!("output `{}` depends on unknown input `{d}`", o.name)));
            }
        }
        let declared: BTreeSet<&str> = o.deps.iter().map(String::as_str).collect();
        let mut reads: BTreeSet<String> = o.point.free_vars();
        match &o.data {
            DataRule::Classical(e) => reads.extend(e.free_vars()),
            DataRule::Quantum(r) => {
                reads.insert(r.clone());
                if !task.input(r).is_some_and(InputEvent::is_quantum) {
                    out.push(diag(
                        DanglingRegister,
                        format!("output `{}` requires register `{r}`, which is not a quantum input", o.name),
                    ));
                }
            }
            DataRule::Free => {}
        }
        for r in reads {
            if !declared.contains(r.as_str()) && !params.contains(r.as_str()) {
                out.push(diag(
                    UndeclaredDependency,
                    format!("undeclared dependency: output `{}` reads `{r}`", o.name),
                ));
            }
        }
    }

    match &task.predicate {
        SuccessPredicate::ExactClassical => {}
        SuccessPredicate::QuantumFidelity { threshold } => {
            if !(*threshold > 0.0 && *threshold <= 1.0) {
                out.push(diag(InvalidPredicate, format!("fidelity threshold {threshold} outside (0, 1]")));
            }
        }
        SuccessPredicate::ProbabilityBound { event, bound, .. } => {
            if !(0.0..=1.0).contains(bound) {
                out.push(diag(InvalidPredicate, format!("probability bound {bound} outside [0, 1]")));
            }
            for v in event.free_vars() {
                if !names.contains(&v) {
                    out.push(diag(UnknownName, format!("predicate reads unknown name `{v}`")));
                }
            }
        }
    }
    out
}
