use std::collections::BTreeSet;

use super::EngineError;
use crate::tasks::{Expr, PointExpr, TaskSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum PairKind {
    /// `Σ_m |m m⟩ / √d`.
    MaxEntangled,
    /// Qubit singlet.
    Singlet,
}

/// Something placed with agents before any input arrives.
#[derive(Debug, Clone, PartialEq)]
pub enum Resource {
    Pair {
        a: String,
        b: String,
        dim: usize,
        kind: PairKind,
        holder_a: String,
        holder_b: String,
    },
    Qudit {
        name: String,
        dim: usize,
        basis: usize,
        holder: String,
    },
    /// A shared uniform random value in `0..values`, known to every holder.
    Tape {
        name: String,
        values: usize,
        holders: Vec<String>,
    },
}

/// Where an agent starts.
#[derive(Debug, Clone, PartialEq)]
pub enum StationSpec {
    At(PointExpr),
    /// Wherever this input arrives.
    AtInput(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Route {
    /// One straight segment.
    Direct,
    /// Delegated to the causal path finder.
    Auto,
    /// Straight segments through these points.
    Via(Vec<PointExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Computational,
    /// Qubit `X` eigenbasis.
    Hadamard,
    Equator(Expr),
    Meridian(Expr),
    /// Generalized Bell basis on two equal-dimension registers.
    Bell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Destination {
    pub agent: String,
    /// Station index; `None` means the first later station that can be reached.
    pub station: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputItem {
    Register(String),
    Value(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Let {
        var: String,
        width: Option<u32>,
        expr: Expr,
    },
    Measure {
        registers: Vec<String>,
        basis: Basis,
        out: String,
    },
    Apply {
        gate: String,
        args: Vec<Expr>,
        registers: Vec<String>,
    },
    /// Bell measurement; writes `out.shift` and `out.phase`.
    TeleportSend {
        source: String,
        local: String,
        out: String,
    },
    /// Reads `msg.shift` and `msg.phase`.
    TeleportReceive { target: String, msg: String },
    Send {
        items: Vec<String>,
        to: Destination,
        route: Route,
    },
    /// Classical values to every later station in the causal future.
    Broadcast { items: Vec<String> },
    Output(OutputItem),
    /// End the current station and travel to the next.
    Move { to: PointExpr, route: Route },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub guard: Option<Expr>,
    pub action: Action,
    /// Source line, for diagnostics; 0 when built in code.
    pub line: usize,
}

impl Instr {
    pub fn new(action: Action) -> Self {
        Self {
            guard: None,
            action,
            line: 0,
        }
    }

    pub fn when(guard: Expr, action: Action) -> Self {
        Self {
            guard: Some(guard),
            action,
            line: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub name: String,
    pub start: StationSpec,
    pub program: Vec<Instr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub name: String,
    pub resources: Vec<Resource>,
    pub agents: Vec<Agent>,
}

impl Strategy {
    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }

    /// Register names introduced by resources.
    pub fn resource_registers(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for r in &self.resources {
            match r {
                Resource::Pair { a, b, dim, .. } => {
                    out.push((a.clone(), *dim));
                    out.push((b.clone(), *dim));
                }
                Resource::Qudit { name, dim, .. } => out.push((name.clone(), *dim)),
                Resource::Tape { .. } => {}
            }
        }
        out
    }

    /// Every name a strategy can ever produce.
    pub(crate) fn produced_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in &self.resources {
            if let Resource::Tape { name, .. } = r {
                out.insert(name.clone());
            }
        }
        for a in &self.agents {
            for i in &a.program {
                match &i.action {
                    Action::Let { var, .. } => {
                        out.insert(var.clone());
                    }
                    Action::Measure { out: o, .. } => {
                        out.insert(o.clone());
                    }
                    Action::TeleportSend { out: o, .. } => {
                        out.insert(format!("{o}.shift"));
                        out.insert(format!("{o}.phase"));
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Static consistency against a task.
    pub fn check(&self, task: &TaskSpec) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Strategy(m));
        let mut agents = BTreeSet::new();
        for a in &self.agents {
            if !agents.insert(a.name.as_str()) {
                return bad(format!("agent `{}` declared twice", a.name));
            }
            if let StationSpec::AtInput(i) = &a.start {
                if task.input(i).is_none() {
                    return bad(format!("agent `{}` starts at unknown input `{i}`", a.name));
                }
            }
        }
        let mut regs = BTreeSet::new();
        for i in &task.inputs {
            regs.insert(i.name.clone());
        }
        for (r, dim) in self.resource_registers() {
            if dim < 2 {
                return bad(format!("register `{r}` has dimension {dim}"));
            }
            if !regs.insert(r.clone()) || task.params.contains_key(&r) {
                return bad(format!("register `{r}` clashes with another name"));
            }
        }
        let holder = |h: &str| -> Result<(), EngineError> {
            if agents.contains(h) {
                Ok(())
            } else {
                Err(EngineError::Strategy(format!("resource holder `{h}` is not an agent")))
            }
        };
        for r in &self.resources {
            match r {
                Resource::Pair {
                    holder_a,
                    holder_b,
                    kind,
                    dim,
                    ..
                } => {
                    holder(holder_a)?;
                    holder(holder_b)?;
                    if *kind == PairKind::Singlet && *dim != 2 {
                        return bad("a singlet pair must be two qubits".into());
                    }
                }
                Resource::Qudit { holder: h, basis, dim, name } => {
                    holder(h)?;
                    if basis >= dim {
                        return bad(format!("qudit `{name}` basis state {basis} out of range"));
                    }
                }
                Resource::Tape { holders, values, name } => {
                    for h in holders {
                        holder(h)?;
                    }
                    if *values == 0 {
                        return bad(format!("tape `{name}` has no values"));
                    }
                }
            }
        }
        for a in &self.agents {
            for i in &a.program {
                if let Action::Send { to, .. } = &i.action {
                    if !agents.contains(to.agent.as_str()) {
                        return bad(format!("agent `{}` sends to unknown agent `{}`", a.name, to.agent));
                    }
                }
            }
        }
        Ok(())
    }
}
