use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::strategy::{Action, Basis, OutputItem, PairKind, Resource, Route, StationSpec, Strategy};
use super::trace::{EventKind, TraceEvent};
use super::{EngineConfig, EngineError};
use crate::geometry::{find_causal_path, in_causal_future, Budget, PathOutcome, Region, SpacetimePoint};
use crate::quantum::{
    bell_basis, gates, teleport_branches, teleport_receive, Measurement, QuantumState, RegisterSystem, StateSpec,
    TeleportMessage,
};
use crate::tasks::{
    bits_for, ClassicalSource, EvalError, Expr, InputAssignment, Payload, PointExpr, ProducedData, ProducedOutput,
    TaskSpec, POINT_TOL,
};

/// Traffic that crossed one penetrable region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub region: String,
    pub bits: u64,
    pub qubits: u64,
    pub messages: u64,
}

pub(crate) struct Ctx<'a> {
    pub task: &'a TaskSpec,
    pub strategy: &'a Strategy,
    pub assignment: &'a InputAssignment,
    pub cfg: &'a EngineConfig,
    /// Names some event could produce; reading one early is a causality violation.
    known: BTreeSet<String>,
    /// Every region, made impenetrable: agents may not pass through any of them.
    walls: Vec<Region>,
}

impl<'a> Ctx<'a> {
    pub fn new(
        task: &'a TaskSpec,
        strategy: &'a Strategy,
        assignment: &'a InputAssignment,
        cfg: &'a EngineConfig,
    ) -> Self {
        let mut known = strategy.produced_names();
        known.extend(task.inputs.iter().map(|i| i.name.clone()));
        known.extend(strategy.resource_registers().into_iter().map(|(r, _)| r));
        known.extend(assignment.references.iter().cloned());
        let walls = task
            .regions
            .iter()
            .map(|r| Region {
                penetrable: false,
                classical_bits: Budget::Limited(0),
                qubits: Budget::Limited(0),
                ..r.clone()
            })
            .collect();
        Self {
            task,
            strategy,
            assignment,
            cfg,
            known,
            walls,
        }
    }
}

#[derive(Debug, Clone)]
struct Knowledge {
    value: f64,
    width: u32,
    origin: usize,
}

#[derive(Debug, Clone)]
struct AgentRt {
    station: usize,
    point: SpacetimePoint,
    active: bool,
    pc: usize,
    memory: BTreeMap<String, Knowledge>,
    registers: BTreeSet<String>,
    casts_seen: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct Mail {
    event: usize,
    from: SpacetimePoint,
    sender: usize,
    to: usize,
    station: Option<usize>,
    route: ResolvedRoute,
    vars: Vec<(String, Knowledge)>,
    registers: Vec<(String, usize)>,
    open: bool,
}

#[derive(Debug, Clone)]
enum ResolvedRoute {
    Direct,
    Auto,
    Via(Vec<SpacetimePoint>),
}

#[derive(Debug, Clone)]
struct Cast {
    event: usize,
    from: SpacetimePoint,
    vars: Vec<(String, Knowledge)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Sim {
    agents: Vec<AgentRt>,
    queue: Vec<(f64, u64, usize)>,
    seq: u64,
    running: Option<usize>,
    pub state: Option<QuantumState>,
    frozen: BTreeSet<String>,
    delivered_quantum: BTreeSet<String>,
    input_events: BTreeMap<String, usize>,
    reg_origin: BTreeMap<String, usize>,
    mail: Vec<Mail>,
    casts: Vec<Cast>,
    pub outputs: Vec<ProducedOutput>,
    pub trace: Vec<TraceEvent>,
    pub ledger: BTreeMap<String, LedgerEntry>,
    pub weight: f64,
}

pub(crate) enum Step {
    Continue,
    Done,
    Fork(Vec<Sim>),
}

type Outcome = (f64, QuantumState, Vec<(String, f64, u32)>, String);

fn input_width(task: &TaskSpec, name: &str) -> u32 {
    match task.input(name).map(|i| &i.payload) {
        Some(Payload::Classical(ClassicalSource::Distribution(d))) => d.width(),
        Some(Payload::Classical(ClassicalSource::CopyOf(src))) => input_width(task, src),
        _ => 64,
    }
}

fn params_only(task: &TaskSpec) -> impl Fn(&str) -> Result<f64, EvalError> + '_ {
    move |n: &str| {
        task.params.get(n).copied().ok_or_else(|| EvalError::Unavailable {
            name: n.to_string(),
            reason: "not known before the task starts".into(),
        })
    }
}

impl Sim {
    /// Initial simulations; exact mode forks on every shared random tape.
    pub fn start(ctx: &Ctx, mut rng: Option<&mut ChaCha8Rng>) -> Result<Vec<Sim>, EngineError> {
        let task = ctx.task;
        let mut sim = Sim {
            agents: Vec::new(),
            queue: Vec::new(),
            seq: 0,
            running: None,
            state: ctx.assignment.quantum.clone(),
            frozen: BTreeSet::new(),
            delivered_quantum: BTreeSet::new(),
            input_events: BTreeMap::new(),
            reg_origin: BTreeMap::new(),
            mail: Vec::new(),
            casts: Vec::new(),
            outputs: Vec::new(),
            trace: Vec::new(),
            ledger: BTreeMap::new(),
            weight: 1.0,
        };
        for input in &task.inputs {
            let p = ctx
                .assignment
                .points
                .get(&input.name)
                .cloned()
                .ok_or_else(|| EngineError::Task(format!("no point for input `{}`", input.name)))?;
            let id = sim.event(EventKind::Input, None, p, input.name.clone(), vec![]);
            sim.input_events.insert(input.name.clone(), id);
        }
        let params = params_only(task);
        for agent in &ctx.strategy.agents {
            let point = match &agent.start {
                StationSpec::At(pe) => pe.eval(&params).map_err(|e| {
                    EngineError::Strategy(format!("start of agent `{}` must be fixed in advance: {e}", agent.name))
                })?,
                StationSpec::AtInput(i) => ctx.assignment.points[i].clone(),
            };
            sim.check_station(ctx, &agent.name, &point)?;
            sim.agents.push(AgentRt {
                station: 0,
                point,
                active: false,
                pc: 0,
                memory: BTreeMap::new(),
                registers: BTreeSet::new(),
                casts_seen: BTreeSet::new(),
            });
        }
        let mut tapes = Vec::new();
        for r in &ctx.strategy.resources {
            match r {
                Resource::Pair {
                    a,
                    b,
                    dim,
                    kind,
                    holder_a,
                    holder_b,
                } => {
                    let sys = RegisterSystem::new([(a.as_str(), *dim), (b.as_str(), *dim)])?;
                    let spec = match kind {
                        PairKind::MaxEntangled => StateSpec::MaxEntangled { a: a.clone(), b: b.clone() },
                        PairKind::Singlet => StateSpec::Singlet { a: a.clone(), b: b.clone() },
                    };
                    let part = QuantumState::make(sys, &spec, &mut ChaCha8Rng::seed_from_u64(0))?;
                    sim.add_state(part)?;
                    sim.place(ctx, holder_a, a)?;
                    sim.place(ctx, holder_b, b)?;
                }
                Resource::Qudit {
                    name,
                    dim,
                    basis,
                    holder,
                } => {
                    let sys = RegisterSystem::single(name.as_str(), *dim)?;
                    let part = QuantumState::make(sys, &StateSpec::Basis(vec![*basis]), &mut ChaCha8Rng::seed_from_u64(0))?;
                    sim.add_state(part)?;
                    sim.place(ctx, holder, name)?;
                }
                Resource::Tape { name, values, holders } => tapes.push((name, *values, holders)),
            }
        }
        for (a, agent) in sim.agents.iter().enumerate() {
            sim.queue.push((agent.point.t(), a as u64, a));
        }
        sim.seq = sim.agents.len() as u64;

        let mut sims = vec![sim];
        for (name, values, holders) in tapes {
            let width = bits_for(values);
            let choices: Vec<usize> = match rng.as_deref_mut() {
                Some(r) => vec![r.random_range(0..values)],
                None => (0..values).collect(),
            };
            let share = if rng.is_some() { 1.0 } else { 1.0 / values as f64 };
            let mut next = Vec::new();
            for s in &sims {
                for &v in &choices {
                    let mut s = s.clone();
                    s.weight *= share;
                    for h in holders {
                        let a = ctx.strategy.agent_index(h).expect("checked holder");
                        let p = s.placement(ctx, a)?;
                        let id = s.event(EventKind::Place, Some(h.clone()), p, format!("{name} = {v}"), vec![]);
                        s.agents[a].memory.insert(
                            name.clone(),
                            Knowledge {
                                value: v as f64,
                                width,
                                origin: id,
                            },
                        );
                    }
                    next.push(s);
                }
            }
            sims = next;
        }
        Ok(sims)
    }

    fn add_state(&mut self, part: QuantumState) -> Result<(), EngineError> {
        self.state = Some(match self.state.take() {
            None => part,
            Some(s) => s.tensor(&part)?,
        });
        Ok(())
    }

    fn place(&mut self, ctx: &Ctx, holder: &str, reg: &str) -> Result<(), EngineError> {
        let a = ctx.strategy.agent_index(holder).expect("checked holder");
        if let StationSpec::AtInput(i) = &ctx.strategy.agents[a].start {
            let input = ctx.task.input(i).expect("checked input");
            if input.point.free_vars().iter().any(|v| !ctx.task.params.contains_key(v)) {
                return Err(EngineError::Strategy(format!(
                    "resource `{reg}` is placed with `{holder}`, whose location depends on input `{i}`"
                )));
            }
        }
        let p = self.placement(ctx, a)?;
        let id = self.event(EventKind::Place, Some(holder.to_string()), p, reg.to_string(), vec![]);
        self.agents[a].registers.insert(reg.to_string());
        self.reg_origin.insert(reg.to_string(), id);
        Ok(())
    }

    /// Resources are handed out no later than the earliest input, at the
    /// holder's starting position, and carried from there at rest.
    fn placement(&self, ctx: &Ctx, a: usize) -> Result<SpacetimePoint, EngineError> {
        let start = &self.agents[a].point;
        let first = ctx
            .assignment
            .points
            .values()
            .map(|p| p.t())
            .fold(start.t(), f64::min);
        let p = SpacetimePoint::new(first, start.x().to_vec())?;
        let name = &ctx.strategy.agents[a].name;
        self.check_station(ctx, name, &p)?;
        if let Some(r) = ctx.walls.iter().find(|r| r.segment_meets_interior(&p, start)) {
            return Err(EngineError::Region(format!(
                "resources for `{name}` placed at {p} would pass through region `{}`",
                r.name
            )));
        }
        Ok(p)
    }

    fn event(
        &mut self,
        kind: EventKind,
        agent: Option<String>,
        point: SpacetimePoint,
        detail: String,
        reads: Vec<usize>,
    ) -> usize {
        let id = self.trace.len();
        let mut reads = reads;
        reads.sort_unstable();
        reads.dedup();
        self.trace.push(TraceEvent {
            id,
            kind,
            agent,
            point,
            detail,
            reads,
        });
        id
    }

    fn check_station(&self, ctx: &Ctx, agent: &str, p: &SpacetimePoint) -> Result<(), EngineError> {
        if p.dim() != ctx.task.dim {
            return Err(EngineError::Strategy(format!(
                "agent `{agent}` station {p} has {} spatial dimensions, task has {}",
                p.dim(),
                ctx.task.dim
            )));
        }
        if let Some(r) = ctx.task.regions.iter().find(|r| r.contains_interior(p)) {
            return Err(EngineError::Region(format!(
                "agent `{agent}` would be at {p}, inside region `{}`",
                r.name
            )));
        }
        Ok(())
    }

    /// Advance by one instruction or one activation.
    pub fn step(&mut self, ctx: &Ctx, rng: Option<&mut ChaCha8Rng>) -> Result<Step, EngineError> {
        if let Some(a) = self.running {
            return self.exec(ctx, a, rng);
        }
        let next = self
            .queue
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
            .map(|(i, _)| i);
        let Some(pos) = next else {
            if let Some(m) = self.mail.iter().find(|m| m.open && m.station.is_some()) {
                return Err(EngineError::Causality(format!(
                    "message from `{}` at {} to `{}` station {} was never delivered",
                    ctx.strategy.agents[m.sender].name,
                    m.from,
                    ctx.strategy.agents[m.to].name,
                    m.station.unwrap_or(0)
                )));
            }
            return Ok(Step::Done);
        };
        let (_, _, a) = self.queue.remove(pos);
        self.activate(ctx, a)?;
        self.running = Some(a);
        Ok(Step::Continue)
    }

    fn activate(&mut self, ctx: &Ctx, a: usize) -> Result<(), EngineError> {
        let name = ctx.strategy.agents[a].name.clone();
        let point = self.agents[a].point.clone();
        self.agents[a].active = true;
        let station = self.agents[a].station;
        self.event(EventKind::Arrive, Some(name.clone()), point.clone(), format!("station {station}"), vec![]);

        for input in &ctx.task.inputs {
            if input.inside_region.is_some() || !ctx.assignment.points[&input.name].approx_eq(&point, POINT_TOL) {
                continue;
            }
            let origin = self.input_events[&input.name];
            if input.is_quantum() {
                if self.delivered_quantum.insert(input.name.clone()) {
                    self.agents[a].registers.insert(input.name.clone());
                    self.reg_origin.insert(input.name.clone(), origin);
                }
            } else {
                let value = ctx.assignment.values[&input.name];
                self.agents[a].memory.insert(
                    input.name.clone(),
                    Knowledge {
                        value,
                        width: input_width(ctx.task, &input.name),
                        origin,
                    },
                );
            }
        }

        for i in 0..self.mail.len() {
            let m = &self.mail[i];
            if !m.open || m.to != a || m.station.is_some_and(|s| s != station) {
                continue;
            }
            match self.route_path(ctx, &m.from, &m.route, &point)? {
                Some(path) => self.deliver(ctx, a, i, &path)?,
                None if m.station.is_some() => {
                    return Err(EngineError::Causality(format!(
                        "message from `{}` at {} cannot reach `{name}` at {point}",
                        ctx.strategy.agents[m.sender].name, m.from
                    )))
                }
                None => {}
            }
        }

        for c in 0..self.casts.len() {
            if self.agents[a].casts_seen.contains(&c) {
                continue;
            }
            let from = self.casts[c].from.clone();
            if let Some(path) = self.route_path(ctx, &from, &ResolvedRoute::Direct, &point)? {
                self.agents[a].casts_seen.insert(c);
                let vars = self.casts[c].vars.clone();
                self.meter(ctx, &path, &vars, &[])?;
                let id = self.event(
                    EventKind::Receive,
                    Some(name.clone()),
                    point.clone(),
                    format!("broadcast {}", names(&vars)),
                    vec![self.casts[c].event],
                );
                for (n, k) in vars {
                    self.agents[a].memory.insert(n, Knowledge { origin: id, ..k });
                }
            }
        }
        Ok(())
    }

    /// A valid signal path from `from` to `to`, or `None`.
    fn route_path(
        &self,
        ctx: &Ctx,
        from: &SpacetimePoint,
        route: &ResolvedRoute,
        to: &SpacetimePoint,
    ) -> Result<Option<Vec<SpacetimePoint>>, EngineError> {
        let path = match route {
            ResolvedRoute::Auto => {
                return Ok(match find_causal_path(from, to, &ctx.task.regions, &ctx.cfg.routing)? {
                    PathOutcome::Found(p) => Some(p),
                    _ => None,
                })
            }
            ResolvedRoute::Direct => vec![from.clone(), to.clone()],
            ResolvedRoute::Via(w) => {
                let mut p = vec![from.clone()];
                p.extend(w.iter().cloned());
                p.push(to.clone());
                p
            }
        };
        for w in path.windows(2) {
            if !in_causal_future(&w[0], &w[1])? {
                return Ok(None);
            }
            if ctx
                .task
                .regions
                .iter()
                .any(|r| !r.penetrable && r.segment_meets_interior(&w[0], &w[1]))
            {
                return Ok(None);
            }
        }
        Ok(Some(path))
    }

    fn deliver(&mut self, ctx: &Ctx, a: usize, i: usize, path: &[SpacetimePoint]) -> Result<(), EngineError> {
        let m = self.mail[i].clone();
        self.mail[i].open = false;
        self.meter(ctx, path, &m.vars, &m.registers)?;
        let mut items: Vec<String> = m.vars.iter().map(|(n, _)| n.clone()).collect();
        items.extend(m.registers.iter().map(|(r, _)| r.clone()));
        let point = self.agents[a].point.clone();
        let id = self.event(
            EventKind::Receive,
            Some(ctx.strategy.agents[a].name.clone()),
            point,
            format!("from {}: {}", ctx.strategy.agents[m.sender].name, items.join(", ")),
            vec![m.event],
        );
        for (n, k) in m.vars {
            self.agents[a].memory.insert(n, Knowledge { origin: id, ..k });
        }
        for (r, _) in m.registers {
            self.agents[a].registers.insert(r.clone());
            self.reg_origin.insert(r, id);
        }
        Ok(())
    }

    fn meter(
        &mut self,
        ctx: &Ctx,
        path: &[SpacetimePoint],
        vars: &[(String, Knowledge)],
        registers: &[(String, usize)],
    ) -> Result<(), EngineError> {
        let bits: u64 = vars.iter().map(|(_, k)| k.width as u64).sum();
        let qubits: u64 = registers.iter().map(|(_, d)| bits_for(*d) as u64).sum();
        for r in ctx.task.regions.iter().filter(|r| r.penetrable) {
            if !r.path_crosses(path) {
                continue;
            }
            let e = self.ledger.entry(r.name.clone()).or_insert_with(|| LedgerEntry {
                region: r.name.clone(),
                bits: 0,
                qubits: 0,
                messages: 0,
            });
            e.bits += bits;
            e.qubits += qubits;
            e.messages += 1;
            if ctx.cfg.enforce_budgets && (!r.classical_bits.allows(e.bits) || !r.qubits.allows(e.qubits)) {
                return Err(EngineError::Budget(format!(
                    "region `{}` carried {} bits and {} qubits",
                    r.name, e.bits, e.qubits
                )));
            }
        }
        Ok(())
    }

    fn here(&self, ctx: &Ctx, a: usize) -> String {
        format!("agent `{}` at {}", ctx.strategy.agents[a].name, self.agents[a].point)
    }

    fn unavailable(&self, ctx: &Ctx, a: usize, name: &str) -> EngineError {
        if ctx.known.contains(name) {
            EngineError::Causality(format!("`{name}` is not available to {}", self.here(ctx, a)))
        } else {
            EngineError::Strategy(format!("unknown name `{name}` used by {}", self.here(ctx, a)))
        }
    }

    /// Evaluate with the agent's knowledge, recording which events were read.
    fn eval(&self, ctx: &Ctx, a: usize, e: &Expr, reads: &mut Vec<usize>) -> Result<f64, EngineError> {
        let seen = RefCell::new(Vec::new());
        let mem = &self.agents[a].memory;
        let lookup = |n: &str| -> Result<f64, EvalError> {
            if let Some(k) = mem.get(n) {
                seen.borrow_mut().push(k.origin);
                Ok(k.value)
            } else if let Some(v) = ctx.task.params.get(n) {
                Ok(*v)
            } else {
                Err(EvalError::Unavailable {
                    name: n.to_string(),
                    reason: String::new(),
                })
            }
        };
        let v = e.eval(&lookup).map_err(|err| self.eval_error(ctx, a, err))?;
        reads.extend(seen.into_inner());
        Ok(v)
    }

    fn eval_point(
        &self,
        ctx: &Ctx,
        a: usize,
        e: &PointExpr,
        reads: &mut Vec<usize>,
    ) -> Result<SpacetimePoint, EngineError> {
        let seen = RefCell::new(Vec::new());
        let mem = &self.agents[a].memory;
        let lookup = |n: &str| -> Result<f64, EvalError> {
            if let Some(k) = mem.get(n) {
                seen.borrow_mut().push(k.origin);
                Ok(k.value)
            } else if let Some(v) = ctx.task.params.get(n) {
                Ok(*v)
            } else {
                Err(EvalError::Unavailable {
                    name: n.to_string(),
                    reason: String::new(),
                })
            }
        };
        let p = e.eval(&lookup).map_err(|err| self.eval_error(ctx, a, err))?;
        reads.extend(seen.into_inner());
        Ok(p)
    }

    fn eval_error(&self, ctx: &Ctx, a: usize, err: EvalError) -> EngineError {
        match err {
            EvalError::Unavailable { name, .. } | EvalError::Unknown(name) => self.unavailable(ctx, a, &name),
            other => EngineError::Strategy(format!("{other} ({})", self.here(ctx, a))),
        }
    }

    fn hold(&self, ctx: &Ctx, a: usize, reg: &str) -> Result<usize, EngineError> {
        if self.frozen.contains(reg) {
            return Err(EngineError::Strategy(format!(
                "register `{reg}` was already output ({})",
                self.here(ctx, a)
            )));
        }
        if !self.agents[a].registers.contains(reg) {
            return Err(self.unavailable(ctx, a, reg));
        }
        Ok(self.reg_origin[reg])
    }

    fn state(&self) -> Result<&QuantumState, EngineError> {
        self.state
            .as_ref()
            .ok_or_else(|| EngineError::Quantum("no quantum state".into()))
    }

    fn exec(&mut self, ctx: &Ctx, a: usize, rng: Option<&mut ChaCha8Rng>) -> Result<Step, EngineError> {
        let agent = &ctx.strategy.agents[a];
        let pc = self.agents[a].pc;
        let Some(instr) = agent.program.get(pc) else {
            self.running = None;
            return Ok(Step::Continue);
        };
        let name = agent.name.clone();
        let point = self.agents[a].point.clone();
        let mut reads = Vec::new();
        if let Some(g) = &instr.guard {
            if self.eval(ctx, a, g, &mut reads)? == 0.0 {
                self.agents[a].pc += 1;
                return Ok(Step::Continue);
            }
        }
        let line = |e: EngineError| -> EngineError {
            if instr.line == 0 {
                return e;
            }
            match e {
                EngineError::Strategy(m) => EngineError::Strategy(format!("line {}: {m}", instr.line)),
                other => other,
            }
        };
        match &instr.action {
            Action::Let { var, width, expr } => {
                let v = self.eval(ctx, a, expr, &mut reads)?;
                let width = width.unwrap_or(64);
                if width < 64 && (v.fract() != 0.0 || v < 0.0 || v >= (1u64 << width) as f64) {
                    return Err(line(EngineError::Strategy(format!(
                        "`{var}` = {v} does not fit in {width} bits"
                    ))));
                }
                let id = self.event(EventKind::Let, Some(name), point, format!("{var} = {v}"), reads);
                self.agents[a].memory.insert(
                    var.clone(),
                    Knowledge {
                        value: v,
                        width,
                        origin: id,
                    },
                );
            }
            Action::Apply { gate, args, registers } => {
                let mut vals = Vec::with_capacity(args.len());
                for e in args {
                    vals.push(self.eval(ctx, a, e, &mut reads)?);
                }
                for r in registers {
                    reads.push(self.hold(ctx, a, r)?);
                }
                let regs: Vec<&str> = registers.iter().map(String::as_str).collect();
                let first = regs
                    .first()
                    .ok_or_else(|| line(EngineError::Strategy(format!("gate `{gate}` needs a register"))))?;
                let state = self.state()?;
                let u = gates::by_name(gate, &vals, state.system().dim_of(first)?).map_err(|e| line(e.into()))?;
                let next = state.apply_unitary(&regs, &u)?;
                self.state = Some(next);
                let id = self.event(
                    EventKind::Apply,
                    Some(name),
                    point,
                    format!("{gate} {}", registers.join(" ")),
                    reads,
                );
                for r in registers {
                    self.reg_origin.insert(r.clone(), id);
                }
            }
            Action::Measure { registers, basis, out } => {
                for r in registers {
                    reads.push(self.hold(ctx, a, r)?);
                }
                let regs: Vec<&str> = registers.iter().map(String::as_str).collect();
                let m = match basis {
                    Basis::Computational => {
                        let mut d = 1;
                        for r in &regs {
                            d *= self.state()?.system().dim_of(r)?;
                        }
                        Measurement::computational(d)
                    }
                    Basis::Hadamard => Measurement::meridian(std::f64::consts::FRAC_PI_2),
                    Basis::Equator(e) => Measurement::equator(self.eval(ctx, a, e, &mut reads)?),
                    Basis::Meridian(e) => Measurement::meridian(self.eval(ctx, a, e, &mut reads)?),
                    Basis::Bell => {
                        if regs.len() != 2 {
                            return Err(line(EngineError::Strategy("a Bell measurement takes two registers".into())));
                        }
                        let d = self.state()?.system().dim_of(regs[0])?;
                        let v: Vec<_> = bell_basis(d).into_iter().map(|(_, v)| v).collect();
                        Measurement::from_basis(&v)?
                    }
                };
                let width = bits_for(m.outcomes());
                let outcomes: Vec<Outcome> = self
                    .state()?
                    .measure(&regs, &m)?
                    .into_iter()
                    .filter_map(|o| {
                        let label = o.label;
                        o.post_state.map(|s| {
                            (
                                o.probability,
                                s,
                                vec![(out.clone(), label as f64, width)],
                                format!("{} -> {out} = {label}", registers.join(" ")),
                            )
                        })
                    })
                    .collect();
                return self.branch(a, &name, EventKind::Measure, reads, registers, outcomes, rng);
            }
            Action::TeleportSend { source, local, out } => {
                reads.push(self.hold(ctx, a, source)?);
                reads.push(self.hold(ctx, a, local)?);
                let d = self.state()?.system().dim_of(source)?;
                let width = bits_for(d);
                let outcomes: Vec<Outcome> = teleport_branches(self.state()?, source, local)?
                    .into_iter()
                    .filter_map(|(msg, o)| {
                        o.post_state.map(|s| {
                            (
                                o.probability,
                                s,
                                vec![
                                    (format!("{out}.shift"), msg.shift as f64, width),
                                    (format!("{out}.phase"), msg.phase as f64, width),
                                ],
                                format!("{source} {local} -> {out} = ({}, {})", msg.shift, msg.phase),
                            )
                        })
                    })
                    .collect();
                let regs = vec![source.clone(), local.clone()];
                return self.branch(a, &name, EventKind::TeleportSend, reads, &regs, outcomes, rng);
            }
            Action::TeleportReceive { target, msg } => {
                reads.push(self.hold(ctx, a, target)?);
                let shift = self.eval(ctx, a, &Expr::var(format!("{msg}.shift")), &mut reads)?;
                let phase = self.eval(ctx, a, &Expr::var(format!("{msg}.phase")), &mut reads)?;
                let next = teleport_receive(
                    self.state()?,
                    target,
                    TeleportMessage::new(shift as usize, phase as usize),
                )?;
                self.state = Some(next);
                let id = self.event(
                    EventKind::TeleportReceive,
                    Some(name),
                    point,
                    format!("{target} <- ({shift}, {phase})"),
                    reads,
                );
                self.reg_origin.insert(target.clone(), id);
            }
            Action::Send { items, to, route } => {
                let (vars, regs) = self.collect_items(ctx, a, items, true, &mut reads)?;
                let route = self.resolve_route(ctx, a, route, &mut reads)?;
                let dest = ctx.strategy.agent_index(&to.agent).expect("checked destination");
                let id = self.event(
                    EventKind::Send,
                    Some(name.clone()),
                    point.clone(),
                    format!(
                        "{} to {}{}",
                        items.join(", "),
                        to.agent,
                        to.station.map(|s| format!("@{s}")).unwrap_or_default()
                    ),
                    reads,
                );
                for (r, _) in &regs {
                    self.agents[a].registers.remove(r);
                }
                self.mail.push(Mail {
                    event: id,
                    from: point.clone(),
                    sender: a,
                    to: dest,
                    station: to.station,
                    route,
                    vars,
                    registers: regs,
                    open: true,
                });
                let i = self.mail.len() - 1;
                let d = &self.agents[dest];
                if let Some(k) = to.station {
                    if d.station > k || (d.station == k && d.active) {
                        // Already reached: fine only when the station coincides with the send.
                        let target = d.point.clone();
                        let ok = d.station == k
                            && self.route_path(ctx, &point, &self.mail[i].route, &target)?.is_some();
                        if !ok {
                            return Err(EngineError::Causality(format!(
                                "message from {} cannot reach `{}` station {k}, which lies outside its causal future",
                                self.here(ctx, a),
                                to.agent
                            )));
                        }
                        let path = self
                            .route_path(ctx, &point, &self.mail[i].route, &target)?
                            .expect("checked path");
                        self.deliver(ctx, dest, i, &path)?;
                    }
                } else if d.active && d.point.approx_eq(&point, POINT_TOL) && dest != a {
                    let target = d.point.clone();
                    if let Some(path) = self.route_path(ctx, &point, &self.mail[i].route, &target)? {
                        self.deliver(ctx, dest, i, &path)?;
                    }
                }
            }
            Action::Broadcast { items } => {
                let (vars, regs) = self.collect_items(ctx, a, items, false, &mut reads)?;
                debug_assert!(regs.is_empty());
                let id = self.event(EventKind::Broadcast, Some(name), point.clone(), items.join(", "), reads);
                self.casts.push(Cast {
                    event: id,
                    from: point,
                    vars,
                });
                let c = self.casts.len() - 1;
                self.agents[a].casts_seen.insert(c);
            }
            Action::Output(item) => {
                let data = match item {
                    OutputItem::Register(r) => {
                        reads.push(self.hold(ctx, a, r)?);
                        self.frozen.insert(r.clone());
                        self.agents[a].registers.remove(r);
                        ProducedData::Quantum(r.clone())
                    }
                    OutputItem::Value(e) => ProducedData::Classical(self.eval(ctx, a, e, &mut reads)?),
                };
                let detail = match &data {
                    ProducedData::Quantum(r) => format!("register {r}"),
                    ProducedData::Classical(v) => format!("value {v}"),
                };
                self.event(EventKind::Output, Some(name), point.clone(), detail, reads);
                self.outputs.push(ProducedOutput { point, data });
            }
            Action::Move { to, route } => {
                let target = self.eval_point(ctx, a, to, &mut reads)?;
                self.check_station(ctx, &name, &target)?;
                let path = match self.resolve_route(ctx, a, route, &mut reads)? {
                    ResolvedRoute::Auto => match find_causal_path(&point, &target, &ctx.walls, &ctx.cfg.routing)? {
                        PathOutcome::Found(p) => Some(p),
                        _ => None,
                    },
                    ResolvedRoute::Direct => Some(vec![point.clone(), target.clone()]),
                    ResolvedRoute::Via(w) => {
                        let mut p = vec![point.clone()];
                        p.extend(w);
                        p.push(target.clone());
                        Some(p)
                    }
                };
                let Some(path) = path else {
                    return Err(EngineError::Causality(format!(
                        "{} has no causal route to {target}",
                        self.here(ctx, a)
                    )));
                };
                for w in path.windows(2) {
                    if !in_causal_future(&w[0], &w[1])? {
                        return Err(EngineError::Causality(format!(
                            "{} cannot move to {}, outside its causal future",
                            self.here(ctx, a),
                            w[1]
                        )));
                    }
                    if let Some(r) = ctx.walls.iter().find(|r| r.segment_meets_interior(&w[0], &w[1])) {
                        return Err(EngineError::Region(format!(
                            "{} would pass through region `{}` on the way to {}",
                            self.here(ctx, a),
                            r.name,
                            w[1]
                        )));
                    }
                }
                self.event(EventKind::Move, Some(name), point, format!("to {target}"), reads);
                let rt = &mut self.agents[a];
                rt.station += 1;
                rt.point = target.clone();
                rt.active = false;
                rt.pc += 1;
                self.queue.push((target.t(), self.seq, a));
                self.seq += 1;
                self.running = None;
                return Ok(Step::Continue);
            }
        }
        self.agents[a].pc += 1;
        Ok(Step::Continue)
    }

    fn collect_items(
        &self,
        ctx: &Ctx,
        a: usize,
        items: &[String],
        allow_registers: bool,
        reads: &mut Vec<usize>,
    ) -> Result<(Vec<(String, Knowledge)>, Vec<(String, usize)>), EngineError> {
        let mut vars = Vec::new();
        let mut regs = Vec::new();
        for it in items {
            if let Some(k) = self.agents[a].memory.get(it) {
                reads.push(k.origin);
                vars.push((it.clone(), k.clone()));
            } else if ctx.task.params.contains_key(it) {
                return Err(EngineError::Strategy(format!(
                    "`{it}` is a parameter and known everywhere; it cannot be sent"
                )));
            } else if allow_registers && (self.agents[a].registers.contains(it) || self.frozen.contains(it)) {
                reads.push(self.hold(ctx, a, it)?);
                regs.push((it.clone(), self.state()?.system().dim_of(it)?));
            } else {
                return Err(self.unavailable(ctx, a, it));
            }
        }
        Ok((vars, regs))
    }

    fn resolve_route(
        &self,
        ctx: &Ctx,
        a: usize,
        route: &Route,
        reads: &mut Vec<usize>,
    ) -> Result<ResolvedRoute, EngineError> {
        Ok(match route {
            Route::Direct => ResolvedRoute::Direct,
            Route::Auto => ResolvedRoute::Auto,
            Route::Via(ps) => {
                let mut out = Vec::with_capacity(ps.len());
                for p in ps {
                    out.push(self.eval_point(ctx, a, p, reads)?);
                }
                ResolvedRoute::Via(out)
            }
        })
    }

    /// Record a probabilistic event: fork in exact mode, sample otherwise.
    #[allow(clippy::too_many_arguments)]
    fn branch(
        &mut self,
        a: usize,
        name: &str,
        kind: EventKind,
        reads: Vec<usize>,
        registers: &[String],
        outcomes: Vec<Outcome>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Step, EngineError> {
        if outcomes.is_empty() {
            return Err(EngineError::Quantum("measurement with no possible outcome".into()));
        }
        let chosen: Vec<Outcome> = match rng {
            Some(r) => {
                let u: f64 = r.random();
                let total: f64 = outcomes.iter().map(|o| o.0).sum();
                let mut acc = 0.0;
                let mut pick = outcomes.len() - 1;
                for (i, o) in outcomes.iter().enumerate() {
                    acc += o.0 / total;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let mut o = outcomes.into_iter().nth(pick).expect("index in range");
                o.0 = 1.0;
                vec![o]
            }
            None => outcomes,
        };
        let single = chosen.len() == 1;
        let mut children = Vec::with_capacity(chosen.len());
        for (p, post, vars, detail) in chosen {
            let mut child = if single { std::mem::replace(self, self.shell()) } else { self.clone() };
            child.weight *= p;
            child.state = Some(post);
            let agent = Some(name.to_string());
            let point = child.agents[a].point.clone();
            let id = child.event(kind, agent, point, detail, reads.clone());
            for r in registers {
                child.reg_origin.insert(r.clone(), id);
            }
            for (n, v, w) in vars {
                child.agents[a].memory.insert(
                    n,
                    Knowledge {
                        value: v,
                        width: w,
                        origin: id,
                    },
                );
            }
            child.agents[a].pc += 1;
            children.push(child);
        }
        if single {
            *self = children.pop().expect("one child");
            Ok(Step::Continue)
        } else {
            Ok(Step::Fork(children))
        }
    }

    fn shell(&self) -> Sim {
        Sim {
            agents: Vec::new(),
            queue: Vec::new(),
            seq: 0,
            running: None,
            state: None,
            frozen: BTreeSet::new(),
            delivered_quantum: BTreeSet::new(),
            input_events: BTreeMap::new(),
            reg_origin: BTreeMap::new(),
            mail: Vec::new(),
            casts: Vec::new(),
            outputs: Vec::new(),
            trace: Vec::new(),
            ledger: BTreeMap::new(),
            weight: 0.0,
        }
    }
}

fn names(vars: &[(String, Knowledge)]) -> String {
    vars.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(", ")
}
