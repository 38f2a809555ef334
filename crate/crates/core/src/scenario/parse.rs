use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Analysis, Request, Scenario, SimExpect, SimMode};
use crate::analyzers::{ModelClass, OracleEvent, OracleInputModel, Status};
use crate::engine::{
    Action, Agent, Basis, Destination, Instr, OutputItem, PairKind, Resource, Route, StationSpec, Strategy,
};
use crate::geometry::{Budget, Region, SpacetimeBox, SpacetimePoint, Span};
use crate::tasks::{
    validate, BoundDirection, ClassicalSource, DataRule, Diagnostic, Distribution, EvalError, Expr, InputEvent,
    OutputRequirement, Payload, PointExpr, QuantumPrep, QuantumSource, SuccessPredicate, TaskSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid task: {}", list(.0))]
    Invalid(Vec<Diagnostic>),
}

fn list(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; ")
}

type PResult<T> = Result<T, ParseError>;

#[derive(Debug, Clone, Copy)]
struct Src<'a> {
    line: usize,
    raw: &'a str,
}

impl<'a> Src<'a> {
    /// Column of `part`, which should be a slice of this line.
    fn col(&self, part: &str) -> usize {
        let start = self.raw.as_ptr() as usize;
        let at = part.as_ptr() as usize;
        if at < start || at > start + self.raw.len() {
            return 1;
        }
        self.raw[..at - start].chars().count() + 1
    }

    fn err(&self, part: &str, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col(part),
            message: message.into(),
        }
    }

    fn err_col(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
        }
    }
}

const SECTIONS: &[&str] = &[
    "scenario", "params", "points", "regions", "inputs", "outputs", "predicate", "strategy", "model", "analyze",
];

struct Section<'a> {
    name: &'a str,
    arg: Option<&'a str>,
    header: Src<'a>,
    lines: Vec<Src<'a>>,
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.')
}

/// Split on whitespace outside parentheses.
fn split_ws(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch.is_whitespace() && depth <= 0 {
            if let Some(b) = start.take() {
                out.push(&s[b..i]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        out.push(&s[b..]);
    }
    out
}

/// Split on `sep` outside parentheses, trimming each piece.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut b = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[b..i].trim());
                b = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(s[b..].trim());
    out
}

/// Byte index of the first top-level `sep`.
fn find_top(s: &str, sep: char) -> Option<usize> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// `name(inner)` as a whole token.
fn call(token: &str) -> Option<(&str, &str)> {
    let open = token.find('(')?;
    let inner = token[open + 1..].strip_suffix(')')?;
    Some((&token[..open], inner))
}

fn take_ident(s: &str) -> (&str, &str) {
    let end = s
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
        .map_or(s.len(), |(i, _)| i);
    (&s[..end], &s[end..])
}

/// Comma-separated identifiers at the start of `s`; returns the rest.
fn ident_list<'a>(src: &Src, s: &'a str) -> PResult<(Vec<String>, &'a str)> {
    let mut out = Vec::new();
    let mut rest = s.trim_start();
    loop {
        let (id, r) = take_ident(rest);
        if !is_ident(id) {
            return Err(src.err(rest, "expected a name"));
        }
        out.push(id.to_string());
        rest = r.trim_start();
        match rest.strip_prefix(',') {
            Some(r) => rest = r.trim_start(),
            None => return Ok((out, rest)),
        }
    }
}

fn names(src: &Src, s: &str) -> PResult<Vec<String>> {
    let (v, rest) = ident_list(src, s)?;
    if !rest.trim().is_empty() {
        return Err(src.err(rest, format!("unexpected `{}`", rest.trim())));
    }
    Ok(v)
}

fn key_value<'a>(src: &Src<'a>, text: &'a str) -> PResult<(&'a str, &'a str)> {
    let Some(eq) = text.find('=') else {
        return Err(src.err(text, "expected `key = value`"));
    };
    let key = text[..eq].trim();
    let value = text[eq + 1..].trim();
    if key.is_empty() {
        return Err(src.err(text, "missing key"));
    }
    if value.is_empty() {
        return Err(src.err(&text[eq..], format!("missing value for `{key}`")));
    }
    Ok((key, value))
}

struct Ctx {
    dim: usize,
    params: BTreeMap<String, f64>,
    points: BTreeMap<String, SpacetimePoint>,
}

impl Ctx {
    fn expr(&self, src: &Src, text: &str) -> PResult<Expr> {
        Expr::parse(text).map_err(|e| src.err_col(src.col(text) + e.column - 1, e.message))
    }

    fn constant(&self, src: &Src, text: &str) -> PResult<f64> {
        let e = self.expr(src, text)?;
        e.eval(&|n| self.params.get(n).copied().ok_or_else(|| EvalError::Unknown(n.to_string())))
            .map_err(|e| src.err(text, e.to_string()))
    }

    fn integer(&self, src: &Src, text: &str) -> PResult<u64> {
        let v = self.constant(src, text)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(src.err(text, format!("expected a non-negative integer, got {v}")));
        }
        Ok(v as u64)
    }

    fn point_expr(&self, src: &Src, text: &str) -> PResult<PointExpr> {
        let p = PointExpr::parse(text, &|n| self.points.get(n).cloned())
            .map_err(|e| src.err_col(src.col(text) + e.column - 1, e.message))?;
        if !point_dim_ok(&p, self.dim) {
            return Err(src.err(text, format!("point does not have {} spatial coordinates", self.dim)));
        }
        Ok(p)
    }

    /// A point fixed by parameters alone.
    fn point(&self, src: &Src, text: &str) -> PResult<SpacetimePoint> {
        self.point_expr(src, text)?
            .eval(&|n| self.params.get(n).copied().ok_or_else(|| EvalError::Unknown(n.to_string())))
            .map_err(|e| src.err(text, e.to_string()))
    }
}

fn point_dim_ok(p: &PointExpr, dim: usize) -> bool {
    match p {
        PointExpr::Fixed { point, .. } => point.dim() == dim,
        PointExpr::Coords { x, .. } => x.len() == dim,
        PointExpr::Select { options, .. } => options.iter().all(|o| point_dim_ok(o, dim)),
    }
}

fn status(src: &Src, text: &str) -> PResult<Status> {
    text.parse().map_err(|e: String| src.err(text, e))
}

fn sections(text: &str) -> PResult<Vec<Section<'_>>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let src = Src { line: i + 1, raw };
        let body = raw.find('#').map_or(raw, |k| &raw[..k]).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                return Err(src.err(body, "unterminated section header"));
            };
            let mut words = inner.split_whitespace();
            let name = words.next().unwrap_or("");
            let arg = words.next();
            if let Some(extra) = words.next() {
                return Err(src.err(extra, format!("unexpected `{extra}` in section header")));
            }
            if !SECTIONS.contains(&name) {
                return Err(src.err(body, format!("unknown section [{inner}]")));
            }
            let named = matches!(name, "strategy" | "model");
            match (named, arg) {
                (true, None) => return Err(src.err(body, format!("section [{name}] needs a name"))),
                (false, Some(a)) => return Err(src.err(a, format!("section [{name}] takes no name"))),
                _ => {}
            }
            if out.iter().any(|s| s.name == name && s.arg == arg) {
                return Err(src.err(body, format!("duplicate section [{inner}]")));
            }
            out.push(Section {
                name,
                arg,
                header: src,
                lines: Vec::new(),
            });
            continue;
        }
        match out.last_mut() {
            Some(s) => s.lines.push(Src { line: i + 1, raw: body }),
            None => return Err(src.err(body, "expected a section header")),
        }
    }
    Ok(out)
}

fn find<'s, 'a>(all: &'s [Section<'a>], name: &str) -> Option<&'s Section<'a>> {
    all.iter().find(|s| s.name == name)
}

/// Parse and validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let all = sections(text)?;
    let end = Src {
        line: text.lines().count().max(1),
        raw: "",
    };
    for required in ["points", "inputs", "outputs", "predicate"] {
        if find(&all, required).is_none() {
            return Err(end.err_col(1, format!("missing required section [{required}]")).into());
        }
    }

    let mut name = String::from("unnamed");
    let mut description = String::new();
    let mut dim = 1usize;
    let mut seed = 0u64;
    if let Some(s) = find(&all, "scenario") {
        for src in &s.lines {
            let (k, v) = key_value(src, src.raw)?;
            match k {
                "name" => name = v.to_string(),
                "description" => description = v.to_string(),
                "dim" => {
                    dim = v.parse().map_err(|_| src.err(v, "dim must be 1 or 3"))?;
                    if dim != 1 && dim != 3 {
                        return Err(src.err(v, "dim must be 1 or 3").into());
                    }
                }
                "seed" => seed = v.parse().map_err(|_| src.err(v, "seed must be a non-negative integer"))?,
                _ => return Err(src.err(k, format!("unknown key `{k}` in [scenario]")).into()),
            }
        }
    }

    let mut ctx = Ctx {
        dim,
        params: BTreeMap::new(),
        points: BTreeMap::new(),
    };
    if let Some(s) = find(&all, "params") {
        for src in &s.lines {
            let (k, v) = key_value(src, src.raw)?;
            if !is_ident(k) || ctx.params.contains_key(k) {
                return Err(src.err(k, format!("bad or duplicate parameter `{k}`")).into());
            }
            let value = ctx.constant(src, v)?;
            ctx.params.insert(k.to_string(), value);
        }
    }
    for src in &find(&all, "points").expect("checked").lines {
        let (k, v) = key_value(src, src.raw)?;
        if !is_ident(k) || ctx.points.contains_key(k) {
            return Err(src.err(k, format!("bad or duplicate point `{k}`")).into());
        }
        let p = ctx.point(src, v)?;
        ctx.points.insert(k.to_string(), p);
    }

    let mut regions = Vec::new();
    if let Some(s) = find(&all, "regions") {
        for src in &s.lines {
            regions.push(region(&ctx, src)?);
        }
    }
    let region_names: BTreeSet<String> = regions.iter().map(|r: &Region| r.name.clone()).collect();

    let mut inputs = Vec::new();
    for src in &find(&all, "inputs").expect("checked").lines {
        inputs.push(input(&ctx, src, &region_names)?);
    }
    let input_names: BTreeSet<String> = inputs.iter().map(|i: &InputEvent| i.name.clone()).collect();
    let mut outputs = Vec::new();
    for src in &find(&all, "outputs").expect("checked").lines {
        outputs.push(output(&ctx, src, &input_names)?);
    }
    let predicate = predicate(&ctx, find(&all, "predicate").expect("checked"))?;

    let task = TaskSpec {
        name: name.clone(),
        dim,
        params: ctx.params.clone(),
        inputs,
        outputs,
        predicate,
        regions,
        notes: description.clone(),
    };
    let diagnostics = validate(&task);
    if !diagnostics.is_empty() {
        return Err(ScenarioError::Invalid(diagnostics));
    }

    let mut strategies = Vec::new();
    for s in all.iter().filter(|s| s.name == "strategy") {
        let st = strategy(&ctx, &task, s)?;
        st.check(&task).map_err(|e| s.header.err(s.header.raw, e.to_string()))?;
        strategies.push(st);
    }
    let mut models = BTreeMap::new();
    for s in all.iter().filter(|s| s.name == "model") {
        let m = model(&ctx, s)?;
        m.validate().map_err(|e| s.header.err(s.header.raw, e))?;
        models.insert(s.arg.expect("named").to_string(), m);
    }
    let mut requests = Vec::new();
    if let Some(s) = find(&all, "analyze") {
        for src in &s.lines {
            let analysis = request(&ctx, src)?;
            match &analysis {
                Analysis::Budget { strategy, .. } | Analysis::Simulate { strategy, .. }
                    if !strategies.iter().any(|s: &Strategy| &s.name == strategy) =>
                {
                    return Err(src.err(src.raw, format!("unknown strategy `{strategy}`")).into())
                }
                Analysis::Deducible { model, .. } | Analysis::Unveiling { model: Some(model), .. }
                    if !models.contains_key(model) =>
                {
                    return Err(src.err(src.raw, format!("unknown model `{model}`")).into())
                }
                _ => {}
            }
            requests.push(Request {
                line: src.line,
                text: src.raw.to_string(),
                analysis,
            });
        }
    }

    Ok(Scenario {
        name,
        description,
        seed,
        task,
        points: ctx.points,
        strategies,
        models,
        requests,
    })
}

fn budget(src: &Src, text: &str) -> PResult<Budget> {
    if text == "unlimited" {
        return Ok(Budget::Unlimited);
    }
    text.parse()
        .map(Budget::Limited)
        .map_err(|_| src.err(text, "budget must be a non-negative integer or `unlimited`"))
}

fn region(ctx: &Ctx, src: &Src) -> PResult<Region> {
    let (name, v) = key_value(src, src.raw)?;
    let toks = split_ws(v);
    let penetrable = match toks[0] {
        "impenetrable" => false,
        "penetrable" => true,
        t => return Err(src.err(t, "expected `impenetrable` or `penetrable`")),
    };
    let mut bits = if penetrable { Budget::Unlimited } else { Budget::Limited(0) };
    let mut qubits = bits;
    let mut boxes = Vec::new();
    for t in &toks[1..] {
        if let Some(b) = t.strip_prefix("bits=") {
            bits = budget(src, b)?;
        } else if let Some(b) = t.strip_prefix("qubits=") {
            qubits = budget(src, b)?;
        } else if let Some(("box", inner)) = call(t) {
            let parts = split_top(inner, ';');
            if parts.len() != ctx.dim + 1 {
                return Err(src.err(t, format!("box needs a time span and {} spatial spans", ctx.dim)));
            }
            let mut spans = Vec::new();
            for p in parts {
                let ends = split_top(p, ',');
                if ends.len() != 2 {
                    return Err(src.err(p, "span must be `lo, hi`"));
                }
                spans.push(Span::new(ctx.constant(src, ends[0])?, ctx.constant(src, ends[1])?));
            }
            let t_span = spans.remove(0);
            boxes.push(SpacetimeBox::new(t_span, spans).map_err(|e| src.err(t, e.to_string()))?);
        } else {
            return Err(src.err(t, format!("unexpected `{t}` in region")));
        }
    }
    Region::new(name, boxes, penetrable, bits, qubits).map_err(|e| src.err(v, e.to_string()))
}

fn input(ctx: &Ctx, src: &Src, regions: &BTreeSet<String>) -> PResult<InputEvent> {
    let (name, v) = key_value(src, src.raw)?;
    if !is_ident(name) {
        return Err(src.err(name, format!("bad input name `{name}`")));
    }
    let toks = split_ws(v);
    if toks.len() < 4 || toks[1] != "at" {
        return Err(src.err(v, "expected `classical|quantum at POINT PAYLOAD`"));
    }
    let point = ctx.point_expr(src, toks[2])?;
    let mut inside_region = None;
    let mut rest: Vec<&str> = Vec::new();
    for t in &toks[3..] {
        match t.strip_prefix("inside=") {
            Some(r) if regions.contains(r) => inside_region = Some(r.to_string()),
            Some(r) => return Err(src.err(t, format!("unknown region `{r}`"))),
            None => rest.push(t),
        }
    }
    let payload = match toks[0] {
        "classical" => {
            let [t] = rest.as_slice() else {
                return Err(src.err(toks[3], "expected one distribution"));
            };
            Payload::Classical(classical(ctx, src, t)?)
        }
        "quantum" => {
            let mut dim = 2usize;
            let mut prep = None;
            for t in rest {
                if let Some(d) = t.strip_prefix("dim=") {
                    dim = ctx.integer(src, d)? as usize;
                } else if t == "haar" {
                    prep = Some(QuantumPrep::Haar);
                } else {
                    prep = Some(match call(t) {
                        Some(("basis", k)) => QuantumPrep::Basis(ctx.integer(src, k)? as usize),
                        Some(("reference", r)) if is_ident(r) => QuantumPrep::EntangledWithReference {
                            reference: r.to_string(),
                        },
                        Some(("entangled", b)) if is_ident(b) => QuantumPrep::EntangledWith { partner: b.to_string() },
                        _ => return Err(src.err(t, format!("unknown quantum preparation `{t}`"))),
                    });
                }
            }
            let prep = prep.ok_or_else(|| src.err(v, "missing quantum preparation"))?;
            Payload::Quantum(QuantumSource { dim, prep })
        }
        k => return Err(src.err(k, "expected `classical` or `quantum`")),
    };
    Ok(InputEvent {
        name: name.to_string(),
        point,
        payload,
        inside_region,
    })
}

fn classical(ctx: &Ctx, src: &Src, t: &str) -> PResult<ClassicalSource> {
    let Some((f, inner)) = call(t) else {
        return Err(src.err(t, "expected a distribution such as `uniform(0, 1)`"));
    };
    let args = split_top(inner, ',');
    let values = |args: &[&str]| args.iter().map(|a| ctx.constant(src, a)).collect::<PResult<Vec<f64>>>();
    Ok(match f {
        "uniform" => ClassicalSource::Distribution(Distribution::uniform(values(&args)?)),
        "value" if args.len() == 1 => ClassicalSource::Distribution(Distribution::point(ctx.constant(src, args[0])?)),
        "grid" if args.len() == 3 => {
            let n = ctx.integer(src, args[2])? as usize;
            ClassicalSource::Distribution(Distribution::uniform_grid(
                ctx.constant(src, args[0])?,
                ctx.constant(src, args[1])?,
                n,
            ))
        }
        "dist" => {
            let mut support = Vec::new();
            for a in args {
                let Some(c) = find_top(a, ':') else {
                    return Err(src.err(a, "expected `value: probability`"));
                };
                support.push((ctx.constant(src, a[..c].trim())?, ctx.constant(src, a[c + 1..].trim())?));
            }
            ClassicalSource::Distribution(Distribution::new(support))
        }
        "copy" if args.len() == 1 && is_ident(args[0]) => ClassicalSource::CopyOf(args[0].to_string()),
        _ => return Err(src.err(t, format!("unknown distribution `{t}`"))),
    })
}

fn output(ctx: &Ctx, src: &Src, inputs: &BTreeSet<String>) -> PResult<OutputRequirement> {
    let (name, v) = key_value(src, src.raw)?;
    if !is_ident(name) {
        return Err(src.err(name, format!("bad output name `{name}`")));
    }
    let Some(after) = v.strip_prefix("at") else {
        return Err(src.err(v, "expected `at POINT ...`"));
    };
    let after = after.trim_start();
    let point_text = split_ws(after).first().copied().unwrap_or("");
    let point = ctx.point_expr(src, point_text)?;
    let mut rest = after[point_text.len()..].trim();
    let mut deps = None;
    if let Some(k) = rest.find(" deps ").or_else(|| rest.starts_with("deps ").then_some(0)) {
        let list = rest[k..].trim_start().strip_prefix("deps").expect("found").trim();
        deps = Some(names(src, list)?);
        rest = rest[..k].trim();
    }
    let data = if let Some(e) = rest.strip_prefix("value ") {
        DataRule::Classical(ctx.expr(src, e.trim())?)
    } else if let Some(q) = rest.strip_prefix("quantum ") {
        let q = q.trim();
        if !inputs.contains(q) {
            return Err(src.err(q, format!("unknown quantum input `{q}`")));
        }
        DataRule::Quantum(q.to_string())
    } else if rest == "free" {
        DataRule::Free
    } else {
        return Err(src.err(rest, "expected `value EXPR`, `quantum INPUT` or `free`"));
    };
    let deps = deps.unwrap_or_else(|| {
        let mut d: BTreeSet<String> = point.free_vars();
        match &data {
            DataRule::Classical(e) => d.extend(e.free_vars()),
            DataRule::Quantum(q) => {
                d.insert(q.clone());
            }
            DataRule::Free => {}
        }
        d.into_iter().filter(|n| inputs.contains(n)).collect()
    });
    Ok(OutputRequirement {
        name: name.to_string(),
        point,
        data,
        deps,
    })
}

fn predicate(ctx: &Ctx, s: &Section) -> PResult<SuccessPredicate> {
    let [src] = s.lines.as_slice() else {
        return Err(s.header.err(s.header.raw, "[predicate] takes exactly one line"));
    };
    let t = src.raw;
    if t == "exact" {
        return Ok(SuccessPredicate::ExactClassical);
    }
    if let Some(v) = t.strip_prefix("fidelity") {
        let v = v.trim_start();
        let Some(v) = v.strip_prefix(">=") else {
            return Err(src.err(v, "expected `fidelity >= THRESHOLD`"));
        };
        return Ok(SuccessPredicate::QuantumFidelity {
            threshold: ctx.constant(src, v.trim())?,
        });
    }
    if let Some(tok) = split_ws(t).first().copied().and_then(call).filter(|(f, _)| *f == "probability") {
        let event = ctx.expr(src, tok.1)?;
        let rest = t[tok.1.len() + "probability(".len() + 1..].trim();
        let (direction, bound) = [
            (">=", BoundDirection::AtLeast),
            ("<=", BoundDirection::AtMost),
            (">", BoundDirection::Above),
            ("<", BoundDirection::Below),
        ]
        .into_iter()
        .find_map(|(op, d)| rest.strip_prefix(op).map(|b| (d, b.trim())))
        .ok_or_else(|| src.err(rest, "expected a comparison such as `> 0.75`"))?;
        return Ok(SuccessPredicate::ProbabilityBound {
            event,
            bound: ctx.constant(src, bound)?,
            direction,
        });
    }
    Err(src.err(t, "expected `exact`, `fidelity >= X` or `probability(EVENT) > X`"))
}

/// `key=value` options of a statement line.
struct Opts<'a> {
    src: Src<'a>,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Opts<'a> {
    fn new(src: Src<'a>, toks: &[&'a str]) -> PResult<Self> {
        let mut map = BTreeMap::new();
        for t in toks {
            let Some((k, v)) = t.split_once('=') else {
                return Err(src.err(t, format!("expected `key=value`, got `{t}`")));
            };
            if map.insert(k, v).is_some() {
                return Err(src.err(t, format!("duplicate option `{k}`")));
            }
        }
        Ok(Self { src, map })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        self.map.remove(key)
    }

    fn need(&mut self, key: &str) -> PResult<&'a str> {
        self.take(key)
            .ok_or_else(|| self.src.err(self.src.raw, format!("missing option `{key}=`")))
    }

    fn num(&mut self, key: &str) -> PResult<Option<f64>> {
        match self.take(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.src.err(v, format!("`{key}` must be a number"))),
            None => Ok(None),
        }
    }

    fn finish(self) -> PResult<()> {
        match self.map.into_iter().next() {
            Some((k, _)) => Err(self.src.err(k, format!("unknown option `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Split `words... at HOLDERS`.
fn at_split<'a>(src: &Src, toks: &[&'a str]) -> PResult<(Vec<&'a str>, Vec<&'a str>)> {
    match toks.iter().position(|t| *t == "at") {
        Some(k) if k + 1 < toks.len() => Ok((toks[..k].to_vec(), toks[k + 1..].to_vec())),
        _ => Err(src.err(src.raw, "expected `at AGENT ...`")),
    }
}

fn strategy(ctx: &Ctx, task: &TaskSpec, s: &Section) -> PResult<Strategy> {
    let mut st = Strategy {
        name: s.arg.expect("named").to_string(),
        resources: Vec::new(),
        agents: Vec::new(),
    };
    let mut registers: BTreeSet<String> = task
        .inputs
        .iter()
        .filter(|i| i.is_quantum())
        .map(|i| i.name.clone())
        .collect();
    for src in &s.lines {
        if let Some(r) = resource(src)? {
            registers.extend(match &r {
                Resource::Pair { a, b, .. } => vec![a.clone(), b.clone()],
                Resource::Qudit { name, .. } => vec![name.clone()],
                Resource::Tape { .. } => vec![],
            });
            st.resources.push(r);
        }
    }
    for src in &s.lines {
        let toks = split_ws(src.raw);
        match toks[0] {
            "pair" | "qudit" | "tape" => {}
            "agent" => {
                let start = match toks.as_slice() {
                    [_, _, "at", "input", i] => StationSpec::AtInput(i.to_string()),
                    [_, _, "at", p] => StationSpec::At(ctx.point_expr(src, p)?),
                    _ => return Err(src.err(src.raw, "expected `agent NAME at POINT` or `agent NAME at input X`")),
                };
                if !is_ident(toks[1]) {
                    return Err(src.err(toks[1], "bad agent name"));
                }
                st.agents.push(Agent {
                    name: toks[1].to_string(),
                    start,
                    program: Vec::new(),
                });
            }
            _ => {
                let i = instr(ctx, src, src.raw, &registers)?;
                match st.agents.last_mut() {
                    Some(a) => a.program.push(i),
                    None => return Err(src.err(src.raw, "instruction before any `agent` line")),
                }
            }
        }
    }
    Ok(st)
}

fn resource(src: &Src) -> PResult<Option<Resource>> {
    let toks = split_ws(src.raw);
    if !matches!(toks[0], "pair" | "qudit" | "tape") {
        return Ok(None);
    }
    let (head, holders) = at_split(src, &toks)?;
    let positional: Vec<&str> = head[1..].iter().copied().take_while(|t| !t.contains('=')).collect();
    let mut opts = Opts::new(*src, &head[1 + positional.len()..])?;
    for n in positional.iter().chain(holders.iter()) {
        if !is_ident(n) {
            return Err(src.err(n, format!("bad name `{n}`")));
        }
    }
    let int = |o: &mut Opts, k: &str, default: usize| -> PResult<usize> {
        match o.take(k) {
            Some(v) => v.parse().map_err(|_| src.err(v, format!("`{k}` must be a non-negative integer"))),
            None => Ok(default),
        }
    };
    let r = match (toks[0], positional.as_slice(), holders.as_slice()) {
        ("pair", [a, b], [ha, hb]) => {
            let dim = int(&mut opts, "dim", 2)?;
            let kind = match opts.take("kind").unwrap_or("maxent") {
                "maxent" => PairKind::MaxEntangled,
                "singlet" => PairKind::Singlet,
                k => return Err(src.err(k, "kind must be `maxent` or `singlet`")),
            };
            Resource::Pair {
                a: a.to_string(),
                b: b.to_string(),
                dim,
                kind,
                holder_a: ha.to_string(),
                holder_b: hb.to_string(),
            }
        }
        ("qudit", [n], [h]) => Resource::Qudit {
            name: n.to_string(),
            dim: int(&mut opts, "dim", 2)?,
            basis: int(&mut opts, "basis", 0)?,
            holder: h.to_string(),
        },
        ("tape", [n], hs) => Resource::Tape {
            name: n.to_string(),
            values: int(&mut opts, "values", 2)?,
            holders: hs.iter().map(|h| h.to_string()).collect(),
        },
        (k, _, _) => {
            return Err(src.err(
                src.raw,
                match k {
                    "pair" => "expected `pair A B [dim=N] [kind=maxent|singlet] at AGENT AGENT`",
                    "qudit" => "expected `qudit R [dim=N] [basis=K] at AGENT`",
                    _ => "expected `tape K [values=N] at AGENT ...`",
                },
            ))
        }
    };
    opts.finish()?;
    Ok(Some(r))
}

fn route(ctx: &Ctx, src: &Src, text: &str) -> PResult<Route> {
    match text {
        "direct" => Ok(Route::Direct),
        "auto" => Ok(Route::Auto),
        _ => Ok(Route::Via(
            split_top(text, ',')
                .into_iter()
                .map(|p| ctx.point_expr(src, p))
                .collect::<PResult<_>>()?,
        )),
    }
}

/// Split off a trailing ` via ROUTE`.
fn via<'a>(ctx: &Ctx, src: &Src, text: &'a str) -> PResult<(&'a str, Route)> {
    match text.find(" via ") {
        Some(k) => Ok((text[..k].trim(), route(ctx, src, text[k + 5..].trim())?)),
        None => Ok((text.trim(), Route::Direct)),
    }
}

fn instr(ctx: &Ctx, src: &Src, text: &str, registers: &BTreeSet<String>) -> PResult<Instr> {
    let (word, rest) = take_ident(text);
    let rest = rest.trim();
    let action = match word {
        "when" => {
            let Some(c) = find_top(rest, ':') else {
                return Err(src.err(rest, "expected `when CONDITION: INSTRUCTION`"));
            };
            let guard = ctx.expr(src, rest[..c].trim())?;
            let inner = instr(ctx, src, rest[c + 1..].trim(), registers)?;
            if inner.guard.is_some() {
                return Err(src.err(rest, "nested `when`"));
            }
            return Ok(Instr {
                guard: Some(guard),
                action: inner.action,
                line: src.line,
            });
        }
        "let" => {
            let Some(eq) = rest.find('=') else {
                return Err(src.err(rest, "expected `let NAME = EXPR`"));
            };
            let target = rest[..eq].trim();
            let (var, width) = match target.split_once(':') {
                Some((v, w)) => (
                    v.trim(),
                    Some(w.trim().parse().map_err(|_| src.err(w, "width must be an integer"))?),
                ),
                None => (target, None),
            };
            if !is_ident(var) {
                return Err(src.err(target, format!("bad variable `{var}`")));
            }
            Action::Let {
                var: var.to_string(),
                width,
                expr: ctx.expr(src, rest[eq + 1..].trim())?,
            }
        }
        "measure" => {
            let Some(arrow) = rest.rfind("->") else {
                return Err(src.err(rest, "expected `measure REGS BASIS -> NAME`"));
            };
            let (regs, basis) = ident_list(src, &rest[..arrow])?;
            let basis = basis.trim();
            let basis = match basis {
                "computational" => Basis::Computational,
                "hadamard" => Basis::Hadamard,
                "bell" => Basis::Bell,
                _ => match call(basis) {
                    Some(("equator", e)) => Basis::Equator(ctx.expr(src, e)?),
                    Some(("meridian", e)) => Basis::Meridian(ctx.expr(src, e)?),
                    _ => return Err(src.err(basis, format!("unknown basis `{basis}`"))),
                },
            };
            let out = rest[arrow + 2..].trim();
            if !is_ident(out) {
                return Err(src.err(out, "bad outcome name"));
            }
            Action::Measure {
                registers: regs,
                basis,
                out: out.to_string(),
            }
        }
        "apply" => {
            let (gate, mut after) = take_ident(rest);
            let mut args = Vec::new();
            if after.starts_with('(') {
                let close = find_top(after, ' ').map_or(after.len(), |k| k);
                let tok = &after[..close];
                let Some(("", inner)) = call(tok) else {
                    return Err(src.err(tok, "bad gate arguments"));
                };
                for a in split_top(inner, ',') {
                    args.push(ctx.expr(src, a)?);
                }
                after = &after[close..];
            }
            Action::Apply {
                gate: gate.to_string(),
                args,
                registers: names(src, after)?,
            }
        }
        "teleport_send" => {
            let Some(arrow) = rest.rfind("->") else {
                return Err(src.err(rest, "expected `teleport_send SOURCE LOCAL -> NAME`"));
            };
            let parts: Vec<&str> = rest[..arrow].split_whitespace().collect();
            let out = rest[arrow + 2..].trim();
            match parts.as_slice() {
                [s, l] if is_ident(s) && is_ident(l) && is_ident(out) => Action::TeleportSend {
                    source: s.to_string(),
                    local: l.to_string(),
                    out: out.to_string(),
                },
                _ => return Err(src.err(rest, "expected `teleport_send SOURCE LOCAL -> NAME`")),
            }
        }
        "teleport_receive" => match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
            [t, m] if is_ident(t) && is_ident(m) => Action::TeleportReceive {
                target: t.to_string(),
                msg: m.to_string(),
            },
            _ => return Err(src.err(rest, "expected `teleport_receive TARGET MESSAGE`")),
        },
        "send" => {
            let Some(k) = rest.find(" to ") else {
                return Err(src.err(rest, "expected `send ITEMS to AGENT[@K] [via ROUTE]`"));
            };
            let items = names(src, &rest[..k])?;
            let (dest, route) = via(ctx, src, &rest[k + 4..])?;
            let (agent, station) = match dest.split_once('@') {
                Some((a, k)) => (a, Some(k.parse().map_err(|_| src.err(k, "station must be an integer"))?)),
                None => (dest, None),
            };
            if !is_ident(agent) {
                return Err(src.err(dest, "bad destination"));
            }
            Action::Send {
                items,
                to: Destination {
                    agent: agent.to_string(),
                    station,
                },
                route,
            }
        }
        "broadcast" => Action::Broadcast { items: names(src, rest)? },
        "output" => {
            if is_ident(rest) && registers.contains(rest) {
                Action::Output(OutputItem::Register(rest.to_string()))
            } else {
                Action::Output(OutputItem::Value(ctx.expr(src, rest)?))
            }
        }
        "move" => {
            let (p, route) = via(ctx, src, rest)?;
            Action::Move {
                to: ctx.point_expr(src, p)?,
                route,
            }
        }
        _ => return Err(src.err(text, format!("unknown instruction `{word}`"))),
    };
    Ok(Instr {
        guard: None,
        action,
        line: src.line,
    })
}

fn model(ctx: &Ctx, s: &Section) -> PResult<OracleInputModel> {
    let mut events = Vec::new();
    let mut sufficient_sets = Vec::new();
    for src in &s.lines {
        let (k, v) = key_value(src, src.raw)?;
        match k {
            "event" => {
                let Some(c) = find_top(v, ':') else {
                    return Err(src.err(v, "expected `event = POINT : LABELS`"));
                };
                events.push(OracleEvent {
                    point: ctx.point(src, v[..c].trim())?,
                    labels: names(src, &v[c + 1..])?,
                });
            }
            "sufficient" => sufficient_sets.push(names(src, v)?),
            _ => return Err(src.err(k, format!("unknown key `{k}` in [model]"))),
        }
    }
    Ok(OracleInputModel {
        events,
        sufficient_sets,
    })
}

fn request(ctx: &Ctx, src: &Src) -> PResult<Analysis> {
    let toks = split_ws(src.raw);
    let mut o = Opts::new(*src, &toks[1..])?;
    let a = match toks[0] {
        "routing" => Analysis::Routing {
            expect: status(src, o.need("expect")?)?,
        },
        "clone_demand" => Analysis::CloneDemand {
            threshold: o.num("threshold")?.unwrap_or(crate::analyzers::DEFAULT_CLONE_THRESHOLD),
            expect: status(src, o.need("expect")?)?,
        },
        "summoning" => Analysis::Summoning {
            expect: status(src, o.need("expect")?)?,
        },
        "deducible" => Analysis::Deducible {
            model: o.need("model")?.to_string(),
            at: ctx.point(src, o.need("at")?)?,
            expect: status(src, o.need("expect")?)?,
        },
        "unveiling" => {
            let model = o.take("model").map(str::to_string);
            let commit = ctx.point(src, o.need("commit")?)?;
            let unveil = split_top(o.need("unveil")?, ',')
                .into_iter()
                .map(|p| ctx.point(src, p))
                .collect::<PResult<Vec<_>>>()?;
            let class = match o.take("models").unwrap_or("general") {
                "single" => ModelClass::Single,
                "general" => ModelClass::General,
                m => return Err(src.err(m, "models must be `single` or `general`")),
            };
            let grid = match o.num("grid")? {
                Some(g) if g >= 3.0 && g.fract() == 0.0 => g as usize,
                Some(_) => return Err(src.err(src.raw, "grid must be an integer of at least 3")),
                None => 41,
            };
            Analysis::Unveiling {
                model,
                commit,
                unveil,
                class,
                grid,
                expect: status(src, o.need("expect")?)?,
            }
        }
        "budget" => Analysis::Budget {
            strategy: o.need("strategy")?.to_string(),
            expect: status(src, o.need("expect")?)?,
        },
        "simulate" => {
            let strategy = o.need("strategy")?.to_string();
            let mode = match o.take("mode").unwrap_or("exact") {
                "exact" => SimMode::Exact,
                "mc" => {
                    let t = o.num("trials")?.unwrap_or(1000.0);
                    if t < 1.0 || t.fract() != 0.0 {
                        return Err(src.err(src.raw, "trials must be a positive integer"));
                    }
                    SimMode::MonteCarlo { trials: t as usize }
                }
                m => return Err(src.err(m, "mode must be `exact` or `mc`")),
            };
            let expect = SimExpect {
                success: o.num("success")?,
                tol: o.num("tol")?,
                min_fidelity: o.num("min_fidelity")?,
                error: o.take("error").map(str::to_string),
                predicate: match o.take("predicate") {
                    Some("satisfied") => Some(true),
                    Some("violated") => Some(false),
                    Some(p) => return Err(src.err(p, "predicate must be `satisfied` or `violated`")),
                    None => None,
                },
            };
            Analysis::Simulate { strategy, mode, expect }
        }
        k => return Err(src.err(k, format!("unknown analysis `{k}`"))),
    };
    o.finish()?;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RELAY: &str = "\
[scenario]
name = relay
dim = 1
seed = 3

[params]
L = 2

[points]
P1 = (0; 0)
Q1 = (2 * L; L)

[inputs]
a = classical at P1 uniform(0, 1)

[outputs]
b = at Q1 value a

[predicate]
exact

[strategy relay]
agent A at P1
  send a to B via auto
agent B at Q1
  when a == 1: output 1
  when a == 0: output 0

[analyze]
routing expect=feasible
simulate strategy=relay mode=mc trials=50 success=1 tol=0
";

    #[test]
    fn parses_a_small_scenario() {
        let s = parse_scenario(RELAY).unwrap();
        assert_eq!(s.name, "relay");
        assert_eq!(s.seed, 3);
        assert_eq!(s.points["Q1"], SpacetimePoint::new_1d(4.0, 2.0));
        assert_eq!(s.task.outputs[0].deps, vec!["a".to_string()]);
        let st = &s.strategies[0];
        assert_eq!(st.agents.len(), 2);
        assert_eq!(st.agents[1].program.len(), 2);
        assert!(st.agents[1].program[0].guard.is_some());
        assert_eq!(s.requests.len(), 2);
        assert!(matches!(
            s.requests[1].analysis,
            Analysis::Simulate {
                mode: SimMode::MonteCarlo { trials: 50 },
                ..
            }
        ));
    }

    #[test]
    fn empty_file_needs_points() {
        let e = parse_scenario("").unwrap_err();
        assert!(e.to_string().contains("missing required section [points]"), "{e}");
        let e = parse_scenario("# only a comment\n").unwrap_err();
        assert!(e.to_string().contains("[points]"));
    }

    #[test]
    fn unknown_section_is_reported_at_its_line() {
        let text = RELAY.replace("[params]", "[foo]");
        let ScenarioError::Parse(e) = parse_scenario(&text).unwrap_err() else { panic!() };
        assert_eq!(e.line, 6);
        assert_eq!(e.column, 1);
        assert!(e.message.contains("[foo]"));
    }

    #[test]
    fn unknown_keys_and_options_are_rejected() {
        let e = parse_scenario(&RELAY.replace("seed = 3", "colour = red")).unwrap_err();
        let ScenarioError::Parse(e) = e else { panic!() };
        assert_eq!((e.line, e.column), (4, 1));

        let e = parse_scenario(&RELAY.replace("expect=feasible", "expect=feasible speed=9")).unwrap_err();
        let ScenarioError::Parse(e) = e else { panic!() };
        assert!(e.message.contains("speed"));
        assert_eq!(e.column, 25);
    }

    #[test]
    fn expression_errors_carry_columns() {
        let e = parse_scenario(&RELAY.replace("value a", "value a +")).unwrap_err();
        let ScenarioError::Parse(e) = e else { panic!() };
        assert_eq!(e.line, 17);
        assert!(e.column > 14, "{e}");
    }

    #[test]
    fn validation_diagnostics_surface() {
        let e = parse_scenario(&RELAY.replace("uniform(0, 1)", "dist(0: 0.5, 1: 0.4)")).unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid(_)));
        assert!(e.to_string().contains("normalized"), "{e}");
    }

    #[test]
    fn references_are_checked() {
        let e = parse_scenario(&RELAY.replace("strategy=relay", "strategy=nope")).unwrap_err();
        assert!(e.to_string().contains("unknown strategy `nope`"));
        let e = parse_scenario(&RELAY.replace("send a to B", "send a to C")).unwrap_err();
        assert!(e.to_string().contains('C'), "{e}");
    }

    #[test]
    fn splitting_respects_parentheses() {
        assert_eq!(split_ws("at (1; 2, 3) grid(0, 1, 5)"), vec!["at", "(1; 2, 3)", "grid(0, 1, 5)"]);
        assert_eq!(split_top("max(a, b), c", ','), vec!["max(a, b)", "c"]);
    }
}
