use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::clone::{clone_demand_check, DEFAULT_CLONE_THRESHOLD};
use super::routing::{assignments, dependencies};
use super::{Status, Verdict, Witness};
use crate::geometry::{find_causal_path, PathOutcome, RoutingConfig, SpacetimePoint};
use crate::tasks::{DataRule, Payload, TaskSpec};

const NAME: &str = "summoning";

/// How the state reaches the return point for one call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRoute {
    /// Call values, as `name = value`.
    pub call: String,
    pub call_points: Vec<SpacetimePoint>,
    pub return_point: SpacetimePoint,
    /// Classical teleportation data from the quantum input to the return point.
    pub message_path: Vec<SpacetimePoint>,
    /// Each call point into the carrier.
    pub call_paths: Vec<Vec<SpacetimePoint>>,
    /// Carrier of the entangled half, on to the return point.
    pub carrier_path: Vec<SpacetimePoint>,
}

struct Row {
    call: String,
    calls: Vec<SpacetimePoint>,
    ret: SpacetimePoint,
    message: Vec<SpacetimePoint>,
}

enum Reach {
    Yes(Vec<SpacetimePoint>),
    No,
    Unknown,
}

fn reach(task: &TaskSpec, cfg: &RoutingConfig, a: &SpacetimePoint, b: &SpacetimePoint) -> Reach {
    match find_causal_path(a, b, &task.regions, cfg) {
        Ok(PathOutcome::Found(p)) => Reach::Yes(p),
        Ok(PathOutcome::NotFound) => Reach::No,
        _ => Reach::Unknown,
    }
}

fn shape(task: &TaskSpec) -> Result<(String, usize), String> {
    let unknown: Vec<&str> = task
        .inputs
        .iter()
        .filter(|i| matches!(&i.payload, Payload::Quantum(q) if q.is_unknown()))
        .map(|i| i.name.as_str())
        .collect();
    let [src] = unknown.as_slice() else {
        return Err(format!("expected one unknown quantum input, found {}", unknown.len()));
    };
    let outs: Vec<usize> = task
        .outputs
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(&o.data, DataRule::Quantum(s) if s == src))
        .map(|(k, _)| k)
        .collect();
    match outs.as_slice() {
        [k] => Ok((src.to_string(), *k)),
        _ => Err(format!("expected one output returning `{src}`, found {}", outs.len())),
    }
}

/// Carrier candidates: the earliest common future of the call points in
/// `1 + 1`, heuristic points in `3 + 1`.
fn candidates(rows: &[Row], dim: usize) -> Vec<SpacetimePoint> {
    let calls: Vec<&SpacetimePoint> = rows.iter().flat_map(|r| r.calls.iter()).collect();
    if calls.is_empty() {
        return rows.iter().map(|r| r.ret.clone()).take(1).collect();
    }
    if dim == 1 {
        let u = calls.iter().map(|p| p.t() - p.x()[0]).fold(f64::NEG_INFINITY, f64::max);
        let v = calls.iter().map(|p| p.t() + p.x()[0]).fold(f64::NEG_INFINITY, f64::max);
        return vec![SpacetimePoint::new_1d((u + v) / 2.0, (v - u) / 2.0)];
    }
    let mut out: Vec<SpacetimePoint> = Vec::new();
    let n = calls.len() as f64;
    let centre: Vec<f64> = (0..dim).map(|k| calls.iter().map(|p| p.x()[k]).sum::<f64>() / n).collect();
    let t = calls
        .iter()
        .map(|p| {
            let d: f64 = (0..dim).map(|k| (p.x()[k] - centre[k]).powi(2)).sum::<f64>().sqrt();
            p.t() + d
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if let Ok(p) = SpacetimePoint::new(t, centre) {
        out.push(p);
    }
    for c in calls {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Can the unknown state be returned at whichever point the call selects?
pub fn summoning_check(task: &TaskSpec, cfg: &RoutingConfig) -> Verdict {
    let clone = clone_demand_check(task, DEFAULT_CLONE_THRESHOLD);
    if clone.status == Status::Infeasible {
        return Verdict::new(NAME, Status::Infeasible, clone.witness, clone.rationale);
    }
    let (src, out) = match shape(task) {
        Ok(s) => s,
        Err(e) => return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("task shape mismatch: {e}")),
    };
    let all = match assignments(task) {
        Ok(a) => a,
        Err(e) => return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("cannot enumerate inputs: {e}")),
    };
    let output = &task.outputs[out];
    let mut call_inputs: BTreeSet<String> = dependencies(task, out).into_iter().filter(|d| *d != src).collect();
    call_inputs.extend(output.point.free_vars().into_iter().filter(|v| task.input(v).is_some()));

    let mut rows: Vec<Row> = Vec::new();
    let mut unresolved: Option<String> = None;
    for a in &all {
        let ret = match output.point.eval(&a.lookup(task)) {
            Ok(p) => p,
            Err(e) => return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("return point: {e}")),
        };
        let calls: Vec<SpacetimePoint> = call_inputs.iter().map(|c| a.points[c].clone()).collect();
        if rows.iter().any(|r| r.ret == ret && r.calls == calls) {
            continue;
        }
        let call = call_inputs
            .iter()
            .map(|c| format!("{c} = {}", a.values.get(c).copied().unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join(", ");
        let from = &a.points[&src];
        let message = match reach(task, cfg, from, &ret) {
            Reach::Yes(p) => p,
            Reach::No => {
                return Verdict::new(
                    NAME,
                    Status::Infeasible,
                    Witness::Blocked {
                        input: src.clone(),
                        output: output.name.clone(),
                        from: from.clone(),
                        to: ret,
                        reason: "the return point is outside the causal future of the state".into(),
                    },
                    format!("for call {call} no signal from `{src}` reaches the return point"),
                )
            }
            Reach::Unknown => {
                unresolved.get_or_insert(format!("routing from `{src}` for call {call} unresolved"));
                vec![]
            }
        };
        for c in &calls {
            if let Reach::No = reach(task, cfg, c, &ret) {
                return Verdict::new(
                    NAME,
                    Status::Infeasible,
                    Witness::Blocked {
                        input: call_inputs.iter().next().cloned().unwrap_or_default(),
                        output: output.name.clone(),
                        from: c.clone(),
                        to: ret,
                        reason: "the call cannot reach its own return point".into(),
                    },
                    format!("for call {call} the return point is not in the causal future of the call"),
                );
            }
        }
        rows.push(Row {
            call,
            calls,
            ret,
            message,
        });
    }

    // Any strategy must, for two different return points, let one call
    // reach the other return point: otherwise both points would have to be
    // served from spacelike data, which amounts to cloning.
    let covers = |x: &Row, y: &Row| x.calls.iter().all(|c| !matches!(reach(task, cfg, c, &y.ret), Reach::No));
    for (i, x) in rows.iter().enumerate() {
        for y in &rows[i + 1..] {
            if x.ret == y.ret || covers(x, y) || covers(y, x) {
                continue;
            }
            return Verdict::new(
                NAME,
                Status::Infeasible,
                Witness::SummoningConflict {
                    calls: [x.call.clone(), y.call.clone()],
                    call_points: [x.calls.clone(), y.calls.clone()],
                    return_points: [x.ret.clone(), y.ret.clone()],
                },
                format!(
                    "calls {} and {} each arrive too late to redirect the other's return point; \
                     serving both would require a copy of `{src}`",
                    x.call, y.call
                ),
            );
        }
    }

    for k in candidates(&rows, task.dim) {
        if task.regions.iter().any(|r| r.contains_interior(&k)) {
            continue;
        }
        let mut routes = Vec::new();
        let mut ok = true;
        for r in &rows {
            let mut call_paths = Vec::new();
            for c in &r.calls {
                match reach(task, cfg, c, &k) {
                    Reach::Yes(p) => call_paths.push(p),
                    _ => ok = false,
                }
            }
            let carrier_path = match reach(task, cfg, &k, &r.ret) {
                Reach::Yes(p) => p,
                _ => {
                    ok = false;
                    vec![]
                }
            };
            if !ok {
                break;
            }
            routes.push(CallRoute {
                call: r.call.clone(),
                call_points: r.calls.clone(),
                return_point: r.ret.clone(),
                message_path: r.message.clone(),
                call_paths,
                carrier_path,
            });
        }
        if ok {
            if let Some(why) = unresolved {
                return Verdict::new(NAME, Status::Unresolved, Witness::None, why);
            }
            return Verdict::new(
                NAME,
                Status::Feasible,
                Witness::SummoningTable {
                    carrier: Some(k.clone()),
                    routes,
                },
                format!(
                    "teleport `{src}` at its arrival and broadcast the classical data; a carrier of the entangled \
                     half at {k} learns every call and reaches every return point"
                ),
            );
        }
    }
    Verdict::new(
        NAME,
        Status::Unresolved,
        Witness::None,
        unresolved.unwrap_or_else(|| {
            "pairwise conditions hold but no single carrier point serves every call".to_string()
        }),
    )
}
