use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{RoutedDependency, Status, Verdict, Witness};
use crate::geometry::{find_causal_path, PathOutcome, RoutingConfig, SpacetimePoint};
use crate::tasks::{enumerate_assignments, DataRule, InputAssignment, TaskSpec};

const NAME: &str = "classical_routing";

const QUANTUM_NOTE: &str = "this is a necessary condition only for strategies that move the depended-on data \
itself; quantum payloads can still be delivered by teleportation with predistributed entanglement";

/// Every input an output depends on, including its own quantum source.
pub(crate) fn dependencies(task: &TaskSpec, output: usize) -> Vec<String> {
    let o = &task.outputs[output];
    let mut deps: Vec<String> = o.deps.clone();
    if let DataRule::Quantum(src) = &o.data {
        if !deps.contains(src) {
            deps.push(src.clone());
        }
    }
    deps.retain(|d| task.input(d).is_some());
    deps
}

pub(crate) fn assignments(task: &TaskSpec) -> Result<Vec<InputAssignment>, String> {
    enumerate_assignments(task, &mut ChaCha8Rng::seed_from_u64(0)).map_err(|e| e.to_string())
}

/// Can every input reach every output that depends on it, for every
/// possible placement of points, without crossing an impenetrable region?
pub fn classical_routing_check(task: &TaskSpec, cfg: &RoutingConfig) -> Verdict {
    let all = match assignments(task) {
        Ok(a) => a,
        Err(e) => return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("cannot enumerate inputs: {e}")),
    };
    let mut routes = Vec::new();
    let mut seen: BTreeSet<(String, String, String, String)> = BTreeSet::new();
    let mut unresolved = None;
    for a in &all {
        let lookup = a.lookup(task);
        for (k, out) in task.outputs.iter().enumerate() {
            let to = match out.point.eval(&lookup) {
                Ok(p) => p,
                Err(e) => {
                    return Verdict::new(
                        NAME,
                        Status::Unresolved,
                        Witness::None,
                        format!("point of output `{}` cannot be evaluated: {e}", out.name),
                    )
                }
            };
            for dep in dependencies(task, k) {
                let input = task.input(&dep).expect("filtered");
                let from: SpacetimePoint = a.points[&dep].clone();
                if let Some(region) = &input.inside_region {
                    return Verdict::new(
                        NAME,
                        Status::Infeasible,
                        Witness::Blocked {
                            input: dep.clone(),
                            output: out.name.clone(),
                            from,
                            to,
                            reason: format!("input arrives inside excluded region `{region}`"),
                        },
                        format!(
                            "output `{}` depends on `{dep}`, which Alice cannot access from outside `{region}`",
                            out.name
                        ),
                    );
                }
                let key = (dep.clone(), out.name.clone(), from.to_string(), to.to_string());
                if !seen.insert(key) {
                    continue;
                }
                match find_causal_path(&from, &to, &task.regions, cfg) {
                    Ok(PathOutcome::Found(path)) => routes.push(RoutedDependency {
                        input: dep.clone(),
                        output: out.name.clone(),
                        path,
                    }),
                    Ok(PathOutcome::NotFound) => {
                        return Verdict::new(
                            NAME,
                            Status::Infeasible,
                            Witness::Blocked {
                                input: dep.clone(),
                                output: out.name.clone(),
                                reason: "no causal path avoiding impenetrable regions".into(),
                                from,
                                to,
                            },
                            format!("`{dep}` cannot reach output `{}`; {QUANTUM_NOTE}", out.name),
                        )
                    }
                    Ok(PathOutcome::Unresolved { resolution }) => {
                        unresolved.get_or_insert(format!(
                            "no path from `{dep}` at {from} to `{}` at {to} found at resolution {resolution}",
                            out.name
                        ));
                    }
                    Err(e) => {
                        return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("geometry error: {e}"))
                    }
                }
            }
        }
    }
    if let Some(why) = unresolved {
        return Verdict::new(NAME, Status::Unresolved, Witness::Paths { routes }, why);
    }
    let n = routes.len();
    Verdict::new(
        NAME,
        Status::Feasible,
        Witness::Paths { routes },
        format!("{n} input-to-output routes found; {QUANTUM_NOTE}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{in_causal_future, Region, SpacetimeBox, Span};
    use crate::tasks::fixtures;

    #[test]
    fn signalling_depends_on_the_cone() {
        let ok = classical_routing_check(&fixtures::signalling(SpacetimePoint::new_1d(4.0, 2.0)), &RoutingConfig::default());
        assert_eq!(ok.status, Status::Feasible);
        let bad = classical_routing_check(&fixtures::signalling(SpacetimePoint::new_1d(1.0, 2.0)), &RoutingConfig::default());
        assert_eq!(bad.status, Status::Infeasible);
        assert!(matches!(bad.witness, Witness::Blocked { .. }));
    }

    #[test]
    fn witnesses_revalidate() {
        let v = classical_routing_check(&fixtures::summoning(10.0, 1.0, 0.5, 5), &RoutingConfig::default());
        assert_eq!(v.status, Status::Feasible);
        let Witness::Paths { routes } = v.witness else { panic!() };
        assert!(!routes.is_empty());
        for r in routes {
            for w in r.path.windows(2) {
                assert!(in_causal_future(&w[0], &w[1]).unwrap());
            }
        }
    }

    #[test]
    fn wall_blocks_and_input_inside_region_is_inaccessible() {
        let mut task = fixtures::signalling(SpacetimePoint::new_1d(10.0, 0.0));
        let wall = SpacetimeBox::new(Span::new(-100.0, 100.0), vec![Span::new(-0.5, 0.5)]).unwrap();
        task.inputs[0].point = crate::tasks::PointExpr::fixed(SpacetimePoint::new_1d(0.0, -2.0));
        task.regions.push(Region::impenetrable("wall", vec![wall]).unwrap());
        assert_eq!(classical_routing_check(&task, &RoutingConfig::default()).status, Status::Infeasible);

        let mut task = fixtures::signalling(SpacetimePoint::new_1d(4.0, 0.0));
        task.inputs[0].inside_region = Some("tag".into());
        let v = classical_routing_check(&task, &RoutingConfig::default());
        assert_eq!(v.status, Status::Infeasible);
        assert!(v.rationale.contains("tag"));
    }

    #[test]
    fn colocated_inputs_and_outputs_are_feasible() {
        let task = fixtures::signalling(SpacetimePoint::new_1d(0.0, 0.0));
        assert_eq!(classical_routing_check(&task, &RoutingConfig::default()).status, Status::Feasible);
    }
}
