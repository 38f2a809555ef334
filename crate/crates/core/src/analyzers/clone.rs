use super::routing::assignments;
use super::{Status, Verdict, Witness};
use crate::geometry::{causal_relation, CausalKind};
use crate::tasks::{DataRule, Payload, SuccessPredicate, TaskSpec};

/// Fidelity above which an output counts as demanding a copy.
pub const DEFAULT_CLONE_THRESHOLD: f64 = 0.99;

const NAME: &str = "clone_demand";

fn demanded_fidelity(task: &TaskSpec) -> f64 {
    match task.predicate {
        SuccessPredicate::QuantumFidelity { threshold } => threshold,
        _ => 1.0,
    }
}

/// Flag two outputs at spacelike points that both demand the same unknown
/// quantum input.
pub fn clone_demand_check(task: &TaskSpec, threshold: f64) -> Verdict {
    let theta = demanded_fidelity(task);
    let mut pairs = Vec::new();
    for (i, a) in task.outputs.iter().enumerate() {
        for b in &task.outputs[i + 1..] {
            match (&a.data, &b.data) {
                (DataRule::Quantum(x), DataRule::Quantum(y)) if x == y => pairs.push((a, b, x.clone())),
                _ => {}
            }
        }
    }
    let mut checked = Vec::new();
    for (a, b, reg) in &pairs {
        let label = format!("{} / {} on `{reg}`", a.name, b.name);
        let unknown = match task.input(reg).map(|i| &i.payload) {
            Some(Payload::Quantum(q)) => q.is_unknown(),
            _ => false,
        };
        if !unknown {
            checked.push(format!("{label}: state known in advance, copies can be prepared"));
            continue;
        }
        if theta <= threshold {
            checked.push(format!("{label}: demanded fidelity {theta} is at most {threshold}"));
            continue;
        }
        let all = match assignments(task) {
            Ok(v) => v,
            Err(e) => {
                return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("cannot enumerate inputs: {e}"))
            }
        };
        let mut spacelike = None;
        for asg in &all {
            let lookup = asg.lookup(task);
            let (Ok(p), Ok(q)) = (a.point.eval(&lookup), b.point.eval(&lookup)) else {
                return Verdict::new(NAME, Status::Unresolved, Witness::None, format!("cannot evaluate points of {label}"));
            };
            match causal_relation(&p, &q) {
                Ok(r) if r.kind == CausalKind::Spacelike => {
                    spacelike = Some((p, q));
                    break;
                }
                Ok(_) => {}
                Err(e) => return Verdict::new(NAME, Status::Unresolved, Witness::None, e.to_string()),
            }
        }
        match spacelike {
            Some((p, q)) => {
                return Verdict::new(
                    NAME,
                    Status::Infeasible,
                    Witness::ClonePair {
                        register: reg.clone(),
                        outputs: [a.name.clone(), b.name.clone()],
                        points: [p.clone(), q.clone()],
                    },
                    format!(
                        "outputs `{}` at {p} and `{}` at {q} are spacelike separated and both demand the unknown \
                         state `{reg}` with fidelity {theta}",
                        a.name, b.name
                    ),
                )
            }
            None => checked.push(format!("{label}: never spacelike, the state can be relayed")),
        }
    }
    let rationale = if pairs.is_empty() {
        "no two outputs demand the same quantum input".to_string()
    } else {
        format!("{} output pair(s) checked, none demands a copy", pairs.len())
    };
    Verdict::new(NAME, Status::Feasible, Witness::NoClonePair { checked }, rationale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{causal_relation, SpacetimePoint};
    use crate::tasks::{fixtures, PointExpr, QuantumPrep, QuantumSource};

    #[test]
    fn cloning_task_is_flagged_with_spacelike_witness() {
        let v = clone_demand_check(&fixtures::cloning(), DEFAULT_CLONE_THRESHOLD);
        assert_eq!(v.status, Status::Infeasible);
        let Witness::ClonePair { outputs, points, .. } = v.witness else { panic!() };
        assert_eq!(outputs, ["J1".to_string(), "J2".to_string()]);
        assert_eq!(causal_relation(&points[0], &points[1]).unwrap().kind, CausalKind::Spacelike);
    }

    #[test]
    fn timelike_outputs_are_not_flagged() {
        let mut t = fixtures::cloning();
        t.outputs[1].point = PointExpr::fixed(SpacetimePoint::new_1d(20.0, -4.0));
        assert_eq!(clone_demand_check(&t, DEFAULT_CLONE_THRESHOLD).status, Status::Feasible);
    }

    #[test]
    fn known_states_and_loose_thresholds_are_not_flagged() {
        let mut t = fixtures::cloning();
        t.inputs[0].payload = Payload::Quantum(QuantumSource {
            dim: 2,
            prep: QuantumPrep::Basis(1),
        });
        assert_eq!(clone_demand_check(&t, DEFAULT_CLONE_THRESHOLD).status, Status::Feasible);

        let mut t = fixtures::cloning();
        t.predicate = SuccessPredicate::QuantumFidelity { threshold: 0.8 };
        assert_eq!(clone_demand_check(&t, DEFAULT_CLONE_THRESHOLD).status, Status::Feasible);
    }
}
