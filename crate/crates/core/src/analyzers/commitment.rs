use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{RoutedDependency, Status, Verdict, Witness};
use crate::geometry::{find_causal_path, in_causal_future, PathOutcome, Region, RoutingConfig, SpacetimePoint};

/// One oracle delivery: information pieces available at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEvent {
    pub point: SpacetimePoint,
    pub labels: Vec<String>,
}

/// How Alice comes to know the bit `b`: oracle deliveries, and the label
/// sets that together determine it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInputModel {
    pub events: Vec<OracleEvent>,
    pub sufficient_sets: Vec<Vec<String>>,
}

impl OracleInputModel {
    /// One oracle handing over `b` at `point`.
    pub fn single(point: SpacetimePoint) -> Self {
        Self {
            events: vec![OracleEvent {
                point,
                labels: vec!["b".into()],
            }],
            sufficient_sets: vec![vec!["b".into()]],
        }
    }

    /// `b` handed over independently at each point.
    pub fn redundant(points: impl IntoIterator<Item = SpacetimePoint>) -> Self {
        Self {
            events: points
                .into_iter()
                .map(|point| OracleEvent {
                    point,
                    labels: vec!["b".into()],
                })
                .collect(),
            sufficient_sets: vec![vec!["b".into()]],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.sufficient_sets.is_empty() {
            return Err("no sufficient sets".into());
        }
        let labels: BTreeSet<&str> = self.events.iter().flat_map(|e| e.labels.iter().map(String::as_str)).collect();
        for s in &self.sufficient_sets {
            if let Some(l) = s.iter().find(|l| !labels.contains(l.as_str())) {
                return Err(format!("label `{l}` appears in a sufficient set but in no event"));
            }
        }
        Ok(())
    }
}

const DEDUCE: &str = "commitment_deducibility";

/// Can `b` be deduced at `p` by bringing together the labels of some
/// sufficient set?
pub fn commitment_deducibility(
    model: &OracleInputModel,
    p: &SpacetimePoint,
    regions: &[Region],
    cfg: &RoutingConfig,
) -> Verdict {
    if let Err(e) = model.validate() {
        return Verdict::new(DEDUCE, Status::Unresolved, Witness::None, format!("invalid model: {e}"));
    }
    let mut missing_all = Vec::new();
    let mut unresolved = false;
    for set in &model.sufficient_sets {
        let mut routes = Vec::new();
        let mut missing = Vec::new();
        for label in set {
            let mut found = None;
            for e in model.events.iter().filter(|e| e.labels.contains(label)) {
                match find_causal_path(&e.point, p, regions, cfg) {
                    Ok(PathOutcome::Found(path)) => {
                        found = Some(path);
                        break;
                    }
                    Ok(PathOutcome::Unresolved { .. }) => unresolved = true,
                    _ => {}
                }
            }
            match found {
                Some(path) => routes.push(RoutedDependency {
                    input: label.clone(),
                    output: p.to_string(),
                    path,
                }),
                None => missing.push(label.clone()),
            }
        }
        if missing.is_empty() {
            return Verdict::new(
                DEDUCE,
                Status::Feasible,
                Witness::Deduction { set: set.clone(), routes },
                format!("every piece of {{{}}} reaches {p}", set.join(", ")),
            );
        }
        missing_all.push(missing);
    }
    if unresolved {
        return Verdict::new(DEDUCE, Status::Unresolved, Witness::None, "some oracle routes were unresolved");
    }
    Verdict::new(
        DEDUCE,
        Status::Infeasible,
        Witness::NotDeducible { missing: missing_all },
        format!("no sufficient set can be assembled at {p}"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    /// One oracle delivering `b` at one point.
    Single,
    /// Any number of oracles, each delivering `b`.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnveilSearch {
    pub class: ModelClass,
    /// Grid points per axis; the grid is centred on the commit point.
    pub grid: usize,
}

impl Default for UnveilSearch {
    fn default() -> Self {
        Self {
            class: ModelClass::General,
            grid: 41,
        }
    }
}

const UNVEIL: &str = "unveiling_consistency";

fn deducible(model: &OracleInputModel, p: &SpacetimePoint, regions: &[Region], cfg: &RoutingConfig) -> Option<bool> {
    match commitment_deducibility(model, p, regions, cfg).status {
        Status::Feasible => Some(true),
        Status::Infeasible => Some(false),
        Status::Unresolved => None,
    }
}

fn grid_points(commit: &SpacetimePoint, unveil: &[SpacetimePoint], n: usize) -> Vec<SpacetimePoint> {
    let dim = commit.dim();
    let extent = unveil
        .iter()
        .flat_map(|u| {
            std::iter::once((u.t() - commit.t()).abs()).chain((0..dim).map(move |k| (u.x()[k] - commit.x()[k]).abs()))
        })
        .fold(0.0, f64::max);
    let extent = if extent > 0.0 { extent } else { 1.0 };
    let half = (n.max(2) - 1) / 2;
    let h = extent / half as f64;
    let offsets: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * h).collect();
    let mut out = Vec::new();
    // Spatial grid along the first axis; other axes stay at the commit point.
    for dt in &offsets {
        for dx in &offsets {
            let mut x = commit.x().to_vec();
            x[0] += dx;
            out.push(SpacetimePoint::new(commit.t() + dt, x).expect("finite grid"));
        }
    }
    out
}

/// Does every valid unveiling at `unveil` imply that `b` was available at
/// `commit`?
///
/// With a `model`, that model is checked first. Then a grid of oracle
/// placements is searched for a model that unveils validly but is not
/// committed at `commit`.
pub fn unveiling_consistency_check(
    model: Option<&OracleInputModel>,
    unveil: &[SpacetimePoint],
    commit: &SpacetimePoint,
    search: &UnveilSearch,
    regions: &[Region],
    cfg: &RoutingConfig,
) -> Verdict {
    if let Some(m) = model {
        for u in unveil {
            match deducible(m, u, regions, cfg) {
                Some(true) => {}
                Some(false) => {
                    return Verdict::new(
                        UNVEIL,
                        Status::Unresolved,
                        Witness::None,
                        format!("the model cannot unveil at {u}; it is not a valid unveiling"),
                    )
                }
                None => return Verdict::new(UNVEIL, Status::Unresolved, Witness::None, "unresolved routing"),
            }
        }
        if deducible(m, commit, regions, cfg) == Some(false) {
            return Verdict::new(
                UNVEIL,
                Status::Infeasible,
                Witness::Counterexample { model: m.clone() },
                format!("the model unveils at every point but `b` is not deducible at {commit}"),
            );
        }
    }

    let grid = grid_points(commit, unveil, search.grid);
    let reaches = |g: &SpacetimePoint, p: &SpacetimePoint| -> bool {
        matches!(find_causal_path(g, p, regions, cfg), Ok(PathOutcome::Found(_)))
    };
    let mut checked = 0usize;
    match search.class {
        ModelClass::Single => {
            for g in &grid {
                checked += 1;
                if unveil.iter().all(|u| reaches(g, u)) && !reaches(g, commit) {
                    return Verdict::new(
                        UNVEIL,
                        Status::Infeasible,
                        Witness::Counterexample {
                            model: OracleInputModel::single(g.clone()),
                        },
                        format!("a single oracle at {g} unveils validly but is not committed at {commit}"),
                    );
                }
            }
        }
        ModelClass::General => {
            // Each unveil point takes its own oracle outside the causal past
            // of the commit point, preferring ones in its causal future and
            // then the earliest.
            let mut chosen = Vec::new();
            for u in unveil {
                let best = grid
                    .iter()
                    .filter(|g| reaches(g, u) && !reaches(g, commit))
                    .min_by(|a, b| {
                        let fa = in_causal_future(commit, a).unwrap_or(false);
                        let fb = in_causal_future(commit, b).unwrap_or(false);
                        fb.cmp(&fa)
                            .then(a.t().total_cmp(&b.t()))
                            .then(a.x()[0].total_cmp(&b.x()[0]))
                    });
                checked += grid.len();
                match best {
                    Some(g) => chosen.push(g.clone()),
                    None => {
                        chosen.clear();
                        break;
                    }
                }
            }
            if !chosen.is_empty() {
                let m = OracleInputModel::redundant(chosen.clone());
                let valid = unveil.iter().all(|u| deducible(&m, u, regions, cfg) == Some(true));
                if valid && deducible(&m, commit, regions, cfg) == Some(false) {
                    let pts = chosen.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
                    return Verdict::new(
                        UNVEIL,
                        Status::Infeasible,
                        Witness::Counterexample { model: m },
                        format!("oracles at {pts} unveil validly, yet `b` is not deducible at {commit}"),
                    );
                }
            }
        }
    }
    Verdict::new(
        UNVEIL,
        Status::Feasible,
        Witness::Implication { models_checked: checked },
        format!(
            "no {} oracle model on the {}-point grid unveils without being committed at {commit}",
            match search.class {
                ModelClass::Single => "single",
                ModelClass::General => "general",
            },
            search.grid
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{causal_relation, CausalKind};
    use proptest::prelude::*;

    fn p(t: f64, x: f64) -> SpacetimePoint {
        SpacetimePoint::new_1d(t, x)
    }

    fn cfg() -> RoutingConfig {
        RoutingConfig::default()
    }

    #[test]
    fn single_oracle_in_past_cone_is_deducible() {
        let m = OracleInputModel::single(p(-1.0, 0.5));
        assert_eq!(commitment_deducibility(&m, &p(0.0, 0.0), &[], &cfg()).status, Status::Feasible);
        let at = OracleInputModel::single(p(0.0, 0.0));
        assert_eq!(commitment_deducibility(&at, &p(0.0, 0.0), &[], &cfg()).status, Status::Feasible);
    }

    #[test]
    fn oracles_on_the_rays_are_not_deducible_at_the_apex() {
        let m = OracleInputModel::redundant([p(2.5, -2.5), p(2.5, 2.5)]);
        let v = commitment_deducibility(&m, &p(0.0, 0.0), &[], &cfg());
        assert_eq!(v.status, Status::Infeasible);
        assert_eq!(commitment_deducibility(&m, &p(5.0, -5.0), &[], &cfg()).status, Status::Feasible);
        assert_eq!(commitment_deducibility(&m, &p(5.0, 5.0), &[], &cfg()).status, Status::Feasible);
    }

    #[test]
    fn split_information_needs_both_pieces() {
        let m = OracleInputModel {
            events: vec![
                OracleEvent {
                    point: p(0.0, -1.0),
                    labels: vec!["k".into()],
                },
                OracleEvent {
                    point: p(0.0, 1.0),
                    labels: vec!["c".into()],
                },
            ],
            sufficient_sets: vec![vec!["k".into(), "c".into()]],
        };
        assert_eq!(commitment_deducibility(&m, &p(0.5, -1.0), &[], &cfg()).status, Status::Infeasible);
        assert_eq!(commitment_deducibility(&m, &p(1.0, 0.0), &[], &cfg()).status, Status::Feasible);
    }

    #[test]
    fn unveiling_single_models_commit_general_models_do_not() {
        let (c, q1, q2) = (p(0.0, 0.0), p(5.0, -5.0), p(5.0, 5.0));
        let single = UnveilSearch {
            class: ModelClass::Single,
            grid: 41,
        };
        let v = unveiling_consistency_check(None, &[q1.clone(), q2.clone()], &c, &single, &[], &cfg());
        assert_eq!(v.status, Status::Feasible, "{}", v.rationale);
        let v = unveiling_consistency_check(None, &[q1.clone(), q2.clone()], &c, &UnveilSearch::default(), &[], &cfg());
        assert_eq!(v.status, Status::Infeasible);
        let Witness::Counterexample { model } = v.witness else { panic!() };
        for (e, q) in model.events.iter().zip([&q1, &q2]) {
            // On the light ray from the commit point towards the unveil point.
            assert_eq!(causal_relation(&c, &e.point).unwrap().kind, CausalKind::Lightlike);
            assert_eq!(causal_relation(&e.point, q).unwrap().kind, CausalKind::Lightlike);
            assert!(e.point.t() > c.t());
        }
    }

    #[test]
    fn unveiling_at_the_commit_point_is_trivially_committed() {
        let c = p(0.0, 0.0);
        let v = unveiling_consistency_check(None, std::slice::from_ref(&c), &c, &UnveilSearch::default(), &[], &cfg());
        assert_eq!(v.status, Status::Feasible);
    }

    proptest! {
        #[test]
        fn adding_oracle_events_never_breaks_deducibility(
            base in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..4),
            extra in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..4),
            target in (-5.0f64..5.0, -5.0f64..5.0),
        ) {
            let target = p(target.0, target.1);
            let m = OracleInputModel::redundant(base.iter().map(|&(t, x)| p(t, x)));
            let mut bigger = m.clone();
            bigger.events.extend(extra.iter().map(|&(t, x)| OracleEvent { point: p(t, x), labels: vec!["b".into()] }));
            let before = commitment_deducibility(&m, &target, &[], &cfg()).status;
            let after = commitment_deducibility(&bigger, &target, &[], &cfg()).status;
            if before == Status::Feasible {
                prop_assert_eq!(after, Status::Feasible);
            }
        }
    }
}
