//! Static necessary-condition checks that return verdicts with witnesses.

mod budget;
mod clone;
mod commitment;
mod routing;
mod summoning;

use serde::{Deserialize, Serialize};

pub use budget::{budget_audit, random_access_optimum, LedgerRow};
pub use clone::{clone_demand_check, DEFAULT_CLONE_THRESHOLD};
pub use commitment::{
    commitment_deducibility, unveiling_consistency_check, ModelClass, OracleEvent, OracleInputModel, UnveilSearch,
};
pub use routing::classical_routing_check;
pub use summoning::{summoning_check, CallRoute};

use crate::geometry::SpacetimePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    Infeasible,
    Unresolved,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unresolved => "unresolved",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "feasible" => Ok(Status::Feasible),
            "infeasible" => Ok(Status::Infeasible),
            "unresolved" => Ok(Status::Unresolved),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

/// One input routed to one output under one point-rule outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedDependency {
    pub input: String,
    pub output: String,
    pub path: Vec<SpacetimePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Paths {
        routes: Vec<RoutedDependency>,
    },
    Blocked {
        input: String,
        output: String,
        from: SpacetimePoint,
        to: SpacetimePoint,
        reason: String,
    },
    ClonePair {
        register: String,
        outputs: [String; 2],
        points: [SpacetimePoint; 2],
    },
    NoClonePair {
        /// Output pairs sharing a register, with why each is harmless.
        checked: Vec<String>,
    },
    SummoningTable {
        carrier: Option<SpacetimePoint>,
        routes: Vec<CallRoute>,
    },
    SummoningConflict {
        calls: [String; 2],
        call_points: [Vec<SpacetimePoint>; 2],
        return_points: [SpacetimePoint; 2],
    },
    Deduction {
        set: Vec<String>,
        routes: Vec<RoutedDependency>,
    },
    NotDeducible {
        /// For each sufficient set, the labels that cannot reach the point.
        missing: Vec<Vec<String>>,
    },
    Counterexample {
        model: OracleInputModel,
    },
    Implication {
        models_checked: usize,
    },
    Ledger {
        rows: Vec<LedgerRow>,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub analysis: String,
    pub status: Status,
    pub witness: Witness,
    pub rationale: String,
}

impl Verdict {
    pub(crate) fn new(analysis: &str, status: Status, witness: Witness, rationale: impl Into<String>) -> Self {
        Self {
            analysis: analysis.to_string(),
            status,
            witness,
            rationale: rationale.into(),
        }
    }
}
