//! Scenario files: a task, candidate strategies, oracle models and the
//! analyses to run, in a line-oriented text format.
//!
//! ```text
//! [scenario]
//! name = relay
//! dim = 1
//!
//! [points]
//! P1 = (0; 0)
//! Q1 = (4; 2)
//!
//! [inputs]
//! a = classical at P1 uniform(0, 1)
//!
//! [outputs]
//! b = at Q1 value a
//!
//! [predicate]
//! exact
//!
//! [strategy relay]
//! agent A at P1
//!   send a to B
//! agent B at Q1
//!   output a
//!
//! [analyze]
//! routing expect=feasible
//! simulate strategy=relay mode=exact success=1
//! ```
//!
//! The files under `catalog/` cover every construct.

mod catalog;
mod parse;
mod report;
mod run;

use std::collections::BTreeMap;

use crate::analyzers::{ModelClass, OracleInputModel, Status};
use crate::engine::Strategy;
use crate::geometry::SpacetimePoint;
use crate::tasks::TaskSpec;

pub use catalog::{catalog_names, catalog_source, load_catalog};
pub use parse::{parse_scenario, ParseError, ScenarioError};
pub use report::{parse_machine, render_machine, render_text, Report, ResultEntry, SCHEMA_VERSION};
pub use run::{run_scenario, RunOptions, Selection};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub seed: u64,
    pub task: TaskSpec,
    pub points: BTreeMap<String, SpacetimePoint>,
    pub strategies: Vec<Strategy>,
    pub models: BTreeMap<String, OracleInputModel>,
    pub requests: Vec<Request>,
}

impl Scenario {
    pub fn strategy(&self, name: &str) -> Option<&Strategy> {
        self.strategies.iter().find(|s| s.name == name)
    }
}

/// One line of the `[analyze]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub line: usize,
    /// The line as written.
    pub text: String,
    pub analysis: Analysis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Routing {
        expect: Status,
    },
    CloneDemand {
        threshold: f64,
        expect: Status,
    },
    Summoning {
        expect: Status,
    },
    Deducible {
        model: String,
        at: SpacetimePoint,
        expect: Status,
    },
    Unveiling {
        model: Option<String>,
        commit: SpacetimePoint,
        unveil: Vec<SpacetimePoint>,
        class: ModelClass,
        grid: usize,
        expect: Status,
    },
    Budget {
        strategy: String,
        expect: Status,
    },
    Simulate {
        strategy: String,
        mode: SimMode,
        expect: SimExpect,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Routing { .. } => "routing",
            Analysis::CloneDemand { .. } => "clone_demand",
            Analysis::Summoning { .. } => "summoning",
            Analysis::Deducible { .. } => "deducible",
            Analysis::Unveiling { .. } => "unveiling",
            Analysis::Budget { .. } => "budget",
            Analysis::Simulate { .. } => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Exact,
    MonteCarlo { trials: usize },
}

/// What a simulation is expected to show. Unset fields are not checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimExpect {
    pub success: Option<f64>,
    /// Absolute tolerance on `success` and `min_fidelity`. Without it an
    /// exact run allows 1e-9 and a sampled run checks the Wilson interval.
    pub tol: Option<f64>,
    pub min_fidelity: Option<f64>,
    /// An error kind that must occur in some branch.
    pub error: Option<String>,
    pub predicate: Option<bool>,
}
