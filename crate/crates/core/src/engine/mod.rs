//! Discrete-event simulation of Alice's agents carrying out a strategy.

mod run;
mod sim;
pub mod strategy;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use run::{estimate, execute, execute_sampled, run, Branch, ErrorStat, Estimate, Execution, Mode, OutputStat, PredicateCheck, RunResult};
pub use sim::LedgerEntry;
pub use strategy::{
    Action, Agent, Basis, Destination, Instr, OutputItem, PairKind, Resource, Route, StationSpec, Strategy,
};
pub use trace::{audit_trace, trace_digest, EventKind, TraceEvent};

use crate::geometry::{GeometryError, RoutingConfig};
use crate::quantum::QuantumError;
use crate::tasks::TaskError;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum EngineError {
    #[error("causality violation: {0}")]
    Causality(String),
    #[error("region violation: {0}")]
    Region(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid strategy: {0}")]
    Strategy(String),
    #[error("quantum error: {0}")]
    Quantum(String),
    #[error("task error: {0}")]
    Task(String),
    #[error("more than {0} branches")]
    BranchCap(usize),
}

impl EngineError {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::Causality(_) => "causality",
            EngineError::Region(_) => "region",
            EngineError::Budget(_) => "budget",
            EngineError::Strategy(_) => "strategy",
            EngineError::Quantum(_) => "quantum",
            EngineError::Task(_) => "task",
            EngineError::BranchCap(_) => "branch_cap",
        }
    }
}

impl From<QuantumError> for EngineError {
    fn from(e: QuantumError) -> Self {
        EngineError::Quantum(e.to_string())
    }
}

impl From<TaskError> for EngineError {
    fn from(e: TaskError) -> Self {
        EngineError::Task(e.to_string())
    }
}

impl From<GeometryError> for EngineError {
    fn from(e: GeometryError) -> Self {
        EngineError::Strategy(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub routing: RoutingConfig,
    /// Exact mode gives up beyond this many leaves per assignment.
    pub branch_cap: usize,
    /// Abort a run whose messages exceed a region budget.
    pub enforce_budgets: bool,
    /// Seeds Haar draws in exact mode and every trial in sampling mode.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            routing: RoutingConfig::default(),
            branch_cap: 1 << 16,
            enforce_budgets: false,
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests;
