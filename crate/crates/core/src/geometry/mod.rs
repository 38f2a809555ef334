//! Minkowski-space events, causal classification, excluded regions and
//! causal path search.
//!
//! Units are natural (`c = 1`). A point carries one time coordinate and
//! `d` spatial coordinates, `d ∈ {1, 3}`. Future light cones are closed: a
//! point lies in its own causal future.

mod point;
mod region;
mod routing;

pub use point::{
    boost_1d, causal_relation, in_causal_future, interval, CausalKind, CausalRelation, Direction,
    SpacetimePoint,
};
pub use region::{Budget, Region, SpacetimeBox, Span};
pub use routing::{causal_path_exists, find_causal_path, PathOutcome, RoutingConfig};

use thiserror::Error;

/// Relative guard band on the interval sign. `|s| < GUARD * scale²` counts as lightlike.
pub const INTERVAL_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right} spatial axes")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unsupported spatial dimension {0} (expected 1 or 3)")]
    UnsupportedDimension(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("box has non-positive extent on axis {axis}")]
    DegenerateBox { axis: usize },
    #[error("region `{0}` is impenetrable but carries a nonzero budget")]
    ImpenetrableWithBudget(String),
    #[error("region `{0}` has no boxes")]
    EmptyRegion(String),
    #[error("routing resolution must be positive")]
    NonPositiveResolution,
}
