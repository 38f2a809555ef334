pub mod geometry;
pub mod quantum;
pub mod tasks;
pub mod engine;
pub mod analyzers;
pub mod scenario;
