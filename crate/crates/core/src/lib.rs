//! Ground-holding for airspace cells under sliding-window capacities.
//!
//! An [`Instance`] is preprocessed into a [`PreprocessedModel`] that keeps
//! only the constraints any assignment could violate; [`solve`] then runs
//! the tabu meta-heuristic over per-flight ground delays.

// `!(x > y)` on floats is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod generator;
pub mod instance;
pub mod oracle;
pub mod preprocess;
pub mod report;
pub mod search;

pub use engine::{Assignment, Engine, ObjectiveWeights};
pub use instance::{
    Cell, CellEntry, Flight, Instance, InstanceError, ScenarioParams, TimeMin, Window,
};
pub use preprocess::{ModelSummary, PreprocessedModel};
pub use report::{ReportOptions, SolveReport, StatsPopulation};
pub use search::{solve, solve_multi_start, SearchConfig, SearchError, SolveResult};
