//! Activity diagrams for time-window map labeling.
//!
//! Each event (a label with a timestamp and a weight) receives an activity
//! region in the configuration space of time windows. [`greedy`] builds a
//! diagram with the max-volume-first heuristic, [`oracle`] computes exact
//! optima for small instances, [`generators`] builds the adversarial
//! families, and [`analysis`] relates the two through approximation ratios.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod generators;
pub mod geometry;
pub mod greedy;
pub mod io;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{conflicts, LabelShape, Point};
pub use greedy::{solve_greedy, GreedyTrace};
pub use model::{
    ActivityDiagram, ActivityRegion, Event, EventId, Instance, TimeWindowQuery, ValidationReport,
    Violation,
};
pub use oracle::{solve_optimal, OracleConfig, OracleMode, OracleSolution};
