//! Multi-agent path finding on 4-connected grids: LaCAM search with PIBT,
//! optional local and global guidance, and anytime LNS refinement.

pub mod anytime;
pub mod dist;
pub mod global_guidance;
pub mod grid;
pub mod instance;
pub mod lacam;
pub mod local_guidance;
pub mod metrics;
pub mod pibt;
pub mod solution;
pub mod validate;

pub use anytime::{refine, LnsOptions, RefineOutcome, TracePoint};
pub use dist::DistTable;
pub use global_guidance::{build_suo, GlobalGuidance, SuoParams};
pub use grid::{Grid, MapError, VertexId, NO_VERTEX};
pub use instance::{Configuration, Instance, InstanceError, ScenarioError};
pub use lacam::{solve, Deadline, GuidanceMode, SolveError, SolveStats, Solver, SolverOptions};
pub use local_guidance::{GoalWait, Guidance, GuidanceParams, PathCost};
pub use metrics::{compute_metrics, Metrics};
pub use solution::Solution;
pub use validate::{validate, Violation};
