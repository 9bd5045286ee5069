//! Benchmark harness around `lacam-lg`: run matrices of map/scenario/agent
//! count/guidance mode, validate every solution, and export result rows,
//! solutions, heatmaps and LNS traces.

pub mod output;
pub mod runner;
pub mod synth;

pub use output::{read_solution, validate_solution_file, SolutionFile};
pub use runner::{run_benchmark, BenchError, Loaded, Row, RunConfig, RunOutputs};
pub use synth::MapFamily;
