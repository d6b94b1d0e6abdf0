//! Batch front end for the `copart` solvers: JSON problem files in, JSON
//! reports and posterior CSVs out.

pub mod commands;
pub mod error;
pub mod problem;
pub mod report;

pub use commands::{compare, solve, Cli, Command, CompareArgs, CompareOutcome, CompareRow, SolveArgs};
pub use error::CliError;
pub use problem::{ConstraintEntry, ConstraintName, ImpurityName, OptionsEntry, ProblemFile, SolverName, SweepName};
pub use report::{write_posteriors, ReportFile};
